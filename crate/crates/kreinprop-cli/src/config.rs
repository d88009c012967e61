//! Scenario configuration: JSON, schema version 1, unknown keys rejected.

use std::path::Path;

use kreinprop::evolution::Scheme;
use kreinprop::quant::Formalism;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem with the JSON path where it occurred.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: Scenario,
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Vec<OutputRequest>,
    #[serde(default = "default_formalism")]
    pub formalism: Formalism,
    /// Seed of the random grid functions used by pairing and Hermiticity sweeps.
    #[serde(default)]
    pub seed: u64,
}

fn default_formalism() -> Formalism {
    Formalism::Charged
}

fn one() -> f64 {
    1.0
}

/// Model families. `sites` absent means a single mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// −∂t² − ω², constant.
    MinkowskiMode { omega: f64 },
    /// Periodic lattice −Δ_h + m², constant.
    LatticeStatic {
        sites: usize,
        #[serde(default = "one")]
        spacing: f64,
        mass: f64,
    },
    /// Mass jumps from m0 to m1 at t = 0.
    MassQuench {
        #[serde(default)]
        sites: Option<usize>,
        #[serde(default = "one")]
        spacing: f64,
        m0: f64,
        m1: f64,
    },
    /// m²(t) = m0² + (m1² − m0²)(1 + tanh(t/width))/2.
    AdiabaticPulse {
        #[serde(default)]
        sites: Option<usize>,
        #[serde(default = "one")]
        spacing: f64,
        m0: f64,
        m1: f64,
        width: f64,
    },
    /// Electric potential V(t, x) = amplitude·sech²(t/width)·cos(2πx/sites), W = −V.
    /// A single mode takes V(t) = amplitude·sech²(t/width), which is pure gauge.
    ElectricPulse {
        #[serde(default)]
        sites: Option<usize>,
        #[serde(default = "one")]
        spacing: f64,
        mass: f64,
        amplitude: f64,
        width: f64,
    },
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::MinkowskiMode { .. } => "minkowski_mode",
            Scenario::LatticeStatic { .. } => "lattice_static",
            Scenario::MassQuench { .. } => "mass_quench",
            Scenario::AdiabaticPulse { .. } => "adiabatic_pulse",
            Scenario::ElectricPulse { .. } => "electric_pulse",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_minus: f64,
    pub t_plus: f64,
    pub n: usize,
    /// Coefficients are frozen outside [−T, T].
    #[serde(default)]
    pub freeze: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_scheme() -> Scheme {
    Scheme::MidpointExp
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identities: f64,
    /// ‖R†QR − Q‖ per unit time.
    pub pseudo_unitarity: f64,
    /// Relative drift of the charge pairing along evolved solutions.
    pub charge: f64,
    pub lattice_signs: f64,
    pub hermiticity: f64,
    pub left_inverse: f64,
    pub resolvent: f64,
    pub resolvent_adjoint: f64,
    pub twisted_pseudo_unitarity: f64,
    /// Discrepancy of the ε = 0 row of the Feynman limit.
    pub feynman_limit: f64,
    pub det_chain: f64,
    pub shale: f64,
    /// Threshold on the Hilbert–Schmidt norms for "implementable".
    pub shale_threshold: f64,
    pub fock: f64,
    pub implementer: f64,
    pub feynman_two_point: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identities: 1e-8,
            pseudo_unitarity: 1e-10,
            charge: 1e-9,
            lattice_signs: 1e-10,
            hermiticity: 1e-10,
            left_inverse: 1e-4,
            resolvent: 1e-6,
            resolvent_adjoint: 1e-8,
            twisted_pseudo_unitarity: 1e-8,
            feynman_limit: 1e-10,
            det_chain: 1e-9,
            shale: 1e-9,
            shale_threshold: 10.0,
            fock: 1e-8,
            implementer: 1e-6,
            feynman_two_point: 1e-5,
        }
    }
}

impl Tolerances {
    fn fields(&self) -> [(&'static str, f64); 16] {
        [
            ("identities", self.identities),
            ("pseudo_unitarity", self.pseudo_unitarity),
            ("charge", self.charge),
            ("lattice_signs", self.lattice_signs),
            ("hermiticity", self.hermiticity),
            ("left_inverse", self.left_inverse),
            ("resolvent", self.resolvent),
            ("resolvent_adjoint", self.resolvent_adjoint),
            ("twisted_pseudo_unitarity", self.twisted_pseudo_unitarity),
            ("feynman_limit", self.feynman_limit),
            ("det_chain", self.det_chain),
            ("shale", self.shale),
            ("shale_threshold", self.shale_threshold),
            ("fock", self.fock),
            ("implementer", self.implementer),
            ("feynman_two_point", self.feynman_two_point),
        ]
    }

    /// Every pass/fail tolerance multiplied by `s`; the Shale threshold is not a tolerance.
    pub fn scaled(&self, s: f64) -> Tolerances {
        Tolerances {
            identities: self.identities * s,
            pseudo_unitarity: self.pseudo_unitarity * s,
            charge: self.charge * s,
            lattice_signs: self.lattice_signs * s,
            hermiticity: self.hermiticity * s,
            left_inverse: self.left_inverse * s,
            resolvent: self.resolvent * s,
            resolvent_adjoint: self.resolvent_adjoint * s,
            twisted_pseudo_unitarity: self.twisted_pseudo_unitarity * s,
            feynman_limit: self.feynman_limit * s,
            det_chain: self.det_chain * s,
            shale: self.shale * s,
            shale_threshold: self.shale_threshold,
            fock: self.fock * s,
            implementer: self.implementer * s,
            feynman_two_point: self.feynman_two_point * s,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputRequest {
    Identities,
    Kernels {
        /// Write kernel dumps (also enabled by `--dump-kernels`).
        #[serde(default)]
        dump: bool,
        #[serde(default = "default_encoding")]
        encoding: kreinprop::evolution::DumpFormat,
    },
    Resolvent {
        /// Spectral parameters z as [re, im].
        z: Vec<[f64; 2]>,
        /// Second parameter w of the resolvent equation.
        w: [f64; 2],
        #[serde(default = "default_anchors")]
        anchors: kreinprop::kleingordon::ResolventAnchors,
    },
    Bogoliubov,
    FockChecks {
        #[serde(default = "default_nmax")]
        nmax: usize,
        #[serde(default = "default_implementer_nmax")]
        implementer_nmax: usize,
    },
    FeynmanLimit {
        eps: Vec<f64>,
    },
}

fn default_encoding() -> kreinprop::evolution::DumpFormat {
    kreinprop::evolution::DumpFormat::Binary
}

fn default_anchors() -> kreinprop::kleingordon::ResolventAnchors {
    kreinprop::kleingordon::ResolventAnchors::Frequency
}

fn default_nmax() -> usize {
    12
}

fn default_implementer_nmax() -> usize {
    40
}

impl OutputRequest {
    pub fn name(&self) -> &'static str {
        match self {
            OutputRequest::Identities => "identities",
            OutputRequest::Kernels { .. } => "kernels",
            OutputRequest::Resolvent { .. } => "resolvent",
            OutputRequest::Bogoliubov => "bogoliubov",
            OutputRequest::FockChecks { .. } => "fock_checks",
            OutputRequest::FeynmanLimit { .. } => "feynman_limit",
        }
    }
}

/// Parses and validates a configuration.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("$", format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive and finite, got {x}")))
    }
}

fn sites_ok(path: &str, sites: Option<usize>, spacing: f64) -> Result<(), ConfigError> {
    if let Some(s) = sites {
        if s < 2 {
            return Err(ConfigError::new(format!("{path}.sites"), format!("must be at least 2, got {s}")));
        }
    }
    positive(&format!("{path}.spacing"), spacing)
}

pub fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::new(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        ));
    }
    let g = &cfg.grid;
    if g.n < 64 {
        return Err(ConfigError::new("grid.n", format!("must be at least 64, got {}", g.n)));
    }
    if !(g.t_minus.is_finite() && g.t_plus.is_finite() && g.t_minus < g.t_plus) {
        return Err(ConfigError::new("grid", format!("needs t_minus < t_plus, got [{}, {}]", g.t_minus, g.t_plus)));
    }
    if let Some(t) = g.freeze {
        positive("grid.freeze", t)?;
        if g.t_minus > -t - 2.0 || g.t_plus < t + 2.0 {
            return Err(ConfigError::new(
                "grid",
                format!("[{}, {}] must contain [−T−2, T+2] for freeze T = {t}", g.t_minus, g.t_plus),
            ));
        }
    }
    for (name, x) in cfg.tolerances.fields() {
        positive(&format!("tolerances.{name}"), x)?;
    }
    let p = "scenario";
    match cfg.scenario {
        Scenario::MinkowskiMode { omega } => positive("scenario.omega", omega)?,
        Scenario::LatticeStatic { sites, spacing, mass } => {
            sites_ok(p, Some(sites), spacing)?;
            positive("scenario.mass", mass)?;
        }
        Scenario::MassQuench { sites, spacing, m0, m1 } => {
            sites_ok(p, sites, spacing)?;
            positive("scenario.m0", m0)?;
            positive("scenario.m1", m1)?;
        }
        Scenario::AdiabaticPulse { sites, spacing, m0, m1, width } => {
            sites_ok(p, sites, spacing)?;
            positive("scenario.m0", m0)?;
            positive("scenario.m1", m1)?;
            positive("scenario.width", width)?;
        }
        Scenario::ElectricPulse { sites, spacing, mass, amplitude, width } => {
            sites_ok(p, sites, spacing)?;
            positive("scenario.mass", mass)?;
            positive("scenario.width", width)?;
            if !amplitude.is_finite() {
                return Err(ConfigError::new("scenario.amplitude", "must be finite"));
            }
        }
    }
    for (k, out) in cfg.outputs.iter().enumerate() {
        let path = format!("outputs[{k}]");
        match out {
            OutputRequest::Resolvent { z, w, .. } => {
                if z.is_empty() {
                    return Err(ConfigError::new(format!("{path}.z"), "needs at least one value"));
                }
                if z.iter().chain(std::iter::once(w)).flatten().any(|x| !x.is_finite()) {
                    return Err(ConfigError::new(path, "spectral parameters must be finite"));
                }
            }
            OutputRequest::FockChecks { nmax, implementer_nmax } => {
                for (name, v) in [("nmax", nmax), ("implementer_nmax", implementer_nmax)] {
                    if *v == 0 || *v > kreinprop::quant::MAX_NMAX {
                        return Err(ConfigError::new(
                            format!("{path}.{name}"),
                            format!("must lie in 1..={}, got {v}", kreinprop::quant::MAX_NMAX),
                        ));
                    }
                }
            }
            OutputRequest::FeynmanLimit { eps } => {
                if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                    return Err(ConfigError::new(format!("{path}.eps"), "needs non-negative finite values"));
                }
            }
            _ => {}
        }
        if cfg.outputs[..k].iter().any(|o| o.name() == out.name()) {
            return Err(ConfigError::new(path, format!("output {} requested twice", out.name())));
        }
    }
    Ok(())
}
