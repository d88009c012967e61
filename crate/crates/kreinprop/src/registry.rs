//! Every identity and cross-check the crate verifies, with the scenario output that reaches it.
//!
//! Check keys in run reports are exactly the `key` fields below.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Evolution,
    Kleingordon,
    Quant,
}

/// Scenario outputs, named as in run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Evaluated on every run.
    Run,
    Identities,
    Kernels,
    Resolvent,
    Bogoliubov,
    FockChecks,
    FeynmanLimit,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Run => "run",
            OutputKind::Identities => "identities",
            OutputKind::Kernels => "kernels",
            OutputKind::Resolvent => "resolvent",
            OutputKind::Bogoliubov => "bogoliubov",
            OutputKind::FockChecks => "fock_checks",
            OutputKind::FeynmanLimit => "feynman_limit",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityEntry {
    pub key: &'static str,
    pub module: Module,
    pub output: OutputKind,
    pub statement: &'static str,
    /// Only evaluated on some scenarios (lattice models, W = 0, few modes).
    pub conditional: bool,
}

const fn entry(key: &'static str, module: Module, output: OutputKind, statement: &'static str) -> IdentityEntry {
    IdentityEntry { key, module, output, statement, conditional: false }
}

const fn conditional(key: &'static str, module: Module, output: OutputKind, statement: &'static str) -> IdentityEntry {
    IdentityEntry { key, module, output, statement, conditional: true }
}

use Module::*;
use OutputKind::*;

pub const IDENTITIES: &[IdentityEntry] = &[
    entry("pseudo_unitarity", Evolution, Run, "R(t,s)†QR(t,s) = Q"),
    entry("pj_forward_backward", Evolution, Identities, "E^PJ = E^∨ − E^∧"),
    entry("pj_out_plus_minus", Evolution, Identities, "E^PJ = E₊^(+) − E₊^(−)"),
    entry("pj_in_plus_minus", Evolution, Identities, "E^PJ = E₋^(+) − E₋^(−)"),
    entry("in_out_bisolution_difference", Evolution, Identities, "E₊^(+) + E₊^(−) − E₋^(+) − E₋^(−) = R(S₊ − S₋)"),
    entry("feynman_difference", Evolution, Identities, "E^F − E^F̄ − ½ΣE_±^(±) = (1/16)RΥ⁻¹[S₊−S₋,[S₊,S₋]]"),
    entry("feynman_difference_alt", Evolution, Identities, "the same with coefficient 1/8, informational"),
    entry("feynman_sum", Evolution, Identities, "E^F + E^F̄ − E^∨ − E^∧ = ¼RΥ⁻¹[S₊,S₋]"),
    entry("feynman_sum_alt", Evolution, Identities, "the same with the opposite sign, informational"),
    conditional("feyn_plus_afeyn", Evolution, Identities, "E^F + E^F̄ = E^∨ + E^∧ when [S₊,S₋] = 0"),
    conditional("feyn_minus_afeyn", Evolution, Identities, "E^F − E^F̄ = ½ΣE_±^(±) when [S₊,S₋] = 0"),
    entry("q_adjoint_feynman", Evolution, Identities, "⟨E^F x, Qy⟩ + ⟨x, QE^F̄ y⟩ = 0"),
    entry("q_adjoint_forward_backward", Evolution, Identities, "⟨E^∨ x, Qy⟩ + ⟨x, QE^∧ y⟩ = 0"),
    entry("bisolution_positivity", Evolution, Identities, "±Q E_±^(±) is positive on grid functions"),
    entry("charge_conservation", Kleingordon, Run, "(γ_t u | Q γ_t v) is independent of t"),
    conditional("lattice_mode_signs", Kleingordon, Identities, "in/out involutions equal the mode-by-mode sign formula"),
    entry("propagator_hermiticity", Kleingordon, Kernels, "G^PJ† = −G^PJ, G^∨† = G^∧, G^F† = G^F̄"),
    entry("left_inverse_forward", Kleingordon, Kernels, "G^∨ K f = f"),
    entry("left_inverse_backward", Kleingordon, Kernels, "G^∧ K f = f"),
    entry("left_inverse_feynman", Kleingordon, Kernels, "G^F K f = f"),
    entry("left_inverse_anti_feynman", Kleingordon, Kernels, "G^F̄ K f = f"),
    entry("dump_round_trip", Evolution, Kernels, "kernel dumps read back bit-exactly"),
    entry("resolvent_equation", Kleingordon, Resolvent, "G_z − G_w = (w − z)G_z G_w"),
    entry("resolvent_adjoint", Kleingordon, Resolvent, "G_z^(+−)(t,s)† = G_z̄^(−+)(s,t)"),
    entry("twisted_pseudo_unitarity", Kleingordon, Resolvent, "R_z̄†QR_z = Q"),
    entry("feynman_limit", Kleingordon, FeynmanLimit, "G_{±iε} → G^F, G^F̄ as ε → 0"),
    entry("det_chain", Quant, Bogoliubov, "det(1−c†c) = det(1−dd†) = |det p†p|⁻¹ = det Υ⁻¹"),
    entry("shale_c_agreement", Quant, Bogoliubov, "‖c‖_F from the Bogoliubov blocks equals ‖c‖_F of the pair"),
    entry("fock_overlap", Quant, FockChecks, "⟨Ω₊|Ω₋⟩ from the squeezed vector equals det(1−c†c)^{1/2} or ^{1/4}"),
    conditional("fock_two_point", Quant, FockChecks, "⟨Ω₊|ψ(v)ψ*(w)Ω₋⟩/⟨Ω₊|Ω₋⟩ = (v|QΠ₊^(+)Υ⁻¹Π₋^(+)w)"),
    conditional("peierls_commutator", Quant, FockChecks, "[ψ(v), ψ*(w)] = (v|Qw)"),
    conditional("natural_implementer_amplitude", Quant, FockChecks, "⟨Ω₂|R̂Ω₁⟩ = det(1−c†c)^{1/4} and ‖R̂Ω₁‖ = 1"),
    conditional("natural_implementer_intertwining", Quant, FockChecks, "R̂φ₁(w) = φ₂(Rw)R̂ below the cutoff"),
    conditional("feynman_two_point", Quant, FockChecks, "⟨Ω₊|Tψ[f₁]ψ*[f₂]Ω₋⟩/⟨Ω₊|Ω₋⟩ = i∬f̄₁G^F f₂"),
    conditional("anti_feynman_two_point", Quant, FockChecks, "⟨Ω₋|T̄ψ[f₁]ψ*[f₂]Ω₊⟩/⟨Ω₋|Ω₊⟩ = −i∬f̄₁G^F̄ f₂"),
    conditional("smeared_peierls", Quant, FockChecks, "−i(w₁|Qw₂) = ∬f̄₁G^PJ f₂"),
];

pub fn lookup(key: &str) -> Option<&'static IdentityEntry> {
    IDENTITIES.iter().find(|e| e.key == key)
}
