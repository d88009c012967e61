//! Runs the requested outputs of one scenario and collects checks, sections and files.

use std::sync::Arc;
use std::time::Instant;

use kreinprop::evolution::{
    bisolution_kernels, classical_kernels, feynman_kernels, identity_residuals, in_out_involutions, read_dump,
    solve_evolution, write_dump, Bisolutions, ClassicalKernels, DumpBlock, DumpFormat, DumpHeader, Evolution,
    FeynmanKernels, IdentityOptions, InOutData, Kernel,
};
use kreinprop::kleingordon::{
    assemble_phase_space, charge_drift, feynman_limit_demo, kg_left_inverse_check, lattice_sign_formula,
    resolvent_equation_check, spacetime_propagators, twisted_pseudo_unitarity, PhaseSpace, PropagatorSet,
    ResolventAnchors,
};
use kreinprop::krein::AdmissibleInvolution;
use kreinprop::linalg::{c, max_abs};
use kreinprop::quant::{
    bogoliubov_report, feynman_two_point_check, fock_oracle_in_out, fock_oracle_two_point,
    natural_implementer_truncated, shale_diagnostics, two_point_in_out, Conjugation, FeynmanTwoPoint, Formalism,
    GaussianInOut,
};
use kreinprop::{CVec, Error, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{OutputRequest, ScenarioConfig, Tolerances};
use crate::model::{build, Model, ModelInfo};
use crate::report::{checks_csv, csv_text, emit, Check, ManifestEntry, OutputError, RunReport, Sink, Summary, Timing};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub sink: Sink,
    pub tol_scale: f64,
    pub dump_kernels: bool,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { sink: Sink::Stdout, tol_scale: 1.0, dump_kernels: false, seed: None }
    }
}

/// Everything computed once per run and shared by the outputs.
struct Core {
    model: Model,
    ph: PhaseSpace,
    evo: Arc<Evolution>,
    io: InOutData,
    kernels: Option<(ClassicalKernels, Bisolutions, FeynmanKernels, PropagatorSet)>,
}

impl Core {
    fn kernels(&mut self) -> Result<&(ClassicalKernels, Bisolutions, FeynmanKernels, PropagatorSet)> {
        self.ensure_kernels()?;
        Ok(self.kernels.as_ref().expect("just set"))
    }

    fn ensure_kernels(&mut self) -> Result<()> {
        if self.kernels.is_none() {
            let k = classical_kernels(&self.evo);
            let b = bisolution_kernels(&self.evo, &self.io);
            let f = feynman_kernels(&self.evo, &self.io)?;
            let p = spacetime_propagators(&k, &b, &f);
            self.kernels = Some((k, b, f, p));
        }
        Ok(())
    }

    fn n(&self) -> usize {
        self.model.kg.n
    }

    /// In and out involutions carried to t₀.
    fn pair_at_start(&self) -> Result<(AdmissibleInvolution, AdmissibleInvolution)> {
        self.io.involutions_at(&self.ph.space, 0)
    }
}

struct Collector {
    checks: Vec<Check>,
    sections: Map<String, Value>,
    manifest: Vec<ManifestEntry>,
    errors: Vec<OutputError>,
    sink: Sink,
}

impl Collector {
    fn section(&mut self, name: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or_else(|e| json!({ "serialization_error": e.to_string() }));
        self.sections.insert(name.to_string(), v);
    }

    fn file(&mut self, output: &'static str, rel: &str, bytes: std::io::Result<Vec<u8>>) {
        let res = bytes.and_then(|b| emit(&self.sink, &mut self.manifest, output, rel, &b));
        if let Err(e) = res {
            self.errors.push(OutputError { output, message: format!("{rel}: {e}") });
        }
    }
}

/// Smooth bump supported in [a, b], with component k scaled by 1 + k/2.
fn bump(model: &Model, a: f64, b: f64) -> Vec<CVec> {
    let n = model.kg.n;
    model
        .grid
        .nodes()
        .iter()
        .map(|&t| {
            let x = (2.0 * t - a - b) / (b - a);
            let v = if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
            CVec::from_fn(n, |k, _| c(v * (1.0 + 0.5 * k as f64), 0.0))
        })
        .collect()
}

fn fixed_vector(dim: usize, phase: f64) -> CVec {
    CVec::from_fn(dim, |k, _| c((1.0 + k as f64 + phase).cos(), (0.5 * k as f64 - phase).sin()))
}

fn setup(cfg: &ScenarioConfig) -> Result<Core> {
    let model = build(cfg)?;
    let ph = assemble_phase_space(model.kg.clone(), &model.grid)?;
    let evo = Arc::new(solve_evolution(&ph.schedule(), model.grid, cfg.grid.scheme)?);
    let io = in_out_involutions(&ph.schedule(), &evo)?;
    Ok(Core { model, ph, evo, io, kernels: None })
}

/// Executes the configuration. Files are written to `opts.sink`; the report itself is not.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> RunReport {
    let start = Instant::now();
    let tol = cfg.tolerances.scaled(opts.tol_scale);
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut col = Collector {
        checks: Vec::new(),
        sections: Map::new(),
        manifest: Vec::new(),
        errors: Vec::new(),
        sink: opts.sink.clone(),
    };
    let mut model_info = None;
    match setup(cfg) {
        Err(e) => col.errors.push(OutputError { output: "run", message: e.to_string() }),
        Ok(mut core) => {
            let v = &core.ph.validation;
            model_info = Some(ModelInfo {
                scenario: cfg.scenario.kind(),
                n: core.n(),
                dim: core.ph.space.dim,
                shift_b: v.b,
                w_smallness: v.a,
                warning: v.warning.clone(),
            });
            if let Err(e) = structure_checks(&core, &tol, &mut col) {
                col.errors.push(OutputError { output: "run", message: e.to_string() });
            }
            for out in &cfg.outputs {
                let name = out.name();
                let res = match out {
                    OutputRequest::Identities => identities(&mut core, &tol, seed, &mut col),
                    OutputRequest::Kernels { dump, encoding } => {
                        kernels(&mut core, &tol, seed, *dump || opts.dump_kernels, *encoding, &mut col)
                    }
                    OutputRequest::Resolvent { z, w, anchors } => resolvent(&core, &tol, z, *w, *anchors, &mut col),
                    OutputRequest::Bogoliubov => bogoliubov(&core, &tol, cfg.formalism, &mut col),
                    OutputRequest::FockChecks { nmax, implementer_nmax } => {
                        fock_checks(&mut core, &tol, cfg.formalism, *nmax, *implementer_nmax, &mut col)
                    }
                    OutputRequest::FeynmanLimit { eps } => feynman_limit(&mut core, &tol, eps, &mut col),
                };
                match res {
                    Err(e) => col.errors.push(OutputError { output: name, message: e.to_string() }),
                    Ok(()) => {
                        let bytes = serde_json::to_vec_pretty(&col.sections[name]).map_err(std::io::Error::from);
                        col.file(name, &format!("sections/{name}.json"), bytes);
                    }
                }
            }
        }
    }
    let csv = checks_csv(&col.checks);
    col.file("run", "checks.csv", csv);
    let failed = col.checks.iter().filter(|c| c.failed()).count();
    RunReport {
        schema_version: crate::config::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        model: model_info,
        summary: Summary {
            checks: col.checks.len(),
            failed,
            errors: col.errors.len(),
            all_pass: failed == 0 && col.errors.is_empty(),
        },
        checks: col.checks,
        sections: col.sections,
        manifest: col.manifest,
        errors: col.errors,
        timing: Timing { total_ms: start.elapsed().as_millis() },
    }
}

/// Pseudo-unitarity and charge conservation, on every run.
fn structure_checks(core: &Core, tol: &Tolerances, col: &mut Collector) -> Result<()> {
    let length = core.model.grid.t_plus - core.model.grid.t_minus;
    let drift = core.evo.q_drift();
    col.checks.push(Check::new("pseudo_unitarity", "run", drift / length, tol.pseudo_unitarity));
    let dim = core.ph.space.dim;
    let (u0, v0) = (fixed_vector(dim, 0.0), fixed_vector(dim, 0.7));
    let charge = charge_drift(&core.ph, &core.evo, &u0, &v0)?;
    let scale = u0.norm() * v0.norm();
    col.checks.push(Check::new("charge_conservation", "run", charge.evolved / scale, tol.charge));
    col.section(
        "run",
        json!({
            "q_drift": drift,
            "step_q_residual": core.evo.step_q_residual(),
            "charge": charge,
            "charge_relative_cauchy": charge.cauchy / scale,
        }),
    );
    Ok(())
}

fn identities(core: &mut Core, tol: &Tolerances, seed: u64, col: &mut Collector) -> Result<()> {
    let opts = IdentityOptions { tol: tol.identities, seed, ..IdentityOptions::default() };
    core.ensure_kernels()?;
    let (k, b, f, _) = core.kernels.as_ref().expect("computed");
    let rep = identity_residuals(k, b, f, &core.io, opts);
    for r in rep.residuals.iter().filter(|r| r.applicable) {
        let mut ch = Check::new(r.key, "identities", r.sampled_max.max(r.bound), r.tol).with_pass(r.pass);
        if r.informational {
            ch = ch.informational();
        }
        col.checks.push(ch);
    }
    let rows: Vec<Vec<String>> = rep
        .residuals
        .iter()
        .map(|r| {
            vec![
                r.key.to_string(),
                format!("{:e}", r.sampled_max),
                format!("{:e}", r.bound),
                r.pairs.to_string(),
                r.pass.to_string(),
                r.applicable.to_string(),
                r.informational.to_string(),
            ]
        })
        .collect();
    col.file(
        "identities",
        "identities.csv",
        csv_text(&["key", "sampled_max", "bound", "pairs", "pass", "applicable", "informational"], rows),
    );
    let mut section = serde_json::to_value(&rep)?;
    if let (Some((sites, h)), Some(m2), true) = (core.model.lattice, core.model.mass2.as_ref(), core.model.real) {
        let g = core.model.grid;
        let minus = lattice_sign_formula(sites, h, m2(g.t_minus))?;
        let plus = lattice_sign_formula(sites, h, m2(g.t_plus))?;
        let dm = max_abs(&(&core.io.s_minus.s - &minus));
        let dp = max_abs(&(&core.io.s_plus.s - &plus));
        col.checks.push(Check::new("lattice_mode_signs", "identities", dm.max(dp), tol.lattice_signs));
        section["lattice_mode_signs"] = json!({ "in": dm, "out": dp });
    }
    col.section("identities", section);
    Ok(())
}

const DUMP_TAGS: [&str; 9] = ["PJ", "forward", "backward", "F", "Fbar", "out_plus", "out_minus", "in_plus", "in_minus"];

fn dump_one(kernel: &Kernel, block: DumpBlock, encoding: DumpFormat) -> Result<(Vec<u8>, bool)> {
    let dim = kernel.dim();
    let (rows, cols, view): (usize, usize, Box<dyn Fn(usize, usize) -> kreinprop::CMat>) = match block {
        DumpBlock::Full => (dim, dim, Box::new(|i, j| kernel.eval(i, j))),
        DumpBlock::UpperRight => {
            let n = dim / 2;
            (n, n, Box::new(move |i, j| kernel.eval(i, j).view((0, n), (n, n)).into_owned()))
        }
    };
    let header = DumpHeader::new(kernel.tag.name(), block, rows, cols, kernel.grid(), encoding);
    let mut bytes = Vec::new();
    write_dump(&mut bytes, &header, &view)?;
    let back = read_dump(bytes.as_slice())?;
    let exact = back.header == header && back.records.iter().all(|(i, j, m)| *m == view(*i, *j));
    Ok((bytes, exact))
}

fn kernels(
    core: &mut Core,
    tol: &Tolerances,
    seed: u64,
    dump: bool,
    encoding: DumpFormat,
    col: &mut Collector,
) -> Result<()> {
    let kg = core.model.kg.clone();
    let grid = core.model.grid;
    let f = {
        let span = grid.t_plus - grid.t_minus;
        bump(&core.model, grid.t_minus + 0.25 * span, grid.t_plus - 0.25 * span)
    };
    let (k, b, fk, props) = core.kernels()?;
    let herm = props.hermiticity(tol.hermiticity, seed, 64)?;
    col.checks.push(Check::new("propagator_hermiticity", "kernels", herm.worst(), tol.hermiticity).with_pass(herm.all_pass()));
    let mut left = Vec::new();
    for (key, g) in [
        ("left_inverse_forward", &props.forward),
        ("left_inverse_backward", &props.backward),
        ("left_inverse_feynman", &props.f),
        ("left_inverse_anti_feynman", &props.fbar),
    ] {
        let r = kg_left_inverse_check(&kg, g, &f)?;
        col.checks.push(Check::new(key, "kernels", r.relative, tol.left_inverse));
        left.push(r);
    }
    // G(t_i, t_mid)[0,0] for every propagator, for plotting.
    let mid = grid.n / 2;
    let all = props.all();
    let mut header = vec!["t".to_string()];
    for g in all {
        header.push(format!("{}_re", g.tag.name()));
        header.push(format!("{}_im", g.tag.name()));
    }
    let rows: Vec<Vec<String>> = (0..=grid.n)
        .map(|i| {
            let mut r = vec![format!("{:e}", grid.t(i))];
            for g in all {
                let v = g.eval(i, mid)[(0, 0)];
                r.push(format!("{:e}", v.re));
                r.push(format!("{:e}", v.im));
            }
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let slice = csv_text(&header_refs, rows);
    let mut dumps = Vec::new();
    if dump {
        let ext = match encoding {
            DumpFormat::Json => "jsonl",
            DumpFormat::Binary => "bin",
        };
        let kernels: [&Kernel; 9] =
            [&k.pj, &k.forward, &k.backward, &fk.f, &fk.fbar, &b.out_plus, &b.out_minus, &b.in_plus, &b.in_minus];
        let mut jobs: Vec<(String, &Kernel, DumpBlock)> = vec![("kernels/E_PJ.".to_string() + ext, &k.pj, DumpBlock::Full)];
        for (tag, ker) in DUMP_TAGS.iter().zip(kernels) {
            jobs.push((format!("kernels/G_{tag}.{ext}"), ker, DumpBlock::UpperRight));
        }
        for (rel, ker, block) in jobs {
            dumps.push((rel, dump_one(ker, block, encoding)?));
        }
    }
    col.file("kernels", "kernels_slice.csv", slice);
    if dump {
        let exact = dumps.iter().all(|(_, (_, ok))| *ok);
        col.checks.push(Check::new("dump_round_trip", "kernels", if exact { 0.0 } else { 1.0 }, 0.5));
        for (rel, (bytes, _)) in dumps {
            col.file("kernels", &rel, Ok(bytes));
        }
    }
    col.section("kernels", json!({ "hermiticity": herm, "left_inverse": left, "slice_column": mid }));
    Ok(())
}

fn resolvent(
    core: &Core,
    tol: &Tolerances,
    zs: &[[f64; 2]],
    w: [f64; 2],
    anchors: ResolventAnchors,
    col: &mut Collector,
) -> Result<()> {
    let grid = core.model.grid;
    let span = grid.t_plus - grid.t_minus;
    let f = bump(&core.model, grid.t_minus + 0.25 * span, grid.t_plus - 0.25 * span);
    let wc = c(w[0], w[1]);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for z in zs {
        let zc = c(z[0], z[1]);
        let label = format!("z={}{:+}i", z[0], z[1]);
        let rc = resolvent_equation_check(&core.ph, grid, zc, wc, anchors, &f)?;
        let twisted = twisted_pseudo_unitarity(&core.ph, grid, zc)?;
        col.checks.push(Check::new("resolvent_equation", "resolvent", rc.residual_pm.max(rc.residual_mp), tol.resolvent).labelled(&label));
        col.checks.push(Check::new("resolvent_adjoint", "resolvent", rc.adjoint, tol.resolvent_adjoint).labelled(&label));
        col.checks.push(
            Check::new("twisted_pseudo_unitarity", "resolvent", twisted, tol.twisted_pseudo_unitarity).labelled(&label),
        );
        rows.push(vec![
            format!("{:e}", z[0]),
            format!("{:e}", z[1]),
            format!("{:e}", rc.residual_pm),
            format!("{:e}", rc.residual_mp),
            format!("{:e}", rc.relative_pm),
            format!("{:e}", rc.swapped_sign),
            format!("{:e}", rc.adjoint),
            format!("{:e}", twisted),
        ]);
        results.push(json!({ "check": rc, "twisted_pseudo_unitarity": twisted }));
    }
    col.file(
        "resolvent",
        "resolvent.csv",
        csv_text(
            &["z_re", "z_im", "residual_pm", "residual_mp", "relative_pm", "swapped_sign", "adjoint", "twisted"],
            rows,
        ),
    );
    col.section("resolvent", json!({ "w": w, "anchors": anchors, "results": results }));
    Ok(())
}

fn feynman_limit(core: &mut Core, tol: &Tolerances, eps: &[f64], col: &mut Collector) -> Result<()> {
    let grid = core.model.grid;
    let ph = core.ph.clone();
    let (_, _, _, props) = core.kernels()?;
    let rows = feynman_limit_demo(&ph, grid, &props.f, &props.fbar, eps)?;
    let worst = |r: &kreinprop::kleingordon::FeynmanLimitRow| r.to_feynman.max(r.to_anti_feynman);
    let mut positive: Vec<_> = rows.iter().filter(|r| r.eps > 0.0).collect();
    positive.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    if positive.len() >= 2 {
        let ratio = positive.windows(2).map(|p| worst(p[1]) / worst(p[0])).fold(0.0, f64::max);
        col.checks.push(
            Check::new("feynman_limit", "feynman_limit", ratio, 1.0).with_pass(ratio < 1.0).labelled("monotone"),
        );
    }
    if let Some(r0) = rows.iter().find(|r| r.eps == 0.0) {
        col.checks.push(Check::new("feynman_limit", "feynman_limit", worst(r0), tol.feynman_limit).labelled("eps=0"));
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![format!("{:e}", r.eps), format!("{:e}", r.to_feynman), format!("{:e}", r.to_anti_feynman)])
        .collect();
    col.file("feynman_limit", "feynman_limit.csv", csv_text(&["eps", "to_feynman", "to_anti_feynman"], table));
    col.section("feynman_limit", &rows);
    Ok(())
}

fn bogoliubov(core: &Core, tol: &Tolerances, formalism: Formalism, col: &mut Collector) -> Result<()> {
    let (s_minus, s_plus) = core.pair_at_start()?;
    let g = GaussianInOut::new(&core.ph.space, s_minus, s_plus, formalism)?;
    let rep = bogoliubov_report(&g)?;
    col.checks.push(Check::new("det_chain", "bogoliubov", rep.det_chain_residuals.max(), tol.det_chain));
    let r = core.evo.forward(core.model.grid.n);
    let shale = shale_diagnostics(&core.ph.space, r, &core.io.s_minus, &core.io.s_plus, tol.shale_threshold)?;
    let agreement = shale.c_agreement.max((shale.c_hs - g.c_hs).abs());
    col.checks.push(Check::new("shale_c_agreement", "bogoliubov", agreement, tol.shale));
    col.section("bogoliubov", json!({ "report": rep, "shale": shale, "vacuum_overlap": g.overlap() }));
    Ok(())
}

fn fock_checks(
    core: &mut Core,
    tol: &Tolerances,
    formalism: Formalism,
    nmax: usize,
    implementer_nmax: usize,
    col: &mut Collector,
) -> Result<()> {
    let n = core.n();
    if n > 2 {
        return Err(Error::Input(format!("Fock checks support at most 2 modes, the model has {n}")));
    }
    if formalism == Formalism::Neutral && !core.model.real {
        return Err(Error::Input("the neutral formalism needs W = 0".into()));
    }
    let space = core.ph.space.clone();
    let (s_minus, s_plus) = core.pair_at_start()?;
    let conj = Conjugation::kg(n);
    let g = GaussianInOut::new(&space, s_minus.clone(), s_plus.clone(), formalism)?;
    let mut section = Map::new();

    let oracle = fock_oracle_in_out(&space, &s_minus, &s_plus, formalism, Some(&conj), nmax)?;
    let overlap_err = (oracle.value - c(g.overlap(), 0.0)).norm() / g.overlap();
    col.checks.push(Check::new("fock_overlap", "fock_checks", overlap_err, tol.fock));
    section.insert("overlap".into(), json!({ "oracle": oracle, "formula": g.overlap() }));

    let dim = space.dim;
    let basis = |i: usize| CVec::from_fn(dim, |k, _| c(if k == i { 1.0 } else { 0.0 }, 0.0));
    let (mut two_point, mut scale, mut peierls): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut tail: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let (v, w) = (basis(i), basis(j));
            let o = fock_oracle_two_point(&space, &s_minus, &s_plus, &v, &w, nmax)?;
            let formula = two_point_in_out(&g, &v, &w)?;
            two_point = two_point.max((o.ratio - formula).norm());
            scale = scale.max(formula.norm());
            peierls = peierls.max((o.commutator - space.form(&v, &w)).norm()).max(o.commutator_residual);
            tail = tail.max(o.tail);
        }
    }
    col.checks.push(Check::new("fock_two_point", "fock_checks", two_point / scale.max(1.0), tol.fock));
    col.checks.push(Check::new("peierls_commutator", "fock_checks", peierls, tol.fock));
    section.insert("two_point".into(), json!({ "max_abs_discrepancy": two_point, "max_abs_value": scale, "tail": tail }));

    if core.model.real {
        let r = core.evo.forward(core.model.grid.n).clone();
        let imp = natural_implementer_truncated(&space, &r, &core.io.s_minus, &core.io.s_plus, &conj, implementer_nmax)?;
        let neutral = GaussianInOut::new(&space, s_minus.clone(), s_plus.clone(), Formalism::Neutral)?;
        let rep = imp.report.clone();
        let amp = (rep.vacuum_amplitude - neutral.overlap()).abs().max(rep.norm_defect);
        col.checks.push(
            Check::new("natural_implementer_amplitude", "fock_checks", amp, tol.implementer)
                .with_pass(amp <= tol.implementer && rep.vacuum_amplitude > 0.0),
        );
        col.checks.push(Check::new(
            "natural_implementer_intertwining",
            "fock_checks",
            rep.intertwining_below_cutoff,
            tol.implementer,
        ));
        section.insert("natural_implementer".into(), json!({ "report": rep, "overlap_neutral": neutral.overlap() }));
    } else {
        section.insert("natural_implementer".into(), json!({ "skipped": "W ≠ 0: no real structure" }));
    }

    let grid = core.model.grid;
    let span = grid.t_plus - grid.t_minus;
    let early = bump(&core.model, grid.t_minus + span / 8.0, grid.t_minus + 3.0 * span / 8.0);
    let late = bump(&core.model, grid.t_plus - 3.0 * span / 8.0, grid.t_plus - span / 8.0);
    let evo = core.evo.clone();
    core.ensure_kernels()?;
    let (_, _, _, props) = core.kernels.as_ref().expect("computed");
    let mut runs: Vec<FeynmanTwoPoint> = Vec::new();
    for (f1, f2) in [(&late, &early), (&early, &late)] {
        runs.push(feynman_two_point_check(&evo, &core.io, props, f1, f2, nmax)?);
    }
    for r in &runs {
        let label = match r.ordering {
            kreinprop::quant::Ordering::F1Later => "f1_later",
            kreinprop::quant::Ordering::F1Earlier => "f1_earlier",
        };
        let t = tol.feynman_two_point;
        col.checks.push(Check::new("feynman_two_point", "fock_checks", r.time_ordered.discrepancy, t).labelled(label));
        col.checks.push(Check::new("anti_feynman_two_point", "fock_checks", r.anti_time_ordered.discrepancy, t).labelled(label));
        col.checks.push(Check::new("smeared_peierls", "fock_checks", r.peierls.discrepancy, t).labelled(label));
    }
    section.insert("feynman_two_point".into(), serde_json::to_value(&runs)?);
    section.insert("nmax".into(), json!(nmax));
    col.section("fock_checks", Value::Object(section));
    Ok(())
}
