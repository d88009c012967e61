//! Temporal integral kernels E•(t_i, t_j) = R(t_i, t_0)·F_j, with the node factor
//! F_j chosen by the branch (i ≥ j or i < j).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Evolution, InOutData};
use crate::error::{Error, Result};
use crate::krein::Subspace;
use crate::linalg::{c, eye, projection_along, CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelTag {
    #[serde(rename = "PJ")]
    PauliJordan,
    #[serde(rename = "forward")]
    Forward,
    #[serde(rename = "backward")]
    Backward,
    #[serde(rename = "in_plus")]
    InPlus,
    #[serde(rename = "in_minus")]
    InMinus,
    #[serde(rename = "out_plus")]
    OutPlus,
    #[serde(rename = "out_minus")]
    OutMinus,
    #[serde(rename = "F")]
    Feynman,
    #[serde(rename = "Fbar")]
    AntiFeynman,
    /// E_z^{(+−)} of a perturbed evolution.
    #[serde(rename = "Fz")]
    ResolventPlusMinus,
    /// E_z^{(−+)} of a perturbed evolution.
    #[serde(rename = "Fbar_z")]
    ResolventMinusPlus,
}

impl KernelTag {
    pub fn name(self) -> &'static str {
        match self {
            KernelTag::PauliJordan => "PJ",
            KernelTag::Forward => "forward",
            KernelTag::Backward => "backward",
            KernelTag::InPlus => "in_plus",
            KernelTag::InMinus => "in_minus",
            KernelTag::OutPlus => "out_plus",
            KernelTag::OutMinus => "out_minus",
            KernelTag::Feynman => "F",
            KernelTag::AntiFeynman => "Fbar",
            KernelTag::ResolventPlusMinus => "Fz",
            KernelTag::ResolventMinusPlus => "Fbar_z",
        }
    }
}

/// Node factor of one branch.
#[derive(Clone, Debug)]
pub(crate) enum Branch {
    Zero,
    /// sign · R(t_0, t_j)
    Full(f64),
    /// sign · R(t_0, t_j) · X_j, or · (1 − X_j) when `complement`
    Node { sign: f64, x: Arc<Vec<CMat>>, complement: bool },
    /// sign · X · R(t_0, t_j) with X fixed at t_0
    Anchored { sign: f64, x: Arc<CMat> },
}

/// A temporal kernel on the grid of an evolution.
///
/// At coincident nodes (i = j) the lower branch is used: θ(0) = 1.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub tag: KernelTag,
    pub(crate) evo: Arc<Evolution>,
    pub(crate) lower: Branch,
    pub(crate) upper: Branch,
}

impl Kernel {
    pub(crate) fn new(tag: KernelTag, evo: &Arc<Evolution>, lower: Branch, upper: Branch) -> Self {
        Kernel { tag, evo: Arc::clone(evo), lower, upper }
    }

    pub fn evolution(&self) -> &Arc<Evolution> {
        &self.evo
    }

    pub fn dim(&self) -> usize {
        self.evo.dim()
    }

    pub fn grid(&self) -> super::TimeGrid {
        self.evo.grid
    }

    /// Quadrature weights used when the kernel acts on grid functions.
    pub fn weights(&self) -> Vec<f64> {
        self.evo.grid.weights()
    }

    /// Node factor F_j of the lower (`lower = true`) or upper branch; `None` for a zero branch.
    pub fn factor(&self, lower: bool, j: usize) -> Option<CMat> {
        let b = if lower { &self.lower } else { &self.upper };
        let back = self.evo.backward(j);
        let sc = |s: f64| c(s, 0.0);
        match b {
            Branch::Zero => None,
            Branch::Full(s) => Some(back * sc(*s)),
            Branch::Node { sign, x, complement } => {
                let xj = if *complement { eye(x[j].nrows()) - &x[j] } else { x[j].clone() };
                Some(back * xj * sc(*sign))
            }
            Branch::Anchored { sign, x } => Some(x.as_ref() * back * sc(*sign)),
        }
    }

    /// E(t_i, t_j).
    pub fn eval(&self, i: usize, j: usize) -> CMat {
        if i == j {
            // R(t_i, t_i) = 1 exactly.
            let n = self.dim();
            let sc = |s: f64| c(s, 0.0);
            match &self.lower {
                Branch::Zero => return CMat::zeros(n, n),
                Branch::Full(s) => return eye(n) * sc(*s),
                Branch::Node { sign, x, complement } => {
                    let xj = if *complement { eye(n) - &x[j] } else { x[j].clone() };
                    return xj * sc(*sign);
                }
                Branch::Anchored { .. } => {}
            }
        }
        match self.factor(i >= j, j) {
            Some(f) => self.evo.forward(i) * f,
            None => CMat::zeros(self.dim(), self.dim()),
        }
    }

    /// Both branch values at the coincident node, (lower, upper).
    pub fn eval_diagonal_branches(&self, i: usize) -> (CMat, CMat) {
        let n = self.dim();
        let p = self.evo.forward(i);
        let l = self.factor(true, i).map(|f| p * f).unwrap_or_else(|| CMat::zeros(n, n));
        let u = self.factor(false, i).map(|f| p * f).unwrap_or_else(|| CMat::zeros(n, n));
        (l, u)
    }

    /// Same kernel under another tag (used for derived kernels).
    pub fn retag(mut self, tag: KernelTag) -> Self {
        self.tag = tag;
        self
    }
}

/// Pauli–Jordan, forward and backward kernels.
#[derive(Clone, Debug)]
pub struct ClassicalKernels {
    pub pj: Kernel,
    pub forward: Kernel,
    pub backward: Kernel,
}

pub fn classical_kernels(evo: &Arc<Evolution>) -> ClassicalKernels {
    ClassicalKernels {
        pj: Kernel::new(KernelTag::PauliJordan, evo, Branch::Full(1.0), Branch::Full(1.0)),
        forward: Kernel::new(KernelTag::Forward, evo, Branch::Full(1.0), Branch::Zero),
        backward: Kernel::new(KernelTag::Backward, evo, Branch::Zero, Branch::Full(-1.0)),
    }
}

/// In/out frequency bisolutions E_±^{(±)}.
#[derive(Clone, Debug)]
pub struct Bisolutions {
    pub out_plus: Kernel,
    pub out_minus: Kernel,
    pub in_plus: Kernel,
    pub in_minus: Kernel,
}

pub fn bisolution_kernels(evo: &Arc<Evolution>, inout: &InOutData) -> Bisolutions {
    let plus = |tag, x: &Arc<Vec<CMat>>| {
        let b = Branch::Node { sign: 1.0, x: Arc::clone(x), complement: false };
        Kernel::new(tag, evo, b.clone(), b)
    };
    let minus = |tag, x: &Arc<Vec<CMat>>| {
        let b = Branch::Node { sign: -1.0, x: Arc::clone(x), complement: true };
        Kernel::new(tag, evo, b.clone(), b)
    };
    Bisolutions {
        out_plus: plus(KernelTag::OutPlus, &inout.pi_plus_plus),
        out_minus: minus(KernelTag::OutMinus, &inout.pi_plus_plus),
        in_plus: plus(KernelTag::InPlus, &inout.pi_minus_plus),
        in_minus: minus(KernelTag::InMinus, &inout.pi_minus_plus),
    }
}

/// Feynman and anti-Feynman inverses with their per-node projections.
#[derive(Clone, Debug)]
pub struct FeynmanKernels {
    pub f: Kernel,
    pub fbar: Kernel,
    /// Λ^{(⊞−)}(t_j): onto Z₊⁽⁺⁾(t_j) along Z₋⁽⁻⁾(t_j).
    pub lambda_f: Arc<Vec<CMat>>,
    /// Λ^{(⊟+)}(t_j): onto Z₊⁽⁻⁾(t_j) along Z₋⁽⁺⁾(t_j).
    pub lambda_fbar: Arc<Vec<CMat>>,
    /// Largest condition number of the stacked bases and the node where it occurs.
    pub worst_cond: f64,
    pub worst_node: usize,
    pub warning: Option<String>,
}

/// Condition-number cap for the per-node projection solves.
pub const COND_CAP: f64 = 1e8;

pub fn feynman_kernels(evo: &Arc<Evolution>, inout: &InOutData) -> Result<FeynmanKernels> {
    let n = evo.dim();
    let one = eye(n);
    let per_node: Vec<Result<(CMat, CMat, f64)>> = (0..inout.len())
        .into_par_iter()
        .map(|j| {
            let pp = &inout.pi_plus_plus[j];
            let mp = &inout.pi_minus_plus[j];
            let z_out_plus = Subspace::range_of(pp).basis;
            let z_out_minus = Subspace::range_of(&(&one - pp)).basis;
            let z_in_plus = Subspace::range_of(mp).basis;
            let z_in_minus = Subspace::range_of(&(&one - mp)).basis;
            let (lf, ca) = projection_along(&z_out_plus, &z_in_minus)?;
            let (lfb, cb) = projection_along(&z_out_minus, &z_in_plus)?;
            Ok((lf, lfb, ca.max(cb)))
        })
        .collect();
    let mut lambda_f = Vec::with_capacity(per_node.len());
    let mut lambda_fbar = Vec::with_capacity(per_node.len());
    let (mut worst_cond, mut worst_node) = (0.0, 0);
    for (j, r) in per_node.into_iter().enumerate() {
        let (lf, lfb, cond) = r.map_err(|e| match e {
            Error::ComplementarityFailure { smallest } => Error::ContractViolation(format!(
                "Z₊⁽⁺⁾ and Z₋⁽⁻⁾ fail to be complementary at node {j} (σ_min {smallest:.3e})"
            )),
            other => other,
        })?;
        if cond > worst_cond {
            worst_cond = cond;
            worst_node = j;
        }
        lambda_f.push(lf);
        lambda_fbar.push(lfb);
    }
    let warning = (worst_cond > COND_CAP).then(|| {
        format!(
            "projection condition number {worst_cond:.3e} exceeds {COND_CAP:.0e} at node {worst_node} (t = {})",
            evo.grid.t(worst_node)
        )
    });
    let lambda_f = Arc::new(lambda_f);
    let lambda_fbar = Arc::new(lambda_fbar);
    let f = Kernel::new(
        KernelTag::Feynman,
        evo,
        Branch::Node { sign: 1.0, x: Arc::clone(&lambda_f), complement: false },
        Branch::Node { sign: -1.0, x: Arc::clone(&lambda_f), complement: true },
    );
    let fbar = Kernel::new(
        KernelTag::AntiFeynman,
        evo,
        Branch::Node { sign: 1.0, x: Arc::clone(&lambda_fbar), complement: false },
        Branch::Node { sign: -1.0, x: Arc::clone(&lambda_fbar), complement: true },
    );
    Ok(FeynmanKernels { f, fbar, lambda_f, lambda_fbar, worst_cond, worst_node, warning })
}

/// Treatment of the coincident node when a kernel acts on grid functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// w_i · ½(lower + upper): the mean of the two one-sided limits.
    Symmetrized,
    /// w_i · E(t_i, t_i) with the θ(0) = 1 convention.
    Pointwise,
}

/// (Ef)(t_i) = Σ_j w_j E(t_i, t_j) f(t_j), diagonal symmetrized.
pub fn apply_kernel(e: &Kernel, f: &[CVec]) -> Result<Vec<CVec>> {
    apply_kernel_with(e, f, DiagonalRule::Symmetrized)
}

/// Kernel action in O(N·dim²) through prefix and suffix sums.
pub fn apply_kernel_with(e: &Kernel, f: &[CVec], rule: DiagonalRule) -> Result<Vec<CVec>> {
    let grid = e.grid();
    let n = e.dim();
    if f.len() != grid.n + 1 || f.iter().any(|v| v.len() != n) {
        return Err(Error::Input(format!(
            "grid function must have {} nodes of dimension {n}",
            grid.n + 1
        )));
    }
    let w = grid.weights();
    let terms: Vec<(CVec, CVec)> = (0..=grid.n)
        .into_par_iter()
        .map(|j| {
            let lo = e.factor(true, j).map(|m| m * &f[j]).unwrap_or_else(|| CVec::zeros(n));
            let up = e.factor(false, j).map(|m| m * &f[j]).unwrap_or_else(|| CVec::zeros(n));
            (lo * c(w[j], 0.0), up * c(w[j], 0.0))
        })
        .collect();
    let mut acc = vec![CVec::zeros(n); grid.n + 1];
    let mut run = CVec::zeros(n);
    for i in 0..=grid.n {
        acc[i] = run.clone();
        run += &terms[i].0;
    }
    let mut run = CVec::zeros(n);
    for i in (0..=grid.n).rev() {
        acc[i] += &run;
        run += &terms[i].1;
    }
    let half = c(0.5, 0.0);
    let out = (0..=grid.n)
        .into_par_iter()
        .map(|i| {
            let diag = match rule {
                DiagonalRule::Symmetrized => (&terms[i].0 + &terms[i].1) * half,
                DiagonalRule::Pointwise => terms[i].0.clone(),
            };
            e.evo.forward(i) * (&acc[i] + diag)
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{in_out_involutions, solve_evolution, GeneratorSchedule, Scheme, Smoothness, TimeGrid};
    use crate::krein::KreinSpace;
    use crate::linalg::from_real;

    fn stationary(omega: f64, n: usize) -> (Arc<Evolution>, InOutData) {
        let sched = GeneratorSchedule::from_hamiltonian(KreinSpace::kg(1), Smoothness::C1, move |_| {
            from_real(2, 2, &[omega * omega, 0.0, 0.0, 1.0])
        });
        let grid = TimeGrid::new(-2.0, 2.0, n).unwrap();
        let evo = Arc::new(solve_evolution(&sched, grid, Scheme::MidpointExp).unwrap());
        let io = in_out_involutions(&sched, &evo).unwrap();
        (evo, io)
    }

    #[test]
    fn support_structure() {
        let (evo, _) = stationary(2.0, 20);
        let k = classical_kernels(&evo);
        assert_eq!(k.forward.eval(3, 7), CMat::zeros(2, 2));
        assert_eq!(k.backward.eval(7, 3), CMat::zeros(2, 2));
        assert_eq!(k.pj.eval(5, 5), eye(2));
        assert_eq!(k.backward.eval(5, 5), CMat::zeros(2, 2));
        for (i, j) in [(3, 7), (7, 3), (4, 4)] {
            let d = k.pj.eval(i, j) - (k.forward.eval(i, j) - k.backward.eval(i, j));
            assert!(d.norm() < 1e-15);
        }
    }

    #[test]
    fn single_node_quadrature() {
        let (evo, _) = stationary(2.0, 20);
        let k = classical_kernels(&evo);
        let j0 = 9;
        let mut f = vec![CVec::zeros(2); 21];
        f[j0] = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let out = apply_kernel(&k.pj, &f).unwrap();
        let w = evo.grid.weights()[j0];
        for i in [0, 9, 20] {
            let expect = evo.r(i, j0) * &f[j0] * c(w, 0.0);
            assert!((&out[i] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn stationary_feynman_is_frequency_split() {
        let (evo, io) = stationary(2.0, 40);
        let fk = feynman_kernels(&evo, &io).unwrap();
        let pp = &io.pi_plus_plus[0];
        for j in [0usize, 10, 30, 40] {
            assert!((&fk.lambda_f[j] - pp).norm() < 1e-12);
        }
        for (i, j) in [(30, 10), (10, 30)] {
            let expect = if i >= j { evo.r(i, j) * pp } else { -(evo.r(i, j) * (eye(2) - pp)) };
            let d = (fk.f.eval(i, j) - &expect).norm();
            assert!(d < 1e-12, "{i} {j} {d:e}");
        }
        assert!(fk.warning.is_none());
    }

    #[test]
    fn apply_matches_direct_sum() {
        let (evo, io) = stationary(1.3, 30);
        let fk = feynman_kernels(&evo, &io).unwrap();
        let f: Vec<CVec> = (0..=30)
            .map(|j| CVec::from_vec(vec![c((j as f64).sin(), 0.3), c(0.1 * j as f64, -1.0)]))
            .collect();
        let fast = apply_kernel_with(&fk.f, &f, DiagonalRule::Pointwise).unwrap();
        let w = evo.grid.weights();
        for i in [0, 11, 30] {
            let mut direct = CVec::zeros(2);
            for j in 0..=30 {
                direct += fk.f.eval(i, j) * &f[j] * c(w[j], 0.0);
            }
            assert!((&fast[i] - direct).norm() < 1e-12);
        }
    }
}
