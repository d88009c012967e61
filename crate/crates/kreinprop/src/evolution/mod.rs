//! Structure-preserving integration of non-autonomous generators B(t) and
//! the temporal propagator kernels built from the resulting evolution.

mod dump;
mod identities;
mod kernel;
mod wellposed;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dump::{read_dump, write_dump, DumpBlock, DumpFormat, DumpHeader, KernelDump};
pub use identities::{identity_residuals, IdentityOptions, IdentityReport, IdentityResidual};
pub use kernel::{
    apply_kernel, apply_kernel_with, bisolution_kernels, classical_kernels, feynman_kernels,
    Bisolutions, ClassicalKernels, DiagonalRule, FeynmanKernels, Kernel, KernelTag,
};
pub use wellposed::{discrete_well_posed_inverse, WellPosedInverse};
pub(crate) use kernel::Branch;

use crate::error::{input, Error, Result};
use crate::krein::{assume_admissible, AdmissibleInvolution, KreinSpace};
use crate::linalg::{c, cholesky, eigh, eye, inverse, is_finite, max_abs, op_norm, CMat};

/// Uniform grid t_i = t_minus + i·dt, i = 0..=n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_minus: f64,
    pub t_plus: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t_minus: f64, t_plus: f64, n: usize) -> Result<Self> {
        if !(t_minus.is_finite() && t_plus.is_finite() && t_minus < t_plus) {
            return input(format!("grid needs t_minus < t_plus, got [{t_minus}, {t_plus}]"));
        }
        if n == 0 {
            return input("grid needs at least one step");
        }
        Ok(TimeGrid { t_minus, t_plus, n })
    }

    pub fn dt(&self) -> f64 {
        (self.t_plus - self.t_minus) / self.n as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n {
            self.t_plus
        } else {
            self.t_minus + i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.t(i)).collect()
    }

    /// Trapezoid weights, endpoints included with weight dt/2.
    pub fn weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n).map(|i| if i == 0 || i == self.n { 0.5 * dt } else { dt }).collect()
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        (((t - self.t_minus) / self.dt()).round().max(0.0) as usize).min(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    PiecewiseConstant,
    C0,
    C1,
}

/// One sample of the generator, with the Hamiltonian H = QB when known.
#[derive(Clone, Debug)]
pub struct Sample {
    pub b: CMat,
    pub h: Option<CMat>,
}

type Sampler = dyn Fn(f64) -> Sample + Send + Sync;

/// A time-dependent generator t ↦ B(t) on a Krein space.
#[derive(Clone)]
pub struct GeneratorSchedule {
    pub space: KreinSpace,
    pub smoothness: Smoothness,
    sampler: Arc<Sampler>,
}

impl std::fmt::Debug for GeneratorSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorSchedule")
            .field("dim", &self.space.dim)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl GeneratorSchedule {
    /// Schedule from B(t) directly.
    pub fn from_generator(
        space: KreinSpace,
        smoothness: Smoothness,
        b: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        GeneratorSchedule { space, smoothness, sampler: Arc::new(move |t| Sample { b: b(t), h: None }) }
    }

    /// Schedule from the Hamiltonian H(t); B = Q⁻¹H.
    pub fn from_hamiltonian(
        space: KreinSpace,
        smoothness: Smoothness,
        h: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        let q_inv = space.q_inv.clone();
        GeneratorSchedule {
            space,
            smoothness,
            sampler: Arc::new(move |t| {
                let h = h(t);
                Sample { b: &q_inv * &h, h: Some(h) }
            }),
        }
    }

    pub fn sample(&self, t: f64) -> Sample {
        (self.sampler)(t)
    }

    pub fn b(&self, t: f64) -> CMat {
        self.sample(t).b
    }

    /// ‖QB(t) − B(t)†Q‖.
    pub fn q_self_adjoint_residual(&self, t: f64) -> f64 {
        let b = self.b(t);
        let qb = &self.space.q * &b;
        op_norm(&(&qb - qb.adjoint()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// U_i = exp(−i dt B(t_{i+½})).
    MidpointExp,
    /// U_i = exp(−i dt B(t_i)), B treated as right-continuous steps.
    PiecewiseConstExp,
}

/// B = Q⁻¹H with H ≻ 0 written as T Λ T⁻¹, Λ real.
///
/// With H = LL† the matrix A = L†Q⁻¹L is Hermitian and B = L⁻†AL†.
#[derive(Clone, Debug)]
pub struct StableGenerator {
    t: CMat,
    t_inv: CMat,
    pub eigenvalues: Vec<f64>,
}

impl StableGenerator {
    pub fn from_hamiltonian(space: &KreinSpace, h: &CMat) -> Option<Self> {
        let l = cholesky(h)?;
        let a = l.adjoint() * &space.q_inv * &l;
        let (eigenvalues, v) = eigh(&a);
        let t = l.adjoint().solve_upper_triangular(&v)?;
        let t_inv = v.adjoint() * l.adjoint();
        (is_finite(&t) && is_finite(&t_inv)).then_some(StableGenerator { t, t_inv, eigenvalues })
    }

    fn apply_diag(&self, f: impl Fn(f64) -> crate::C64) -> CMat {
        let mut m = self.t.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let z = f(l);
            for r in 0..m.nrows() {
                m[(r, k)] *= z;
            }
        }
        m * &self.t_inv
    }

    /// exp(−iτB).
    pub fn exp_minus_i(&self, tau: f64) -> CMat {
        self.apply_diag(|l| crate::C64::from_polar(1.0, -tau * l))
    }

    pub fn min_abs_eig(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l.abs()))
    }

    /// sgn(B).
    pub fn sign(&self) -> CMat {
        self.apply_diag(|l| c(l.signum(), 0.0))
    }
}

/// Matrix sign by the scaled Newton iteration X ← (μX + (μX)⁻¹)/2.
pub fn newton_sign(b: &CMat) -> Result<CMat> {
    let n = b.nrows();
    let mut x = b.clone();
    for _ in 0..100 {
        let x_inv = inverse(&x).ok_or(Error::NotStronglyStable { min_abs: 0.0 })?;
        let d = crate::linalg::det(&x).norm();
        let mu = if d > 0.0 && d.is_finite() { d.powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&x * c(mu, 0.0) + x_inv * c(1.0 / mu, 0.0)) * c(0.5, 0.0);
        let delta = op_norm(&(&next - &x));
        x = next;
        if delta <= 1e-14 * op_norm(&x).max(1.0) {
            break;
        }
    }
    let res = op_norm(&(&x * &x - eye(n)));
    if !is_finite(&x) || res > 1e-8 {
        return Err(Error::NotStronglyStable { min_abs: res });
    }
    Ok(x)
}

/// sgn(B(t)) for a stable generator: congruence route when H ≻ 0, Newton otherwise.
pub fn generator_sign(space: &KreinSpace, sample: &Sample) -> Result<CMat> {
    let scale = max_abs(&sample.b).max(1.0);
    if let Some(h) = &sample.h {
        if let Some(g) = StableGenerator::from_hamiltonian(space, h) {
            let min_abs = g.min_abs_eig();
            if min_abs <= 1e-10 * scale {
                return Err(Error::NotStronglyStable { min_abs });
            }
            return Ok(g.sign());
        }
    }
    newton_sign(&sample.b)
}

/// The evolution R(t_i, t_j) on a grid, stored by prefix products.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub grid: TimeGrid,
    pub space: KreinSpace,
    pub scheme: Scheme,
    /// U_i ≈ R(t_{i+1}, t_i).
    pub steps: Vec<CMat>,
    prefix: Vec<CMat>,
    prefix_inv: Vec<CMat>,
}

impl Evolution {
    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// R(t_i, t_j).
    pub fn r(&self, i: usize, j: usize) -> CMat {
        if i == j {
            return eye(self.dim());
        }
        &self.prefix[i] * &self.prefix_inv[j]
    }

    /// R(t_i, t_0).
    pub fn forward(&self, i: usize) -> &CMat {
        &self.prefix[i]
    }

    /// R(t_0, t_j).
    pub fn backward(&self, j: usize) -> &CMat {
        &self.prefix_inv[j]
    }

    /// max_i ‖R(t_i,t_0)†QR(t_i,t_0) − Q‖.
    pub fn q_drift(&self) -> f64 {
        self.prefix
            .par_iter()
            .map(|p| op_norm(&(p.adjoint() * &self.space.q * p - &self.space.q)))
            .reduce(|| 0.0, f64::max)
    }

    /// max_i ‖U_i†QU_i − Q‖.
    pub fn step_q_residual(&self) -> f64 {
        self.steps
            .par_iter()
            .map(|u| op_norm(&(u.adjoint() * &self.space.q * u - &self.space.q)))
            .reduce(|| 0.0, f64::max)
    }
}

/// Integrates the schedule; every midpoint sample must be Q-self-adjoint.
pub fn solve_evolution(schedule: &GeneratorSchedule, grid: TimeGrid, scheme: Scheme) -> Result<Evolution> {
    let tol = schedule.space.tol_def;
    for i in 0..grid.n {
        let t = sample_time(&grid, i, scheme);
        let b = schedule.b(t);
        if b.shape() != (schedule.space.dim, schedule.space.dim) {
            return input(format!("B({t}) has shape {:?}", b.shape()));
        }
        let res = schedule.q_self_adjoint_residual(t);
        if res > tol * max_abs(&b).max(1.0) {
            return Err(Error::AssumptionViolation {
                what: format!("B is not Q-self-adjoint (residual {res:.3e})"),
                t,
            });
        }
    }
    integrate(&schedule.space, &|t| schedule.sample(t), grid, scheme)
}

fn sample_time(grid: &TimeGrid, i: usize, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::MidpointExp => 0.5 * (grid.t(i) + grid.t(i + 1)),
        Scheme::PiecewiseConstExp => grid.t(i),
    }
}

/// Integration without the Q-self-adjointness precondition (used for B_z).
pub(crate) fn integrate(
    space: &KreinSpace,
    sampler: &(dyn Fn(f64) -> Sample + Sync),
    grid: TimeGrid,
    scheme: Scheme,
) -> Result<Evolution> {
    let dt = grid.dt();
    let pairs: Vec<Result<(CMat, CMat)>> = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let s = sampler(sample_time(&grid, i, scheme));
            let fast = s.h.as_ref().and_then(|h| StableGenerator::from_hamiltonian(space, h));
            let (u, u_inv) = match fast {
                Some(g) => (g.exp_minus_i(dt), g.exp_minus_i(-dt)),
                None => ((&s.b * c(0.0, -dt)).exp(), (&s.b * c(0.0, dt)).exp()),
            };
            if is_finite(&u) && is_finite(&u_inv) {
                Ok((u, u_inv))
            } else {
                Err(Error::MatrixExp { step: i })
            }
        })
        .collect();
    let mut steps = Vec::with_capacity(grid.n);
    let mut inv_steps = Vec::with_capacity(grid.n);
    for p in pairs {
        let (u, ui) = p?;
        steps.push(u);
        inv_steps.push(ui);
    }
    let n = space.dim;
    let mut prefix = Vec::with_capacity(grid.n + 1);
    let mut prefix_inv = Vec::with_capacity(grid.n + 1);
    prefix.push(eye(n));
    prefix_inv.push(eye(n));
    for i in 0..grid.n {
        let p = &steps[i] * &prefix[i];
        let pi = &prefix_inv[i] * &inv_steps[i];
        prefix.push(p);
        prefix_inv.push(pi);
    }
    Ok(Evolution { grid, space: space.clone(), scheme, steps, prefix, prefix_inv })
}

/// In/out involutions anchored at t_0 and t_N, with their evolved families.
#[derive(Clone, Debug)]
pub struct InOutData {
    pub s_minus: AdmissibleInvolution,
    pub s_plus: AdmissibleInvolution,
    /// Π₋⁺(t_j) = ½(1 + S₋(t_j)).
    pub pi_minus_plus: Arc<Vec<CMat>>,
    /// Π₊⁺(t_j) = ½(1 + S₊(t_j)).
    pub pi_plus_plus: Arc<Vec<CMat>>,
}

impl InOutData {
    /// Evolves anchors S₋ (at t_0) and S₊ (at t_N) to every node.
    pub fn new(evo: &Evolution, s_minus: AdmissibleInvolution, s_plus: AdmissibleInvolution) -> Self {
        let n = evo.dim();
        let last = evo.grid.n;
        // Anchors pulled back to t_0.
        let sm0 = s_minus.s.clone();
        let sp0 = evo.backward(last) * &s_plus.s * evo.forward(last);
        let half = c(0.5, 0.0);
        let evolve = |s0: &CMat| -> Vec<CMat> {
            (0..=last)
                .into_par_iter()
                .map(|j| (eye(n) + evo.forward(j) * s0 * evo.backward(j)) * half)
                .collect()
        };
        let mut pi_plus_plus = evolve(&sp0);
        // The out anchor itself is stored exactly.
        pi_plus_plus[last] = s_plus.pi_plus.clone();
        let pi_minus_plus = evolve(&sm0);
        InOutData {
            s_minus,
            s_plus,
            pi_minus_plus: Arc::new(pi_minus_plus),
            pi_plus_plus: Arc::new(pi_plus_plus),
        }
    }

    pub fn s_minus_at(&self, j: usize) -> CMat {
        two_pi_minus_one(&self.pi_minus_plus[j])
    }

    pub fn s_plus_at(&self, j: usize) -> CMat {
        two_pi_minus_one(&self.pi_plus_plus[j])
    }

    pub fn len(&self) -> usize {
        self.pi_plus_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi_plus_plus.is_empty()
    }

    /// Largest ‖S² − 1‖ or ‖S†QS − Q‖ over nodes and both families.
    pub fn involution_drift(&self, space: &KreinSpace) -> f64 {
        let n = space.dim;
        (0..self.len())
            .into_par_iter()
            .map(|j| {
                [self.s_minus_at(j), self.s_plus_at(j)]
                    .iter()
                    .map(|s| {
                        op_norm(&(s * s - eye(n))).max(op_norm(&(s.adjoint() * &space.q * s - &space.q)))
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Largest ‖[S₊(t_j), S₋(t_j)]‖; zero for commuting (e.g. stationary) data.
    pub fn commutator_norm(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|j| {
                let (sp, sm) = (self.s_plus_at(j), self.s_minus_at(j));
                op_norm(&(&sp * &sm - &sm * &sp))
            })
            .reduce(|| 0.0, f64::max)
    }

    /// S₋ and S₊ as involutions at node j.
    pub fn involutions_at(&self, space: &KreinSpace, j: usize) -> Result<(AdmissibleInvolution, AdmissibleInvolution)> {
        Ok((assume_admissible(space, self.s_minus_at(j))?, assume_admissible(space, self.s_plus_at(j))?))
    }
}

fn two_pi_minus_one(p: &CMat) -> CMat {
    p * c(2.0, 0.0) - eye(p.nrows())
}

/// S₋ = sgn B(t_0) and S₊ = sgn B(t_N), evolved across the grid.
pub fn in_out_involutions(schedule: &GeneratorSchedule, evo: &Evolution) -> Result<InOutData> {
    let space = &schedule.space;
    let s_minus = generator_sign(space, &schedule.sample(evo.grid.t_minus))?;
    let s_plus = generator_sign(space, &schedule.sample(evo.grid.t_plus))?;
    let s_minus = crate::krein::check_admissible(space, &s_minus)?;
    let s_plus = crate::krein::check_admissible(space, &s_plus)?;
    Ok(InOutData::new(evo, s_minus, s_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::mode_involution;
    use crate::linalg::from_real;

    fn mode(omega: f64) -> GeneratorSchedule {
        GeneratorSchedule::from_hamiltonian(KreinSpace::kg(1), Smoothness::C1, move |_| {
            from_real(2, 2, &[omega * omega, 0.0, 0.0, 1.0])
        })
    }

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.weights().iter().sum::<f64>(), 2.0);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn autonomous_evolution_is_closed_form() {
        let omega = 2.0;
        let sched = mode(omega);
        let grid = TimeGrid::new(-1.0, 1.0, 50).unwrap();
        let evo = solve_evolution(&sched, grid, Scheme::MidpointExp).unwrap();
        let (i, j) = (40, 7);
        let tau = grid.t(i) - grid.t(j);
        let (s, co) = (omega * tau).sin_cos();
        // R = exp(−iτB) for B = [[0,1],[ω²,0]].
        let expect = CMat::from_row_slice(
            2,
            2,
            &[c(co, 0.0), c(0.0, -s / omega), c(0.0, -omega * s), c(co, 0.0)],
        );
        assert!((evo.r(i, j) - expect).norm() < 1e-12);
        assert!(evo.step_q_residual() < 1e-14);
        assert_eq!(evo.r(5, 5), eye(2));
    }

    #[test]
    fn padé_and_congruence_routes_agree() {
        let sched_h = mode(1.7);
        let sched_b = GeneratorSchedule::from_generator(KreinSpace::kg(1), Smoothness::C1, |_| {
            from_real(2, 2, &[0.0, 1.0, 1.7 * 1.7, 0.0])
        });
        let grid = TimeGrid::new(0.0, 3.0, 30).unwrap();
        let a = solve_evolution(&sched_h, grid, Scheme::MidpointExp).unwrap();
        let b = solve_evolution(&sched_b, grid, Scheme::MidpointExp).unwrap();
        assert!((a.r(30, 0) - b.r(30, 0)).norm() < 1e-12);
    }

    #[test]
    fn sign_of_mode_generator() {
        let sched = mode(2.0);
        let s = generator_sign(&sched.space, &sched.sample(0.0)).unwrap();
        assert!((&s - mode_involution(2.0)).norm() < 1e-14);
        let n = newton_sign(&sched.b(0.0)).unwrap();
        assert!((&n - mode_involution(2.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_mode_is_not_strongly_stable() {
        let sched = GeneratorSchedule::from_generator(KreinSpace::kg(1), Smoothness::C1, |_| {
            from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])
        });
        assert!(generator_sign(&sched.space, &sched.sample(0.0)).is_err());
    }

    #[test]
    fn stationary_in_out_coincide() {
        let sched = mode(2.0);
        let grid = TimeGrid::new(-2.0, 2.0, 40).unwrap();
        let evo = solve_evolution(&sched, grid, Scheme::MidpointExp).unwrap();
        let io = in_out_involutions(&sched, &evo).unwrap();
        for j in [0, 13, 40] {
            assert!((io.s_plus_at(j) - io.s_minus_at(j)).norm() < 1e-12);
        }
        assert!(io.involution_drift(&sched.space) < 1e-12);
    }

    #[test]
    fn non_q_self_adjoint_generator_is_rejected() {
        let sched = GeneratorSchedule::from_generator(KreinSpace::kg(1), Smoothness::C1, |_| {
            from_real(2, 2, &[1.0, 0.0, 0.0, 0.0])
        });
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            solve_evolution(&sched, grid, Scheme::MidpointExp),
            Err(Error::AssumptionViolation { .. })
        ));
    }
}
