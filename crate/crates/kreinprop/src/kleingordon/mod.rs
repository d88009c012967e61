//! Abstract Klein–Gordon operators K = (D_t + W†)α⁻²(D_t + W) − L on a finite
//! one-particle space, their Cauchy-data phase space and the spacetime
//! propagators G• read off from the temporal kernels.

mod propagators;
mod resolvent;

use std::sync::Arc;

use serde::Serialize;

pub use propagators::{
    apply_propagator, kg_left_inverse_check, kg_operator, spacetime_propagators, HermiticityEntry,
    HermiticityReport, LeftInverseResult, PositivityEntry, PropagatorSet, SpacetimePropagator,
};
pub use resolvent::{
    feynman_limit_demo, perturbed_resolvent, resolvent_equation_check, twisted_pseudo_unitarity,
    FeynmanLimitRow, PerturbedEvolution, ResolventAnchors, ResolventCheck,
};

use crate::error::{input, Error, Result};
use crate::evolution::{Evolution, GeneratorSchedule, Smoothness, TimeGrid};
use crate::krein::KreinSpace;
use crate::linalg::{block2, c, cholesky, eig_range_h, eye, herm_fn, op_norm, CMat, CVec, I};

type MatFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// Coefficients L(t), α²(t), W(t) of a Klein–Gordon operator on ℂⁿ.
#[derive(Clone)]
pub struct KGData {
    pub n: usize,
    l: MatFn,
    alpha2: MatFn,
    w: MatFn,
    /// Shift with L0 = L + b ≻ 0.
    pub b: f64,
    pub smoothness: Smoothness,
    /// Coefficients are frozen outside [−T, T] when set.
    pub freeze: Option<f64>,
}

impl std::fmt::Debug for KGData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KGData")
            .field("n", &self.n)
            .field("b", &self.b)
            .field("smoothness", &self.smoothness)
            .field("freeze", &self.freeze)
            .finish()
    }
}

impl KGData {
    pub fn new(
        n: usize,
        l: impl Fn(f64) -> CMat + Send + Sync + 'static,
        alpha2: impl Fn(f64) -> CMat + Send + Sync + 'static,
        w: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return input("spatial dimension must be positive");
        }
        Ok(KGData {
            n,
            l: Arc::new(l),
            alpha2: Arc::new(alpha2),
            w: Arc::new(w),
            b: 0.0,
            smoothness: Smoothness::C1,
            freeze: None,
        })
    }

    /// Single mode −∂t² − ω(t)², α² = 1, W = 0.
    pub fn mode(omega2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let one = |_| eye(1);
        let zero = |_| CMat::zeros(1, 1);
        KGData::new(1, move |t| CMat::from_element(1, 1, c(omega2(t), 0.0)), one, zero)
            .expect("n = 1")
    }

    pub fn with_shift(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_freeze(mut self, t: Option<f64>) -> Self {
        self.freeze = t;
        self
    }

    fn clamp(&self, t: f64) -> f64 {
        match self.freeze {
            Some(f) => t.clamp(-f, f),
            None => t,
        }
    }

    pub fn l(&self, t: f64) -> CMat {
        (self.l)(self.clamp(t))
    }

    pub fn l0(&self, t: f64) -> CMat {
        self.l(t) + eye(self.n) * c(self.b, 0.0)
    }

    pub fn alpha2(&self, t: f64) -> CMat {
        (self.alpha2)(self.clamp(t))
    }

    pub fn w(&self, t: f64) -> CMat {
        (self.w)(self.clamp(t))
    }

    /// Largest singular value of α⁻¹ W L0^{−1/2} at `t`.
    pub fn w_smallness(&self, t: f64) -> Result<f64> {
        let l0 = self.l0(t);
        let (lo, _) = eig_range_h(&l0);
        if lo <= 0.0 {
            return Err(Error::AssumptionViolation { what: format!("L0 not positive (λ_min {lo:.3e})"), t });
        }
        let a2 = self.alpha2(t);
        let (alo, _) = eig_range_h(&a2);
        if alo <= 0.0 {
            return Err(Error::AssumptionViolation { what: format!("α² not positive (λ_min {alo:.3e})"), t });
        }
        let a_inv = herm_fn(&a2, |x| 1.0 / x.sqrt());
        let l0_isqrt = herm_fn(&l0, |x| 1.0 / x.sqrt());
        Ok(op_norm(&(a_inv * self.w(t) * l0_isqrt)))
    }
}

/// Sampled assumption checks for a phase space.
#[derive(Clone, Debug, Serialize)]
pub struct KGValidation {
    pub samples: usize,
    pub min_l0_eig: f64,
    pub min_alpha2_eig: f64,
    pub min_h0_eig: f64,
    /// Estimated W-smallness constant.
    pub a: f64,
    pub b: f64,
    pub warning: Option<String>,
}

/// Cauchy-data phase space ℂⁿ ⊕ ℂⁿ with Q = [[0,1],[1,0]] and B(t) = QH(t).
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    pub kg: KGData,
    pub space: KreinSpace,
    pub validation: KGValidation,
}

/// Validates the assumptions at every node and midpoint of `grid` and assembles B(t).
pub fn assemble_phase_space(kg: KGData, grid: &TimeGrid) -> Result<PhaseSpace> {
    let mut times = Vec::with_capacity(2 * grid.n + 1);
    for i in 0..=grid.n {
        times.push(grid.t(i));
        if i < grid.n {
            times.push(0.5 * (grid.t(i) + grid.t(i + 1)));
        }
    }
    let space = KreinSpace::kg(kg.n);
    let mut v = KGValidation {
        samples: times.len(),
        min_l0_eig: f64::INFINITY,
        min_alpha2_eig: f64::INFINITY,
        min_h0_eig: f64::INFINITY,
        a: 0.0,
        b: kg.b,
        warning: None,
    };
    let ph = PhaseSpace { kg, space, validation: v.clone() };
    for &t in &times {
        let a = ph.kg.w_smallness(t)?;
        if a >= 1.0 {
            return Err(Error::AssumptionViolation { what: format!("W-smallness constant a = {a:.4} ≥ 1"), t });
        }
        let h0 = ph.h0(t);
        if cholesky(&h0).is_none() {
            return Err(Error::AssumptionViolation { what: "H0 is not positive definite".into(), t });
        }
        v.a = v.a.max(a);
        v.min_l0_eig = v.min_l0_eig.min(eig_range_h(&ph.kg.l0(t)).0);
        v.min_alpha2_eig = v.min_alpha2_eig.min(eig_range_h(&ph.kg.alpha2(t)).0);
        v.min_h0_eig = v.min_h0_eig.min(eig_range_h(&h0).0);
    }
    if v.a > 0.9 {
        v.warning = Some(format!("W-smallness constant a = {:.4} exceeds 0.9", v.a));
    }
    Ok(PhaseSpace { validation: v, ..ph })
}

impl PhaseSpace {
    pub fn n(&self) -> usize {
        self.kg.n
    }

    /// H(t) = [[L, W†], [W, α²]].
    pub fn h(&self, t: f64) -> CMat {
        let w = self.kg.w(t);
        block2(&self.kg.l(t), &w.adjoint(), &w, &self.kg.alpha2(t))
    }

    /// H0(t) with L replaced by L0.
    pub fn h0(&self, t: f64) -> CMat {
        let w = self.kg.w(t);
        block2(&self.kg.l0(t), &w.adjoint(), &w, &self.kg.alpha2(t))
    }

    /// B(t) = QH(t) = [[W, α²], [L, W†]].
    pub fn b(&self, t: f64) -> CMat {
        &self.space.q * self.h(t)
    }

    /// ‖H0(t)^λ v‖.
    pub fn weighted_norm(&self, t: f64, v: &CVec, lambda: f64) -> f64 {
        (herm_fn(&self.h0(t), |x| x.powf(lambda)) * v).norm()
    }

    pub fn schedule(&self) -> GeneratorSchedule {
        let me = self.clone();
        GeneratorSchedule::from_hamiltonian(self.space.clone(), self.kg.smoothness, move |t| me.h(t))
    }
}

/// Z = [[0, 0], [1, 0]] in n×n blocks.
pub fn spectral_coupling(n: usize) -> CMat {
    let z = CMat::zeros(n, n);
    block2(&z, &z, &eye(n), &z)
}

/// Site-resolved coefficient profile (t, site) ↦ value.
pub type SiteFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// Periodic 1D lattice with nearest-neighbour Laplacian.
#[derive(Clone)]
pub struct LatticeParams {
    pub sites: usize,
    pub spacing: f64,
    /// m²(t, x)
    pub mass2: SiteFn,
    /// scalar potential Y(t, x)
    pub scalar: SiteFn,
    /// electric potential V(t, x)
    pub electric: SiteFn,
    /// Window sampled when choosing the shift b.
    pub window: (f64, f64),
    pub smoothness: Smoothness,
}

/// Periodic discrete Laplacian −Δ_h.
pub fn periodic_laplacian(sites: usize, h: f64) -> CMat {
    let mut m = CMat::zeros(sites, sites);
    let s = 1.0 / (h * h);
    for i in 0..sites {
        m[(i, i)] += c(2.0 * s, 0.0);
        m[(i, (i + 1) % sites)] -= c(s, 0.0);
        m[(i, (i + sites - 1) % sites)] -= c(s, 0.0);
    }
    m
}

/// L = −Δ_h + m² + Y, W = −V, α² = 1; b = max(0, −min λ(L)) + 1 over the window.
pub fn lattice_model(p: LatticeParams) -> Result<KGData> {
    if p.sites < 2 {
        return input("lattice needs at least 2 sites");
    }
    if !(p.spacing > 0.0) {
        return input("lattice spacing must be positive");
    }
    if !(p.window.0 < p.window.1) {
        return input("lattice window must be increasing");
    }
    let lap = periodic_laplacian(p.sites, p.spacing);
    let n = p.sites;
    let (m2, y, v) = (p.mass2.clone(), p.scalar.clone(), p.electric.clone());
    let l = move |t: f64| {
        let mut m = lap.clone();
        for x in 0..n {
            m[(x, x)] += c(m2(t, x) + y(t, x), 0.0);
        }
        m
    };
    let w = move |t: f64| CMat::from_diagonal(&CVec::from_fn(n, |x, _| c(-v(t, x), 0.0)));
    let samples = 257;
    let mut lmin = f64::INFINITY;
    for k in 0..samples {
        let t = p.window.0 + (p.window.1 - p.window.0) * k as f64 / (samples - 1) as f64;
        lmin = lmin.min(eig_range_h(&l(t)).0);
    }
    let b = (-lmin).max(0.0) + 1.0;
    Ok(KGData::new(n, l, move |_| eye(n), w)?.with_shift(b).with_smoothness(p.smoothness))
}

/// Lattice dispersion ω_k² = m² + (4/h²) sin²(πk/n).
pub fn lattice_dispersion(sites: usize, h: f64, m2: f64) -> Vec<f64> {
    (0..sites)
        .map(|k| m2 + 4.0 / (h * h) * (std::f64::consts::PI * k as f64 / sites as f64).sin().powi(2))
        .collect()
}

/// Cauchy data γ_{t_i}(f) = [f; −α⁻²(−i∂t + W) f] with a second-order time derivative.
/// sgn B for the static lattice with uniform m², W = 0, α² = 1, assembled mode by mode
/// in the discrete Fourier basis: [[0, U ω⁻¹ U†], [U ω U†, 0]].
pub fn lattice_sign_formula(sites: usize, h: f64, m2: f64) -> Result<CMat> {
    let omega2 = lattice_dispersion(sites, h, m2);
    if let Some(w) = omega2.iter().find(|w| !(**w > 0.0)) {
        return input(format!("lattice mode with ω² = {w} has no sign"));
    }
    let u = CMat::from_fn(sites, sites, |x, k| {
        let phase = 2.0 * std::f64::consts::PI * (k * x) as f64 / sites as f64;
        c(phase.cos(), phase.sin()) / (sites as f64).sqrt()
    });
    let diag = |p: f64| CMat::from_diagonal(&CVec::from_iterator(sites, omega2.iter().map(|w| c(w.powf(p), 0.0))));
    let z = CMat::zeros(sites, sites);
    Ok(block2(&z, &(&u * diag(-0.5) * u.adjoint()), &(&u * diag(0.5) * u.adjoint()), &z))
}

pub fn cauchy_map(kg: &KGData, grid: &TimeGrid, f: &[CVec], i: usize) -> Result<CVec> {
    let n = kg.n;
    if f.len() != grid.n + 1 || f.iter().any(|v| v.len() != n) || i > grid.n {
        return input(format!("grid function must have {} nodes of dimension {n}", grid.n + 1));
    }
    if grid.n < 2 {
        return input("cauchy_map needs at least 3 nodes");
    }
    let dt = grid.dt();
    let df = if i == 0 {
        (&f[1] * c(4.0, 0.0) - &f[0] * c(3.0, 0.0) - &f[2]) * c(0.5 / dt, 0.0)
    } else if i == grid.n {
        (&f[i] * c(3.0, 0.0) - &f[i - 1] * c(4.0, 0.0) + &f[i - 2]) * c(0.5 / dt, 0.0)
    } else {
        (&f[i + 1] - &f[i - 1]) * c(0.5 / dt, 0.0)
    };
    let t = grid.t(i);
    let a_inv = crate::linalg::inverse_or(&kg.alpha2(t), "α²")?;
    let second = -(a_inv * (df * (-I) + kg.w(t) * &f[i]));
    let mut out = CVec::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&f[i]);
    out.rows_mut(n, n).copy_from(&second);
    Ok(out)
}

/// Drift of the charge pairing along evolved solutions.
#[derive(Clone, Debug, Serialize)]
pub struct ChargeDrift {
    /// max_i |(u_i|Qv_i) − (u_0|Qv_0)| with u_i = R(t_i,t_0)u_0.
    pub evolved: f64,
    /// Same with the pairing evaluated on γ_{t_i}(u₁), interior nodes.
    pub cauchy: f64,
    pub reference: f64,
}

pub fn charge_drift(ph: &PhaseSpace, evo: &Evolution, u0: &CVec, v0: &CVec) -> Result<ChargeDrift> {
    let n = ph.n();
    let grid = evo.grid;
    let u: Vec<CVec> = (0..=grid.n).map(|i| evo.forward(i) * u0).collect();
    let v: Vec<CVec> = (0..=grid.n).map(|i| evo.forward(i) * v0).collect();
    let q = &ph.space.q;
    let form = |a: &CVec, b: &CVec| (a.adjoint() * q * b)[(0, 0)];
    let reference = form(u0, v0);
    let mut evolved: f64 = 0.0;
    for i in 0..=grid.n {
        evolved = evolved.max((form(&u[i], &v[i]) - reference).norm());
    }
    let u1: Vec<CVec> = u.iter().map(|x| x.rows(0, n).into_owned()).collect();
    let v1: Vec<CVec> = v.iter().map(|x| x.rows(0, n).into_owned()).collect();
    let mut cauchy: f64 = 0.0;
    for i in 1..grid.n {
        let gu = cauchy_map(&ph.kg, &grid, &u1, i)?;
        let gv = cauchy_map(&ph.kg, &grid, &v1, i)?;
        cauchy = cauchy.max((form(&gu, &gv) - reference).norm());
    }
    Ok(ChargeDrift { evolved, cauchy, reference: reference.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{in_out_involutions, solve_evolution, Scheme};
    use crate::linalg::from_real;

    #[test]
    fn single_mode_assembly() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let ph = assemble_phase_space(KGData::mode(|_| 4.0), &grid).unwrap();
        assert_eq!(ph.b(0.3), from_real(2, 2, &[0.0, 1.0, 4.0, 0.0]));
        assert_eq!(ph.validation.a, 0.0);
    }

    #[test]
    fn electric_potential_block() {
        let v = 0.5;
        let kg = KGData::new(
            1,
            |_| CMat::from_element(1, 1, c(4.0, 0.0)),
            |_| eye(1),
            move |_| CMat::from_element(1, 1, c(-v, 0.0)),
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let ph = assemble_phase_space(kg, &grid).unwrap();
        assert_eq!(ph.b(0.0), from_real(2, 2, &[-v, 1.0, 4.0, -v]));
        assert_eq!(ph.schedule().q_self_adjoint_residual(0.0), 0.0);
        // a = |V| / ω
        assert!((ph.validation.a - 0.25).abs() < 1e-14);
    }

    #[test]
    fn w_smallness_guard() {
        let kg = KGData::new(
            1,
            |_| CMat::from_element(1, 1, c(1.0, 0.0)),
            |_| eye(1),
            |_| CMat::from_element(1, 1, c(-1.5, 0.0)),
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert!(matches!(assemble_phase_space(kg, &grid), Err(Error::AssumptionViolation { .. })));
    }

    #[test]
    fn two_site_lattice_needs_shift() {
        let zero: SiteFn = Arc::new(|_, _| 0.0);
        let kg = lattice_model(LatticeParams {
            sites: 2,
            spacing: 1.0,
            mass2: zero.clone(),
            scalar: zero.clone(),
            electric: zero,
            window: (0.0, 1.0),
            smoothness: Smoothness::C1,
        })
        .unwrap();
        let (vals, _) = crate::linalg::eigh(&kg.l(0.0));
        assert!(vals[0].abs() < 1e-14 && (vals[1] - 4.0).abs() < 1e-14);
        assert!(kg.b > 0.0);
    }

    #[test]
    fn lattice_spectrum_matches_dispersion() {
        let m2 = 0.7;
        let kg = lattice_model(LatticeParams {
            sites: 6,
            spacing: 0.5,
            mass2: Arc::new(move |_, _| m2),
            scalar: Arc::new(|_, _| 0.0),
            electric: Arc::new(|_, _| 0.0),
            window: (0.0, 1.0),
            smoothness: Smoothness::C1,
        })
        .unwrap();
        let (vals, _) = crate::linalg::eigh(&kg.l(0.0));
        let mut expect = lattice_dispersion(6, 0.5, m2);
        expect.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_signs_match_fourier_formula() {
        let m2 = 0.8;
        let kg = lattice_model(LatticeParams {
            sites: 6,
            spacing: 0.7,
            mass2: Arc::new(move |_, _| m2),
            scalar: Arc::new(|_, _| 0.0),
            electric: Arc::new(|_, _| 0.0),
            window: (0.0, 1.0),
            smoothness: Smoothness::C1,
        })
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let ph = assemble_phase_space(kg, &grid).unwrap();
        let evo = solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap();
        let io = in_out_involutions(&ph.schedule(), &evo).unwrap();
        let formula = lattice_sign_formula(6, 0.7, m2).unwrap();
        assert!(crate::linalg::max_abs(&(&io.s_minus.s - &formula)) < 1e-10);
        assert!(lattice_sign_formula(4, 1.0, 0.0).is_err());
    }

    #[test]
    fn cauchy_map_of_positive_frequency_mode() {
        let omega = 2.0;
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let kg = KGData::mode(move |_| omega * omega);
        let f: Vec<CVec> = grid.nodes().iter().map(|&t| CVec::from_element(1, (-I * omega * t).exp())).collect();
        let i = 77;
        let g = cauchy_map(&kg, &grid, &f, i).unwrap();
        // second component ω e^{−iωt}
        let t = grid.t(i);
        let exact = (-I * omega * t).exp() * omega;
        assert!((g[1] - exact).norm() < 2.0 * grid.dt().powi(2));
        let flat: Vec<CVec> = grid.nodes().iter().map(|_| CVec::from_element(1, c(1.0, 0.0))).collect();
        assert_eq!(cauchy_map(&kg, &grid, &flat, 5).unwrap()[1], c(0.0, 0.0));
    }

    #[test]
    fn cauchy_data_follow_the_evolution() {
        let grid = TimeGrid::new(-2.0, 2.0, 800).unwrap();
        let kg = KGData::mode(|t| 2.0 + (t).tanh());
        let ph = assemble_phase_space(kg, &grid).unwrap();
        let evo = solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap();
        let u0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.3, -0.4)]);
        let u: Vec<CVec> = (0..=grid.n).map(|i| evo.forward(i) * &u0).collect();
        let u1: Vec<CVec> = u.iter().map(|x| x.rows(0, 1).into_owned()).collect();
        let mut worst: f64 = 0.0;
        for i in 1..grid.n {
            let g = cauchy_map(&ph.kg, &grid, &u1, i).unwrap();
            worst = worst.max((g - &u[i]).norm());
        }
        assert!(worst < 1e-4, "{worst:e}");
        let d = charge_drift(&ph, &evo, &u0, &CVec::from_vec(vec![c(0.2, 0.1), c(1.0, 0.0)])).unwrap();
        assert!(d.evolved < 1e-12);
        assert!(d.cauchy < 1e-4);
    }

    #[test]
    fn lattice_involutions_match_mode_sign() {
        let m2 = 1.3;
        let kg = lattice_model(LatticeParams {
            sites: 4,
            spacing: 1.0,
            mass2: Arc::new(move |_, _| m2),
            scalar: Arc::new(|_, _| 0.0),
            electric: Arc::new(|_, _| 0.0),
            window: (0.0, 1.0),
            smoothness: Smoothness::C1,
        })
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let ph = assemble_phase_space(kg, &grid).unwrap();
        let evo = solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap();
        let io = in_out_involutions(&ph.schedule(), &evo).unwrap();
        // sgn B = [[0, L^{-1/2}], [L^{1/2}, 0]] assembled from Fourier modes.
        let n = 4;
        let omega = lattice_dispersion(n, 1.0, m2);
        let f = CMat::from_fn(n, n, |x, k| {
            crate::C64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * std::f64::consts::PI * (x * k) as f64 / n as f64)
        });
        let diag = |p: f64| CMat::from_diagonal(&CVec::from_iterator(n, omega.iter().map(|w| c(w.powf(p), 0.0))));
        let s = block2(
            &CMat::zeros(n, n),
            &(&f * diag(-0.5) * f.adjoint()),
            &(&f * diag(0.5) * f.adjoint()),
            &CMat::zeros(n, n),
        );
        assert!((&io.s_minus.s - &s).norm() < 1e-10);
        assert!((&io.s_plus.s - &s).norm() < 1e-10);
    }
}
