//! Spacetime propagators G• as upper-right blocks of the temporal kernels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::KGData;
use crate::error::{input, Result};
use crate::evolution::{apply_kernel, Bisolutions, ClassicalKernels, FeynmanKernels, Kernel, KernelTag, TimeGrid};
use crate::linalg::{c, inverse_or, CMat, CVec, C64, I};
use crate::random::gaussian_vector;

/// G(t_i, t_j) = factor · E(t_i, t_j)₁₂.
#[derive(Clone, Debug)]
pub struct SpacetimePropagator {
    pub tag: KernelTag,
    pub kernel: Kernel,
    pub factor: C64,
}

impl SpacetimePropagator {
    /// −i E₁₂, the convention for which G•K f = f.
    pub fn from_inverse(kernel: &Kernel) -> Self {
        SpacetimePropagator { tag: kernel.tag, kernel: kernel.clone(), factor: -I }
    }

    /// E₁₂ without factor (frequency bisolutions).
    pub fn from_bisolution(kernel: &Kernel) -> Self {
        SpacetimePropagator { tag: kernel.tag, kernel: kernel.clone(), factor: c(1.0, 0.0) }
    }

    pub fn n(&self) -> usize {
        self.kernel.dim() / 2
    }

    pub fn grid(&self) -> TimeGrid {
        self.kernel.grid()
    }

    pub fn eval(&self, i: usize, j: usize) -> CMat {
        let n = self.n();
        self.kernel.eval(i, j).view((0, n), (n, n)) * self.factor
    }
}

/// (G f)(t_i) = Σ_j w_j G(t_i, t_j) f(t_j), coincident node symmetrized.
pub fn apply_propagator(g: &SpacetimePropagator, f: &[CVec]) -> Result<Vec<CVec>> {
    let n = g.n();
    if f.iter().any(|v| v.len() != n) {
        return input(format!("grid function values must have dimension {n}"));
    }
    let lifted: Vec<CVec> = f
        .iter()
        .map(|v| {
            let mut u = CVec::zeros(2 * n);
            u.rows_mut(n, n).copy_from(v);
            u
        })
        .collect();
    let out = apply_kernel(&g.kernel, &lifted)?;
    Ok(out.into_iter().map(|u| u.rows(0, n) * g.factor).collect())
}

/// G^PJ, G^∨, G^∧, G^F, G^F̄ and the four frequency bisolutions.
#[derive(Clone, Debug)]
pub struct PropagatorSet {
    pub pj: SpacetimePropagator,
    pub forward: SpacetimePropagator,
    pub backward: SpacetimePropagator,
    pub f: SpacetimePropagator,
    pub fbar: SpacetimePropagator,
    pub out_plus: SpacetimePropagator,
    pub out_minus: SpacetimePropagator,
    pub in_plus: SpacetimePropagator,
    pub in_minus: SpacetimePropagator,
}

impl PropagatorSet {
    pub fn all(&self) -> [&SpacetimePropagator; 9] {
        [
            &self.pj,
            &self.forward,
            &self.backward,
            &self.f,
            &self.fbar,
            &self.out_plus,
            &self.out_minus,
            &self.in_plus,
            &self.in_minus,
        ]
    }

    pub fn get(&self, tag: KernelTag) -> Option<&SpacetimePropagator> {
        self.all().into_iter().find(|g| g.tag == tag)
    }
}

pub fn spacetime_propagators(k: &ClassicalKernels, bis: &Bisolutions, feyn: &FeynmanKernels) -> PropagatorSet {
    PropagatorSet {
        pj: SpacetimePropagator::from_inverse(&k.pj),
        forward: SpacetimePropagator::from_inverse(&k.forward),
        backward: SpacetimePropagator::from_inverse(&k.backward),
        f: SpacetimePropagator::from_inverse(&feyn.f),
        fbar: SpacetimePropagator::from_inverse(&feyn.fbar),
        out_plus: SpacetimePropagator::from_bisolution(&bis.out_plus),
        out_minus: SpacetimePropagator::from_bisolution(&bis.out_minus),
        in_plus: SpacetimePropagator::from_bisolution(&bis.in_plus),
        in_minus: SpacetimePropagator::from_bisolution(&bis.in_minus),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HermiticityEntry {
    /// e.g. "G^F† = G^Fbar"
    pub relation: String,
    /// max over off-diagonal sampled pairs of ‖G_a(i,j)† − s·G_b(j,i)‖, relative to max‖G_b‖
    pub pointwise: f64,
    /// |⟨u, G_a v⟩ − s⟨G_b u, v⟩| relative, random grid functions
    pub operator: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityEntry {
    pub tag: KernelTag,
    /// min over samples of Re⟨v, G v⟩ / ‖v‖‖Gv‖
    pub min_form: f64,
    /// max |Im⟨v, G v⟩| / ‖v‖‖Gv‖
    pub max_imag: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HermiticityReport {
    pub tol: f64,
    pub entries: Vec<HermiticityEntry>,
    pub positivity: Vec<PositivityEntry>,
}

impl HermiticityReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass) && self.positivity.iter().all(|p| p.pass)
    }

    /// Largest residual over all entries.
    pub fn worst(&self) -> f64 {
        let h = self.entries.iter().map(|e| e.pointwise.max(e.operator)).fold(0.0, f64::max);
        let p = self.positivity.iter().map(|p| (-p.min_form).max(p.max_imag)).fold(0.0, f64::max);
        h.max(p)
    }
}

fn weighted_inner(a: &[CVec], b: &[CVec], w: &[f64]) -> C64 {
    a.iter().zip(b).zip(w).map(|((x, y), wi)| x.dotc(y) * *wi).sum()
}

fn weighted_norm(a: &[CVec], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(x, wi)| x.norm_squared() * wi).sum::<f64>().sqrt()
}

impl PropagatorSet {
    /// G^PJ† = −G^PJ, G^∨† = G^∧, G^F† = G^F̄, G_±^{(±)}† = G_±^{(±)} and G_±^{(±)} ≥ 0.
    pub fn hermiticity(&self, tol: f64, seed: u64, max_side: usize) -> Result<HermiticityReport> {
        let grid = self.pj.grid();
        let n = self.pj.n();
        let w = grid.weights();
        let stride = (grid.n + 1).div_ceil(max_side.max(2)).max(1);
        let nodes: Vec<usize> = (0..=grid.n).step_by(stride).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rand_fn = |rng: &mut ChaCha8Rng| -> Vec<CVec> { (0..=grid.n).map(|_| gaussian_vector(rng, n)).collect() };

        let pairs: [(&str, &SpacetimePropagator, &SpacetimePropagator, f64); 7] = [
            ("G^PJ† = −G^PJ", &self.pj, &self.pj, -1.0),
            ("G^∨† = G^∧", &self.forward, &self.backward, 1.0),
            ("G^F† = G^Fbar", &self.f, &self.fbar, 1.0),
            ("G_+^(+)† = G_+^(+)", &self.out_plus, &self.out_plus, 1.0),
            ("G_+^(−)† = G_+^(−)", &self.out_minus, &self.out_minus, 1.0),
            ("G_−^(+)† = G_−^(+)", &self.in_plus, &self.in_plus, 1.0),
            ("G_−^(−)† = G_−^(−)", &self.in_minus, &self.in_minus, 1.0),
        ];
        let mut entries = Vec::new();
        for (relation, a, b, s) in pairs {
            let (diff, scale) = nodes
                .par_iter()
                .map(|&i| {
                    let mut d: f64 = 0.0;
                    let mut m: f64 = 0.0;
                    for &j in &nodes {
                        if i == j {
                            continue;
                        }
                        let gb = b.eval(j, i);
                        d = d.max((a.eval(i, j).adjoint() - &gb * c(s, 0.0)).norm());
                        m = m.max(gb.norm());
                    }
                    (d, m)
                })
                .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
            let pointwise = diff / scale.max(f64::MIN_POSITIVE);
            let (u, v) = (rand_fn(&mut rng), rand_fn(&mut rng));
            let av = apply_propagator(a, &v)?;
            let bu = apply_propagator(b, &u)?;
            let lhs = weighted_inner(&u, &av, &w);
            let rhs = weighted_inner(&bu, &v, &w) * s;
            let denom = weighted_norm(&u, &w) * weighted_norm(&av, &w) + weighted_norm(&bu, &w) * weighted_norm(&v, &w);
            let operator = (lhs - rhs).norm() / denom.max(f64::MIN_POSITIVE);
            entries.push(HermiticityEntry {
                relation: relation.to_string(),
                pointwise,
                operator,
                pass: pointwise <= tol && operator <= tol,
            });
        }
        let mut positivity = Vec::new();
        for g in [&self.out_plus, &self.out_minus, &self.in_plus, &self.in_minus] {
            let (mut min_form, mut max_imag) = (f64::INFINITY, 0.0f64);
            for _ in 0..4 {
                let v = rand_fn(&mut rng);
                let gv = apply_propagator(g, &v)?;
                let form = weighted_inner(&v, &gv, &w);
                let scale = (weighted_norm(&v, &w) * weighted_norm(&gv, &w)).max(f64::MIN_POSITIVE);
                min_form = min_form.min(form.re / scale);
                max_imag = max_imag.max(form.im.abs() / scale);
            }
            positivity.push(PositivityEntry { tag: g.tag, min_form, max_imag, pass: min_form >= -tol && max_imag <= tol });
        }
        Ok(HermiticityReport { tol, entries, positivity })
    }
}

/// K f = (D_t + W†)α⁻²(D_t + W) f − L f with D_t = −i∂t on a staggered stencil;
/// zero at the two end nodes.
pub fn kg_operator(kg: &KGData, grid: &TimeGrid, f: &[CVec]) -> Result<Vec<CVec>> {
    let n = kg.n;
    if f.len() != grid.n + 1 || f.iter().any(|v| v.len() != n) {
        return input(format!("grid function must have {} nodes of dimension {n}", grid.n + 1));
    }
    let dt = grid.dt();
    // g_{i+½} = α⁻²(D_t + W) f at the midpoints.
    let half: Vec<Result<CVec>> = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let tm = 0.5 * (grid.t(i) + grid.t(i + 1));
            let d = (&f[i + 1] - &f[i]) * (-I / dt);
            let avg = (&f[i + 1] + &f[i]) * c(0.5, 0.0);
            Ok(inverse_or(&kg.alpha2(tm), "α²")? * (d + kg.w(tm) * avg))
        })
        .collect();
    let half = half.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = vec![CVec::zeros(n); grid.n + 1];
    out.par_iter_mut().enumerate().skip(1).take(grid.n.saturating_sub(1)).for_each(|(i, o)| {
        let t = grid.t(i);
        let d = (&half[i] - &half[i - 1]) * (-I / dt);
        let avg = (&half[i] + &half[i - 1]) * c(0.5, 0.0);
        *o = d + kg.w(t).adjoint() * avg - kg.l(t) * &f[i];
    });
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LeftInverseResult {
    pub tag: KernelTag,
    /// ‖G K f − f‖ / ‖f‖ over interior nodes, trapezoid-weighted
    pub relative: f64,
    pub absolute: f64,
}

/// ‖G•K f − f‖ for f vanishing near both ends of the grid.
pub fn kg_left_inverse_check(kg: &KGData, g: &SpacetimePropagator, f: &[CVec]) -> Result<LeftInverseResult> {
    let grid = g.grid();
    if f.len() != grid.n + 1 || grid.n < 4 {
        return input(format!("test function must have {} nodes", grid.n + 1));
    }
    let fmax = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for &i in &[0, 1, grid.n - 1, grid.n] {
        if f[i].norm() > 1e-12 * fmax.max(f64::MIN_POSITIVE) {
            return input(format!("test function is not compactly supported: nonzero at node {i}"));
        }
    }
    let kf = kg_operator(kg, &grid, f)?;
    let gkf = apply_propagator(g, &kf)?;
    let w = grid.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..grid.n {
        num += w[i] * (&gkf[i] - &f[i]).norm_squared();
        den += w[i] * f[i].norm_squared();
    }
    let absolute = num.sqrt();
    let relative = if den > 0.0 { absolute / den.sqrt() } else { absolute };
    Ok(LeftInverseResult { tag: g.tag, relative, absolute })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::evolution::{bisolution_kernels, classical_kernels, feynman_kernels, in_out_involutions, solve_evolution, Scheme};
    use crate::kleingordon::assemble_phase_space;

    fn stationary(omega: f64, t: f64, n: usize) -> (KGData, PropagatorSet) {
        let grid = TimeGrid::new(-t, t, n).unwrap();
        let kg = KGData::mode(move |_| omega * omega);
        let ph = assemble_phase_space(kg.clone(), &grid).unwrap();
        let evo = Arc::new(solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap());
        let io = in_out_involutions(&ph.schedule(), &evo).unwrap();
        let k = classical_kernels(&evo);
        let b = bisolution_kernels(&evo, &io);
        let f = feynman_kernels(&evo, &io).unwrap();
        (kg, spacetime_propagators(&k, &b, &f))
    }

    #[test]
    fn single_mode_closed_forms() {
        let omega = 2.0;
        let (_, g) = stationary(omega, 2.0, 400);
        let grid = g.pj.grid();
        for (i, j) in [(300, 100), (100, 300), (250, 249)] {
            let tau = grid.t(i) - grid.t(j);
            let gf = g.f.eval(i, j)[(0, 0)];
            let expect = (-I * omega * tau.abs()).exp() / (I * 2.0 * omega);
            assert!((gf - expect).norm() < 1e-12, "{i} {j}");
            let gpj = g.pj.eval(i, j)[(0, 0)];
            assert!((gpj - c(-(omega * tau).sin() / omega, 0.0)).norm() < 1e-12);
            let gp = g.out_plus.eval(i, j)[(0, 0)];
            assert!((gp - (-I * omega * tau).exp() / (2.0 * omega)).norm() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_table_holds() {
        let (_, g) = stationary(1.5, 3.0, 300);
        let rep = g.hermiticity(1e-10, 1, 64).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
    }

    fn bump(grid: &TimeGrid, center: f64, width: f64, omega: f64) -> Vec<CVec> {
        grid.nodes()
            .iter()
            .map(|&t| {
                let x = (t - center) / width;
                let v = if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
                CVec::from_element(1, (-I * omega * t).exp() * v)
            })
            .collect()
    }

    #[test]
    fn left_inverse_is_second_order() {
        let mut prev = None;
        for n in [500, 1000, 2000] {
            let (kg, g) = stationary(2.0, 4.0, n);
            let f = bump(&g.pj.grid(), 0.3, 2.0, 2.0);
            let mut worst: f64 = 0.0;
            for p in [&g.forward, &g.backward, &g.f, &g.fbar] {
                worst = worst.max(kg_left_inverse_check(&kg, p, &f).unwrap().relative);
            }
            if let Some(p) = prev {
                let ratio: f64 = p / worst;
                assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
            }
            prev = Some(worst);
        }
        assert!(prev.unwrap() < 1e-4);
    }

    #[test]
    fn left_inverse_rejects_boundary_support() {
        let (kg, g) = stationary(2.0, 1.0, 50);
        let f = vec![CVec::from_element(1, c(1.0, 0.0)); 51];
        assert!(kg_left_inverse_check(&kg, &g.f, &f).is_err());
        let zero = vec![CVec::zeros(1); 51];
        assert_eq!(kg_left_inverse_check(&kg, &g.f, &zero).unwrap().absolute, 0.0);
    }
}
