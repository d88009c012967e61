//! Evolution perturbed by the spectral parameter and the finite-interval resolvent.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagators::{apply_propagator, SpacetimePropagator};
use super::{spectral_coupling, PhaseSpace};
use crate::error::{Error, Result};
use crate::evolution::{generator_sign, integrate, newton_sign, Branch, Evolution, Kernel, KernelTag, Sample, Scheme, TimeGrid};
use crate::krein::{q_complement, Subspace};
use crate::linalg::{c, eye, op_norm, orth, projection_along, CMat, CVec, C64, I};

/// Boundary subspaces of the perturbed evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventAnchors {
    /// Z₋⁽⁻⁾ = Ran Π₋⁻ at t₀ and Z₊⁽⁺⁾ = Ran Π₊⁺ at t_N, independent of z.
    Frequency,
    /// Ran ½(1 + sgn(−iB_z(t₀))) and Ran ½(1 + sgn(iB_z(t_N))): solutions decaying away from the interval.
    Decaying,
}

/// R_z with the kernels E_z^{(+−)}, E_z^{(−+)} and G_z = −i(E_z)₁₂.
#[derive(Clone, Debug)]
pub struct PerturbedEvolution {
    pub z: C64,
    pub anchors: ResolventAnchors,
    pub evo: Arc<Evolution>,
    pub g_pm: SpacetimePropagator,
    pub g_mp: SpacetimePropagator,
    /// Condition numbers of the stacked boundary bases at t₀ for (+−) and (−+).
    pub cond_pm: f64,
    pub cond_mp: f64,
}

/// (Z₋⁽⁻⁾ at t₀, Z₊⁽⁺⁾ at t_N) for spectral parameter z.
fn anchor_pair(ph: &PhaseSpace, grid: &TimeGrid, z: C64, anchors: ResolventAnchors) -> Result<(Subspace, Subspace)> {
    let n = ph.n();
    let dim = 2 * n;
    let half = c(0.5, 0.0);
    match anchors {
        ResolventAnchors::Frequency => {
            let sched = ph.schedule();
            let sm = generator_sign(&ph.space, &sched.sample(grid.t_minus))?;
            let sp = generator_sign(&ph.space, &sched.sample(grid.t_plus))?;
            let minus = Subspace::range_of(&((eye(dim) - sm) * half));
            let plus = Subspace::range_of(&((eye(dim) + sp) * half));
            Ok((minus, plus))
        }
        ResolventAnchors::Decaying => {
            let zc = spectral_coupling(n) * z;
            let b0 = ph.b(grid.t_minus) - &zc;
            let b1 = ph.b(grid.t_plus) - &zc;
            let s0 = newton_sign(&(b0 * (-I)))?;
            let s1 = newton_sign(&(b1 * I))?;
            Ok((Subspace::range_of(&((eye(dim) + s0) * half)), Subspace::range_of(&((eye(dim) + s1) * half))))
        }
    }
}

fn singular(z: C64, e: Error) -> Error {
    match e {
        Error::ComplementarityFailure { smallest } => Error::SingularSet { re: z.re, im: z.im, smallest },
        other => other,
    }
}

/// Builds R_z from B_z = B − zZ, carries the boundary subspaces to t₀ and forms
/// E_z^{(+−)}, E_z^{(−+)}. The (−+) anchors are the Q-orthogonal complements of the
/// (+−) anchors at z̄.
pub fn perturbed_resolvent(
    ph: &PhaseSpace,
    grid: TimeGrid,
    z: C64,
    anchors: ResolventAnchors,
) -> Result<PerturbedEvolution> {
    let n = ph.n();
    let zc = spectral_coupling(n) * z;
    let sampler = |t: f64| Sample { b: ph.b(t) - &zc, h: None };
    let evo = Arc::new(integrate(&ph.space, &sampler, grid, Scheme::MidpointExp)?);
    let (zm_minus, zp_plus) = anchor_pair(ph, &grid, z, anchors)?;
    let (zm_minus_bar, zp_plus_bar) = anchor_pair(ph, &grid, z.conj(), anchors)?;
    let zm_plus = q_complement(&ph.space, &zm_minus_bar)?;
    let zp_minus = q_complement(&ph.space, &zp_plus_bar)?;
    let back = evo.backward(grid.n);
    let pull = |s: &Subspace| orth(&(back * &s.basis), 1e-12);
    let (l_pm, cond_pm) = projection_along(&pull(&zp_plus), &zm_minus.basis).map_err(|e| singular(z, e))?;
    let (l_mp, cond_mp) = projection_along(&pull(&zp_minus), &zm_plus.basis).map_err(|e| singular(z, e))?;
    let one = eye(2 * n);
    let kernel = |tag, l: &CMat| {
        Kernel::new(
            tag,
            &evo,
            Branch::Anchored { sign: 1.0, x: Arc::new(l.clone()) },
            Branch::Anchored { sign: -1.0, x: Arc::new(&one - l) },
        )
    };
    let g_pm = SpacetimePropagator::from_inverse(&kernel(KernelTag::ResolventPlusMinus, &l_pm));
    let g_mp = SpacetimePropagator::from_inverse(&kernel(KernelTag::ResolventMinusPlus, &l_mp));
    Ok(PerturbedEvolution { z, anchors, evo, g_pm, g_mp, cond_pm, cond_mp })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventCheck {
    pub z: [f64; 2],
    pub w: [f64; 2],
    /// ‖G_z f − G_w f − (w−z)G_z G_w f‖ / ‖f‖ for (+−), the quadrature operator norm on f
    pub residual_pm: f64,
    /// same for (−+)
    pub residual_mp: f64,
    /// residual_pm divided by ‖G_z f − G_w f‖ / ‖f‖
    pub relative_pm: f64,
    /// the (+−) residual with (z−w) in place of (w−z), relative as above
    pub swapped_sign: f64,
    /// max over sampled pairs of ‖G_z^{(+−)}(t,s)† − G_{z̄}^{(−+)}(s,t)‖ / max‖G‖
    pub adjoint: f64,
}

fn weighted_norm(a: &[CVec], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(x, wi)| x.norm_squared() * wi).sum::<f64>().sqrt()
}

fn combo(a: &[CVec], b: &[CVec], s: C64) -> Vec<CVec> {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

/// (‖res f‖/‖f‖, ‖res f‖/‖(G_z−G_w)f‖, same for the (z−w) form).
fn resolvent_residuals(
    gz: &SpacetimePropagator,
    gw: &SpacetimePropagator,
    z: C64,
    w: C64,
    f: &[CVec],
) -> Result<(f64, f64, f64)> {
    let weights = gz.grid().weights();
    let a = apply_propagator(gz, f)?;
    let b = apply_propagator(gw, f)?;
    let ab = apply_propagator(gz, &b)?;
    let diff = combo(&a, &b, c(-1.0, 0.0));
    let fnorm = weighted_norm(f, &weights).max(f64::MIN_POSITIVE);
    let scale = weighted_norm(&diff, &weights).max(f64::MIN_POSITIVE);
    let res = weighted_norm(&combo(&diff, &ab, z - w), &weights);
    let swapped = weighted_norm(&combo(&diff, &ab, w - z), &weights) / scale;
    Ok((res / fnorm, res / scale, swapped))
}

/// Resolvent equation G_z − G_w = (w−z)G_zG_w on a smooth test function,
/// and the adjoint relation G_z^{(+−)}† = G_{z̄}^{(−+)} on sampled node pairs.
pub fn resolvent_equation_check(
    ph: &PhaseSpace,
    grid: TimeGrid,
    z: C64,
    w: C64,
    anchors: ResolventAnchors,
    f: &[CVec],
) -> Result<ResolventCheck> {
    let pz = perturbed_resolvent(ph, grid, z, anchors)?;
    let pw = perturbed_resolvent(ph, grid, w, anchors)?;
    let pzb = perturbed_resolvent(ph, grid, z.conj(), anchors)?;
    let (residual_pm, relative_pm, swapped_sign) = resolvent_residuals(&pz.g_pm, &pw.g_pm, z, w, f)?;
    let (residual_mp, _, _) = resolvent_residuals(&pz.g_mp, &pw.g_mp, z, w, f)?;
    let stride = (grid.n / 60).max(1);
    let nodes: Vec<usize> = (0..=grid.n).step_by(stride).collect();
    let (d, m) = nodes
        .par_iter()
        .map(|&i| {
            let (mut d, mut m) = (0.0f64, 0.0f64);
            for &j in &nodes {
                if i == j {
                    continue;
                }
                let b = pzb.g_mp.eval(j, i);
                d = d.max((pz.g_pm.eval(i, j).adjoint() - &b).norm());
                m = m.max(b.norm());
            }
            (d, m)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    Ok(ResolventCheck {
        z: [z.re, z.im],
        w: [w.re, w.im],
        residual_pm,
        residual_mp,
        relative_pm,
        swapped_sign,
        adjoint: d / m.max(f64::MIN_POSITIVE),
    })
}

/// max_i ‖R_z̄(t_i,t₀)†QR_z(t_i,t₀) − Q‖.
pub fn twisted_pseudo_unitarity(ph: &PhaseSpace, grid: TimeGrid, z: C64) -> Result<f64> {
    let n = ph.n();
    let evolve = |z: C64| {
        let zc = spectral_coupling(n) * z;
        let sampler = |t: f64| Sample { b: ph.b(t) - &zc, h: None };
        integrate(&ph.space, &sampler, grid, Scheme::MidpointExp)
    };
    let rz = evolve(z)?;
    let rzb = evolve(z.conj())?;
    let q = &ph.space.q;
    Ok((0..=grid.n)
        .into_par_iter()
        .map(|i| op_norm(&(rzb.forward(i).adjoint() * q * rz.forward(i) - q)))
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct FeynmanLimitRow {
    pub eps: f64,
    /// max ‖G_{iε}(t,s) − G^F(t,s)‖ ⟨t⟩⁻¹⟨s⟩⁻¹ over sampled pairs
    pub to_feynman: f64,
    /// same for G_{−iε} against G^F̄
    pub to_anti_feynman: f64,
}

fn weighted_discrepancy(a: &SpacetimePropagator, b: &SpacetimePropagator, samples: usize) -> f64 {
    let grid = a.grid();
    let stride = (grid.n / samples.max(1)).max(1);
    let nodes: Vec<usize> = (0..=grid.n).step_by(stride).collect();
    let jb = |t: f64| (1.0 + t * t).sqrt();
    nodes
        .par_iter()
        .map(|&i| {
            nodes.iter().fold(0.0f64, |acc, &j| {
                let d = (a.eval(i, j) - b.eval(i, j)).norm() / (jb(grid.t(i)) * jb(grid.t(j)));
                acc.max(d)
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// G_{±iε}^{(+−)} against G^F and G^F̄ for each ε. At ε = 0 the frequency anchors are
/// used and G^F̄ is compared with G_0^{(−+)}.
pub fn feynman_limit_demo(
    ph: &PhaseSpace,
    grid: TimeGrid,
    f: &SpacetimePropagator,
    fbar: &SpacetimePropagator,
    eps: &[f64],
) -> Result<Vec<FeynmanLimitRow>> {
    eps.iter()
        .map(|&e| {
            if e < 0.0 {
                return crate::error::input(format!("ε must be non-negative, got {e}"));
            }
            let anchors = if e == 0.0 { ResolventAnchors::Frequency } else { ResolventAnchors::Decaying };
            let plus = perturbed_resolvent(ph, grid, c(0.0, e), anchors)?;
            let minus = perturbed_resolvent(ph, grid, c(0.0, -e), anchors)?;
            Ok(FeynmanLimitRow {
                eps: e,
                to_feynman: weighted_discrepancy(&plus.g_pm, f, 80),
                to_anti_feynman: weighted_discrepancy(if e == 0.0 { &minus.g_mp } else { &minus.g_pm }, fbar, 80),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{classical_kernels, bisolution_kernels, feynman_kernels, in_out_involutions, solve_evolution};
    use crate::kleingordon::{assemble_phase_space, spacetime_propagators, KGData, PropagatorSet};

    fn mode(omega: f64, t: f64, n: usize) -> (PhaseSpace, TimeGrid) {
        let grid = TimeGrid::new(-t, t, n).unwrap();
        let ph = assemble_phase_space(KGData::mode(move |_| omega * omega), &grid).unwrap();
        (ph, grid)
    }

    fn props(ph: &PhaseSpace, grid: TimeGrid) -> PropagatorSet {
        let evo = Arc::new(solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap());
        let io = in_out_involutions(&ph.schedule(), &evo).unwrap();
        spacetime_propagators(
            &classical_kernels(&evo),
            &bisolution_kernels(&evo, &io),
            &feynman_kernels(&evo, &io).unwrap(),
        )
    }

    fn bump(grid: &TimeGrid, center: f64, width: f64) -> Vec<CVec> {
        grid.nodes()
            .iter()
            .map(|&t| {
                let x = (t - center) / width;
                let v = if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
                CVec::from_element(1, c(v, 0.0))
            })
            .collect()
    }

    #[test]
    fn zero_parameter_reproduces_feynman() {
        let (ph, grid) = mode(2.0, 2.0, 200);
        let p = props(&ph, grid);
        let r = perturbed_resolvent(&ph, grid, c(0.0, 0.0), ResolventAnchors::Frequency).unwrap();
        assert!(weighted_discrepancy(&r.g_pm, &p.f, 50) < 1e-11);
        assert!(weighted_discrepancy(&r.g_mp, &p.fbar, 50) < 1e-11);
    }

    #[test]
    fn decaying_resolvent_closed_form() {
        // (K + z)⁻¹ on ℝ: e^{−iκ|τ|}/(2iκ) with κ² = ω² − z, Im κ < 0; the finite
        // interval adds terms suppressed by e^{Im κ·T}.
        let omega = 2.0;
        let z = c(0.0, 3.0);
        let (ph, grid) = mode(omega, 15.0, 3000);
        let r = perturbed_resolvent(&ph, grid, z, ResolventAnchors::Decaying).unwrap();
        let mut kappa = (c(omega * omega, 0.0) - z).sqrt();
        if kappa.im > 0.0 {
            kappa = -kappa;
        }
        for (i, j) in [(1500, 1400), (1400, 1600), (1500, 1500)] {
            let tau = grid.t(i) - grid.t(j);
            let expect = (-I * kappa * tau.abs()).exp() / (I * 2.0 * kappa);
            let got = r.g_pm.eval(i, j)[(0, 0)];
            assert!((got - expect).norm() < 1e-4, "{got} vs {expect}");
        }
    }

    #[test]
    fn resolvent_equation_and_adjoint() {
        let (ph, grid) = mode(2.0, 3.0, 1000);
        let f = bump(&grid, 0.2, 1.5);
        let rc = resolvent_equation_check(&ph, grid, c(0.0, 0.3), c(-0.2, 0.1), ResolventAnchors::Frequency, &f).unwrap();
        assert!(rc.residual_pm < 1e-6, "{rc:?}");
        assert!(rc.residual_mp < 1e-6, "{rc:?}");
        assert!(rc.relative_pm < 3e-5, "{rc:?}");
        assert!(rc.swapped_sign > 1e-2, "{rc:?}");
        assert!(rc.adjoint < 1e-10, "{rc:?}");
    }

    #[test]
    fn twisted_pseudo_unitarity_holds() {
        let (ph, grid) = mode(1.3, 2.0, 400);
        assert!(twisted_pseudo_unitarity(&ph, grid, c(0.2, 0.7)).unwrap() < 1e-11);
    }

    #[test]
    fn feynman_limit_shrinks_with_eps() {
        let (ph, grid) = mode(1.0, 4.0, 400);
        let p = props(&ph, grid);
        let rows = feynman_limit_demo(&ph, grid, &p.f, &p.fbar, &[0.0, 0.1, 0.01, 0.001]).unwrap();
        assert!(rows[0].to_feynman < 1e-11 && rows[0].to_anti_feynman < 1e-11);
        assert!(rows[3].to_feynman < rows[2].to_feynman && rows[2].to_feynman < rows[1].to_feynman);
        assert!(rows[3].to_anti_feynman < 1e-2, "{rows:?}");
    }
}
