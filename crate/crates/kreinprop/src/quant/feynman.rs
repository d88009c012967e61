//! Time-ordered two-point functions from the Fock oracle against the spacetime propagators.

use serde::Serialize;

use super::fock::refuse_above;
use super::ChargedOracle;
use crate::error::{input, Result};
use crate::evolution::{Evolution, InOutData};
use crate::kleingordon::{apply_propagator, PropagatorSet, SpacetimePropagator};
use crate::linalg::{c, CVec, C64, I};

/// w_f = Σ_j w_j R(t_0, t_j) [0; f_j], the Cauchy data at t_0 carried by a source f.
pub fn smeared_vector(evo: &Evolution, f: &[CVec]) -> Result<CVec> {
    let dim = evo.dim();
    let n = dim / 2;
    if f.len() != evo.grid.n + 1 || f.iter().any(|v| v.len() != n) {
        return input(format!("source must have {} values of dimension {n}", evo.grid.n + 1));
    }
    let mut out = CVec::zeros(dim);
    for (j, (fj, wj)) in f.iter().zip(evo.grid.weights()).enumerate() {
        if fj.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let mut lifted = CVec::zeros(dim);
        lifted.rows_mut(n, n).copy_from(fj);
        out += evo.backward(j) * lifted * c(wj, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    F1Later,
    F1Earlier,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrderedValue {
    pub oracle: C64,
    pub kernel: C64,
    /// |oracle − kernel| / |kernel|
    pub discrepancy: f64,
}

impl OrderedValue {
    fn new(oracle: C64, kernel: C64) -> Self {
        let discrepancy = (oracle - kernel).norm() / kernel.norm().max(f64::MIN_POSITIVE);
        OrderedValue { oracle, kernel, discrepancy }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FeynmanTwoPoint {
    pub ordering: Ordering,
    /// ⟨Ω₊|T ψ(f₁)ψ*(f₂)Ω₋⟩/⟨Ω₊|Ω₋⟩ against i∬f̄₁G^F f₂
    pub time_ordered: OrderedValue,
    /// ⟨Ω₋|T̄ ψ(f₁)ψ*(f₂)Ω₊⟩/⟨Ω₋|Ω₊⟩ against −i∬f̄₁G^F̄ f₂
    pub anti_time_ordered: OrderedValue,
    /// −i(w₁|Qw₂) against ∬f̄₁G^PJ f₂
    pub peierls: OrderedValue,
    pub tail: f64,
    pub nmax: usize,
}

impl FeynmanTwoPoint {
    pub fn worst(&self) -> f64 {
        self.time_ordered.discrepancy.max(self.anti_time_ordered.discrepancy).max(self.peierls.discrepancy)
    }
}

fn support(f: &[CVec]) -> Option<(usize, usize)> {
    let nz: Vec<usize> = f.iter().enumerate().filter(|(_, v)| v.iter().any(|z| z.norm() > 0.0)).map(|(j, _)| j).collect();
    Some((*nz.first()?, *nz.last()?))
}

fn pairing(g: &SpacetimePropagator, f1: &[CVec], f2: &[CVec], weights: &[f64]) -> Result<C64> {
    let gf2 = apply_propagator(g, f2)?;
    Ok(f1.iter().zip(&gf2).zip(weights).map(|((a, b), &w)| a.dotc(b) * w).sum())
}

/// Compares the Fock-space time-ordered products of two sources with disjoint
/// temporal supports against the Feynman kernels.
pub fn feynman_two_point_check(
    evo: &Evolution,
    inout: &InOutData,
    props: &PropagatorSet,
    f1: &[CVec],
    f2: &[CVec],
    nmax: usize,
) -> Result<FeynmanTwoPoint> {
    let (Some(s1), Some(s2)) = (support(f1), support(f2)) else {
        return input("sources must be nonzero");
    };
    let ordering = if s1.0 > s2.1 {
        Ordering::F1Later
    } else if s1.1 < s2.0 {
        Ordering::F1Earlier
    } else {
        return input("sources must have disjoint temporal supports");
    };
    let w1 = smeared_vector(evo, f1)?;
    let w2 = smeared_vector(evo, f2)?;
    let space = &evo.space;
    let (s_minus, s_plus) = inout.involutions_at(space, 0)?;
    let o = ChargedOracle::new(&s_minus, &s_plus, nmax)?;

    let vac = o.fock.vacuum();
    let (to, ato) = match ordering {
        Ordering::F1Later => (
            o.out_bra(&o.psi(&w1, &o.psi_star(&w2, &vac))),
            o.in_bra(|t| o.psi_star(&w2, &o.psi(&w1, t))),
        ),
        Ordering::F1Earlier => (
            o.out_bra(&o.psi_star(&w2, &o.psi(&w1, &vac))),
            o.in_bra(|t| o.psi(&w1, &o.psi_star(&w2, t))),
        ),
    };
    let tail = to.tail.max(ato.tail);
    refuse_above(tail, nmax)?;

    let weights = evo.grid.weights();
    let kf = pairing(&props.f, f1, f2, &weights)? * I;
    let kfbar = pairing(&props.fbar, f1, f2, &weights)? * -I;
    let kpj = pairing(&props.pj, f1, f2, &weights)?;
    let symplectic = w1.dotc(&(&space.q * &w2)) * -I;
    Ok(FeynmanTwoPoint {
        ordering,
        time_ordered: OrderedValue::new(to.value, kf),
        anti_time_ordered: OrderedValue::new(ato.value, kfbar),
        peierls: OrderedValue::new(symplectic, kpj),
        tail,
        nmax,
    })
}
