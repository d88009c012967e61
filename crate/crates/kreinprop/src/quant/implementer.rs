//! Natural implementer of a real pseudo-unitary map on a truncated neutral Fock space.

use serde::Serialize;

use super::fock::{refuse_above, sum_series, Squeeze, TruncatedFock};
use super::{Conjugation, Frame};
use crate::error::{input, Error, Result};
use crate::krein::{AdmissibleInvolution, KreinSpace};
use crate::linalg::{c, det, inverse_or, op_norm, CMat, CVec};

/// R̂ = (det p†p)^{−1/4} e^{−½a†(d)} Γ(p†⁻¹) e^{½a(c)} between the Fock spaces of S₁ and S₂.
#[derive(Clone, Debug)]
pub struct NaturalImplementer {
    pub fock: TruncatedFock,
    /// (det p†p)^{−1/4}
    pub normalization: f64,
    pub p: CMat,
    pub c: CMat,
    pub d: CMat,
    frame1: Frame,
    frame2: Frame,
    r: CMat,
    pub report: ImplementerReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImplementerReport {
    pub nmax: usize,
    /// ⟨Ω₂|R̂Ω₁⟩
    pub vacuum_amplitude: f64,
    /// ‖R̂Ω₁‖ − 1
    pub norm_defect: f64,
    /// max ‖c − cᵀ‖, ‖d − dᵀ‖
    pub symmetry: f64,
    /// relative squeezing-series tail of e^{−½a†(d)}Ω
    pub tail: f64,
    /// max over w and low states of ‖R̂φ₁(w)u − φ₂(Rw)R̂u‖ / ‖R̂φ₁(w)u‖
    pub intertwining: f64,
    /// the same restricted to occupations below nmax − 1 in every mode
    pub intertwining_below_cutoff: f64,
}

impl NaturalImplementer {
    /// R̂ v.
    pub fn apply(&self, v: &CVec) -> CVec {
        let f = &self.fock;
        // e^{½a(c)} with a(c) = Σ (c†)_ij a_i a_j lowers the occupation; the series ends.
        let lower = self.c.adjoint() * c(0.5, 0.0);
        let mut term = v.clone();
        let mut acc = v.clone();
        for n in 1.. {
            term = f.pair_annihilate(&lower, 0, 0, &term) / c(n as f64, 0.0);
            if term.iter().all(|z| z.norm() == 0.0) {
                break;
            }
            acc += &term;
        }
        let x = self.gamma_operand();
        let mut out = CVec::zeros(f.dim);
        for (idx, &a) in acc.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            out += self.gamma_basis(&x, idx) * a;
        }
        // e^{−½a†(d)} raises the occupation; stop once the cutoff kills every term.
        let raise = &self.d * c(-0.5, 0.0);
        let mut term = out.clone();
        let mut acc = out;
        for n in 1.. {
            term = f.pair_create(&raise, 0, 0, &term) / c(n as f64, 0.0);
            if term.iter().all(|z| z.norm() == 0.0) {
                break;
            }
            acc += &term;
        }
        acc * c(self.normalization, 0.0)
    }

    fn gamma_operand(&self) -> CMat {
        inverse_or(&self.p.adjoint(), "p†").expect("p is invertible for a pseudo-unitary map")
    }

    /// Γ(X)|n⟩ = Π_k ((Xᵀa†)_k)^{n_k} / √(n_k!) Ω.
    fn gamma_basis(&self, x: &CMat, idx: usize) -> CVec {
        let f = &self.fock;
        let mut v = f.vacuum();
        for (k, &nk) in f.occupations(idx).iter().enumerate() {
            let col = x.column(k).into_owned();
            for m in 1..=nk {
                v = f.create_along(&col, &v) / c((m as f64).sqrt(), 0.0);
            }
        }
        v
    }

    /// φ(w) = Σ conj(x₊ᵢ) aᵢ + Σ conj(x₋ᵢ) aᵢ† in the coordinates of `frame`.
    fn field(&self, frame: &Frame, w: &CVec, v: &CVec) -> CVec {
        let (xp, xm) = frame.coords(w);
        self.fock.annihilate_along(&xp, v) + self.fock.create_along(&xm.map(|z| z.conj()), v)
    }
}

/// Builds R̂ for a pseudo-unitary R commuting with the conjugation and checks the
/// intertwining R̂φ₁(w) = φ₂(Rw)R̂ on basis states with total occupation ≤ 4.
pub fn natural_implementer_truncated(
    space: &KreinSpace,
    r: &CMat,
    s1: &AdmissibleInvolution,
    s2: &AdmissibleInvolution,
    conj: &Conjugation,
    nmax: usize,
) -> Result<NaturalImplementer> {
    let n = space.dim;
    if r.shape() != (n, n) {
        return input(format!("R must be {n}×{n}"));
    }
    let real = op_norm(&(&conj.j * r.map(|z| z.conj()) - r * &conj.j));
    if real > 1e-10 * op_norm(r).max(1.0) {
        return Err(Error::ContractViolation(format!("R does not commute with the conjugation ({real:.3e})")));
    }
    let frame1 = Frame::neutral(s1, conj)?;
    let frame2 = Frame::neutral(s2, conj)?;
    let k = frame1.plus.ncols();
    if k > 2 {
        return input("the natural implementer supports at most two modes");
    }
    let gr = &frame2.g * r;
    let p = frame2.plus.adjoint() * &gr * &frame1.plus;
    let q = frame2.plus.adjoint() * &gr * &frame1.minus;
    let rr = frame2.minus.adjoint() * &gr * &frame1.plus;
    let p_inv = inverse_or(&p, "p")?;
    let cm = &p_inv * &q;
    let d = inverse_or(&p.adjoint(), "p†")? * rr.adjoint();
    let symmetry = (&cm - cm.transpose()).norm().max((&d - d.transpose()).norm());
    let normalization = det(&(p.adjoint() * &p)).re.powf(-0.25);

    let fock = TruncatedFock::new(k, nmax)?;
    let norms: Vec<_> = Squeeze::Neutral(&(-&d))
        .terms(&fock)
        .iter()
        .map(|t| c(t.norm_squared(), 0.0))
        .collect();
    let tail = sum_series(&norms).tail;
    refuse_above(tail, nmax)?;

    let mut imp = NaturalImplementer {
        fock,
        normalization,
        p,
        c: cm,
        d,
        frame1,
        frame2,
        r: r.clone(),
        report: ImplementerReport {
            nmax,
            vacuum_amplitude: 0.0,
            norm_defect: 0.0,
            symmetry,
            tail,
            intertwining: 0.0,
            intertwining_below_cutoff: 0.0,
        },
    };
    let vac = imp.fock.vacuum();
    let r_vac = imp.apply(&vac);
    imp.report.vacuum_amplitude = r_vac[0].re;
    imp.report.norm_defect = (r_vac.norm() - 1.0).abs();
    let mut ws: Vec<CVec> = (0..n)
        .map(|i| {
            let mut e = CVec::zeros(n);
            e[i] = c(1.0, 0.0);
            e
        })
        .collect();
    ws.push(CVec::from_fn(n, |i, _| c(1.0 + i as f64, 0.5 - i as f64)));
    let (mut full, mut below) = (0.0f64, 0.0f64);
    let level = nmax.saturating_sub(1);
    for u in imp.fock.low_states(4) {
        let ru = imp.apply(&u);
        for w in &ws {
            let lhs = imp.apply(&imp.field(&imp.frame1, w, &u));
            let rhs = imp.field(&imp.frame2, &(&imp.r * w), &ru);
            let scale = lhs.norm().max(f64::MIN_POSITIVE);
            let diff = &lhs - &rhs;
            full = full.max(diff.norm() / scale);
            below = below.max(imp.fock.below(&diff, level).norm() / scale);
        }
    }
    imp.report.intertwining = full;
    imp.report.intertwining_below_cutoff = below;
    Ok(imp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::{check_admissible, mode_involution};
    use crate::linalg::eye;

    fn quench() -> (KreinSpace, AdmissibleInvolution, AdmissibleInvolution) {
        let space = KreinSpace::kg(1);
        let s1 = check_admissible(&space, &mode_involution(1.0)).unwrap();
        let s2 = check_admissible(&space, &mode_involution(3.0)).unwrap();
        (space, s1, s2)
    }

    #[test]
    fn identity_map_is_identity() {
        let (space, s1, _) = quench();
        let imp = natural_implementer_truncated(&space, &eye(2), &s1, &s1, &Conjugation::kg(1), 8).unwrap();
        for u in imp.fock.low_states(8) {
            assert!((imp.apply(&u) - &u).norm() < 1e-14);
        }
        assert!((imp.report.vacuum_amplitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quench_vacuum_amplitude() {
        let (space, s1, s2) = quench();
        let imp = natural_implementer_truncated(&space, &eye(2), &s1, &s2, &Conjugation::kg(1), 36).unwrap();
        assert!((imp.report.vacuum_amplitude - 0.75f64.powf(0.25)).abs() < 1e-14);
        assert!(imp.report.symmetry < 1e-14);
        assert!(imp.report.intertwining_below_cutoff < 1e-12, "{:?}", imp.report);
        assert!(imp.report.norm_defect < 1e-9, "{:?}", imp.report);
    }

    #[test]
    fn intertwining_improves_with_cutoff() {
        let (space, s1, s2) = quench();
        // |d| = 1/2 needs nmax ≥ 30 before the squeezing tail drops below the limit.
        assert!(matches!(
            natural_implementer_truncated(&space, &eye(2), &s1, &s2, &Conjugation::kg(1), 12),
            Err(Error::Truncation { .. })
        ));
        let res: Vec<f64> = [30, 36, 42, 48]
            .iter()
            .map(|&m| natural_implementer_truncated(&space, &eye(2), &s1, &s2, &Conjugation::kg(1), m).unwrap().report.intertwining)
            .collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
        assert!(res[3] < 1e-4, "{res:?}");
    }
}
