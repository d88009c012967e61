//! Gaussian quantization data of pairs of involutions: Shale diagnostics, vacuum
//! overlaps, in-out two-point functions, and truncated Fock-space oracles.

mod feynman;
mod fock;
mod implementer;

pub use feynman::{feynman_two_point_check, smeared_vector, FeynmanTwoPoint, OrderedValue, Ordering};
pub use fock::{sum_series, SeriesSum, TruncatedFock, MAX_DIM, MAX_MODES, MAX_NMAX, TAIL_LIMIT};
pub use implementer::{natural_implementer_truncated, ImplementerReport, NaturalImplementer};

use fock::{refuse_above, Squeeze};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::krein::{analyze_pair, assume_admissible, bogoliubov_blocks, AdmissibleInvolution, InvolutionPairAnalysis, KreinSpace};
use crate::linalg::{c, det, eigh, eye, inverse_or, op_norm, CMat, CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formalism {
    Neutral,
    Charged,
}

/// An antilinear conjugation C v = J v̄ exchanging Z⁽⁺⁾ and Z⁽⁻⁾.
#[derive(Clone, Debug)]
pub struct Conjugation {
    pub j: CMat,
}

impl Conjugation {
    /// C(v₁, v₂) = (v̄₁, −v̄₂) on Klein–Gordon Cauchy data with n components.
    pub fn kg(n: usize) -> Self {
        let mut j = eye(2 * n);
        for i in n..2 * n {
            j[(i, i)] = c(-1.0, 0.0);
        }
        Conjugation { j }
    }

    pub fn apply(&self, m: &CMat) -> CMat {
        &self.j * m.map(|z| z.conj())
    }

    /// Residuals of C² = 1 and CS = −SC.
    pub fn check(&self, s: &CMat) -> (f64, f64) {
        let n = self.j.nrows();
        let sq = op_norm(&(&self.j * self.j.map(|z| z.conj()) - eye(n)));
        let anti = op_norm(&(&self.j * s.map(|z| z.conj()) + s * &self.j));
        (sq, anti)
    }
}

/// G_S-orthonormal bases of Z⁽⁺⁾ and Z⁽⁻⁾ for one involution.
#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pub plus: CMat,
    pub minus: CMat,
    pub g: CMat,
}

impl Frame {
    pub(crate) fn charged(s: &AdmissibleInvolution) -> Self {
        Frame { plus: s.plus_basis.clone(), minus: s.minus_basis.clone(), g: s.g.clone() }
    }

    /// Z⁽⁻⁾ basis taken as C applied to the Z⁽⁺⁾ basis.
    pub(crate) fn neutral(s: &AdmissibleInvolution, conj: &Conjugation) -> Result<Self> {
        let (sq, anti) = conj.check(&s.s);
        let tol = 1e-10 * op_norm(&s.s).max(1.0);
        if sq > tol || anti > tol {
            return Err(Error::ContractViolation(format!(
                "conjugation is not compatible with S (‖C²−1‖ = {sq:.3e}, ‖CS+SC‖ = {anti:.3e})"
            )));
        }
        Ok(Frame { plus: s.plus_basis.clone(), minus: conj.apply(&s.plus_basis), g: s.g.clone() })
    }

    pub(crate) fn coords(&self, w: &CVec) -> (CVec, CVec) {
        let gw = &self.g * w;
        (self.plus.adjoint() * &gw, self.minus.adjoint() * gw)
    }

    /// T with Z₂⁽⁻⁾ = {y + T y : y ∈ Z₁⁽⁻⁾} in these coordinates.
    pub(crate) fn graph_of(&self, z2_minus: &CMat) -> Result<CMat> {
        let xp = self.plus.adjoint() * &self.g * z2_minus;
        let xm = self.minus.adjoint() * &self.g * z2_minus;
        Ok(xp * inverse_or(&xm, "Z₂⁽⁻⁾ projected on Z₁⁽⁻⁾")?)
    }
}

/// In and out involutions at a common node with their Gaussian data.
#[derive(Clone, Debug)]
pub struct GaussianInOut {
    pub space: KreinSpace,
    pub s_minus: AdmissibleInvolution,
    pub s_plus: AdmissibleInvolution,
    pub pair: InvolutionPairAnalysis,
    /// c in the G₋-orthonormal coordinates, Z₋⁽⁻⁾ → Z₋⁽⁺⁾.
    pub c: CMat,
    pub c_hs: f64,
    pub overlap_neutral: f64,
    pub overlap_charged: f64,
    pub formalism: Formalism,
}

impl GaussianInOut {
    pub fn new(
        space: &KreinSpace,
        s_minus: AdmissibleInvolution,
        s_plus: AdmissibleInvolution,
        formalism: Formalism,
    ) -> Result<Self> {
        let pair = analyze_pair(space, &s_minus, &s_plus)?;
        let cm = s_minus.plus_basis.adjoint() * &s_minus.g * &pair.c * &s_minus.minus_basis;
        let k = cm.ncols();
        let cnorm = op_norm(&cm);
        if cnorm >= 1.0 {
            return Err(Error::ContractViolation(format!("‖c‖ = {cnorm} is not below 1")));
        }
        let d = det(&(eye(k) - cm.adjoint() * &cm)).re;
        Ok(GaussianInOut {
            space: space.clone(),
            c_hs: cm.norm(),
            overlap_neutral: d.powf(0.25),
            overlap_charged: d.sqrt(),
            c: cm,
            s_minus,
            s_plus,
            pair,
            formalism,
        })
    }

    /// ⟨Ω₊|Ω₋⟩ for the selected formalism.
    pub fn overlap(&self) -> f64 {
        match self.formalism {
            Formalism::Neutral => self.overlap_neutral,
            Formalism::Charged => self.overlap_charged,
        }
    }

    /// Eigenvalues of c†c, ascending.
    pub fn pair_spectrum(&self) -> Vec<f64> {
        eigh(&(self.c.adjoint() * &self.c)).0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShaleDiagnostics {
    pub rpm_hs: f64,
    pub c_hs: f64,
    pub d_hs: f64,
    /// ‖c‖_F of the pair (S₁, R⁻¹S₂R)
    pub c_hs_pair: f64,
    /// |‖c(R)‖_F − ‖c_pair‖_F|
    pub c_agreement: f64,
    pub threshold: f64,
    pub implementable: bool,
}

/// Hilbert–Schmidt norms of R₊₋, c(R), d(R); implementable when all stay below `threshold`.
pub fn shale_diagnostics(
    space: &KreinSpace,
    r: &CMat,
    s1: &AdmissibleInvolution,
    s2: &AdmissibleInvolution,
    threshold: f64,
) -> Result<ShaleDiagnostics> {
    let b = bogoliubov_blocks(space, r, s1, s2)?;
    let pulled = pulled_back(space, r, s2)?;
    let pair = analyze_pair(space, s1, &pulled)?;
    let c_pair = s1.plus_basis.adjoint() * &s1.g * &pair.c * &s1.minus_basis;
    let (rpm_hs, c_hs, d_hs) = (b.rpm.norm(), b.c.norm(), b.d.norm());
    Ok(ShaleDiagnostics {
        rpm_hs,
        c_hs,
        d_hs,
        c_hs_pair: c_pair.norm(),
        c_agreement: (c_hs - c_pair.norm()).abs(),
        threshold,
        implementable: rpm_hs.max(c_hs).max(d_hs) < threshold,
    })
}

fn pulled_back(space: &KreinSpace, r: &CMat, s2: &AdmissibleInvolution) -> Result<AdmissibleInvolution> {
    let r_inv = inverse_or(r, "R")?;
    assume_admissible(space, &r_inv * &s2.s * r)
}

/// det(1−c†c), det(1−dd†), |det p†p|⁻¹ and det(Υ|Z₁⁺)⁻¹ with their discrepancies.
#[derive(Clone, Debug, Serialize)]
pub struct DetChain {
    pub det_one_minus_cc: f64,
    pub det_one_minus_dd: f64,
    pub inv_det_pp: f64,
    pub inv_det_upsilon: f64,
    /// det Υ⁻¹ on the whole space, equal to det(1−c†c)²
    pub inv_det_upsilon_full: f64,
    pub residuals: DetChainResiduals,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetChainResiduals {
    pub dd: f64,
    pub pp: f64,
    pub upsilon: f64,
    pub upsilon_full: f64,
}

impl DetChainResiduals {
    pub fn max(&self) -> f64 {
        self.dd.max(self.pp).max(self.upsilon).max(self.upsilon_full)
    }
}

/// Determinant chain for a pseudo-unitary R from (Z, S₁) to (Z, S₂); Υ is taken
/// from the pair (S₁, R⁻¹S₂R).
pub fn det_chain(space: &KreinSpace, r: &CMat, s1: &AdmissibleInvolution, s2: &AdmissibleInvolution) -> Result<DetChain> {
    let b = bogoliubov_blocks(space, r, s1, s2)?;
    let pair = analyze_pair(space, s1, &pulled_back(space, r, s2)?)?;
    let (kp, km) = (b.rpp.ncols(), b.rmm.ncols());
    let dcc = det(&(eye(km) - b.c.adjoint() * &b.c)).re;
    let ddd = det(&(eye(kp) - &b.d * b.d.adjoint())).re;
    let inv_pp = 1.0 / det(&(b.rpp.adjoint() * &b.rpp)).norm();
    let e = &s1.plus_basis;
    let ups_plus = e.adjoint() * &s1.g * &pair.upsilon * e;
    let inv_ups = 1.0 / det(&ups_plus).re;
    let inv_ups_full = 1.0 / det(&pair.upsilon).re;
    Ok(DetChain {
        det_one_minus_cc: dcc,
        det_one_minus_dd: ddd,
        inv_det_pp: inv_pp,
        inv_det_upsilon: inv_ups,
        inv_det_upsilon_full: inv_ups_full,
        residuals: DetChainResiduals {
            dd: (ddd - dcc).abs(),
            pp: (inv_pp - dcc).abs(),
            upsilon: (inv_ups - dcc).abs(),
            upsilon_full: (inv_ups_full - dcc * dcc).abs(),
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VacuumOverlap {
    pub value: f64,
    pub formalism: Formalism,
    pub det_chain: DetChain,
}

/// ⟨Ω₊|Ω₋⟩ = det(1−c†c)^{1/4} (neutral) or ^{1/2} (charged), with the determinant
/// chain taken at R = 1 between the two involutions.
pub fn vacuum_overlap(g: &GaussianInOut) -> Result<VacuumOverlap> {
    let chain = det_chain(&g.space, &eye(g.space.dim), &g.s_minus, &g.s_plus)?;
    Ok(VacuumOverlap { value: g.overlap(), formalism: g.formalism, det_chain: chain })
}

/// (v | Q Π₊⁽⁺⁾ Υ⁻¹ Π₋⁽⁺⁾ w).
pub fn two_point_in_out(g: &GaussianInOut, v: &CVec, w: &CVec) -> Result<C64> {
    let n = g.space.dim;
    if v.len() != n || w.len() != n {
        return input(format!("vectors must have dimension {n}"));
    }
    let m = &g.space.q * &g.s_plus.pi_plus * &g.pair.upsilon_inv * &g.s_minus.pi_plus;
    Ok(v.dotc(&(m * w)))
}

/// Report block for one in/out pair.
#[derive(Clone, Debug, Serialize)]
pub struct BogoliubovReport {
    #[serde(rename = "c_HS")]
    pub c_hs: f64,
    #[serde(rename = "d_HS")]
    pub d_hs: f64,
    pub overlap_neutral: f64,
    pub overlap_charged: f64,
    pub pair_spectrum: Vec<f64>,
    pub det_chain_residuals: DetChainResiduals,
}

pub fn bogoliubov_report(g: &GaussianInOut) -> Result<BogoliubovReport> {
    let b = bogoliubov_blocks(&g.space, &eye(g.space.dim), &g.s_minus, &g.s_plus)?;
    let vo = vacuum_overlap(g)?;
    Ok(BogoliubovReport {
        c_hs: g.c_hs,
        d_hs: b.d.norm(),
        overlap_neutral: g.overlap_neutral,
        overlap_charged: g.overlap_charged,
        pair_spectrum: g.pair_spectrum(),
        det_chain_residuals: vo.det_chain.residuals,
    })
}

/// Oracle value with its truncation estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleValue {
    pub value: C64,
    pub tail: f64,
    pub nmax: usize,
}

/// ⟨e^{a†(c₁)}Ω | e^{a†(c₂)}Ω⟩ (charged) or ⟨e^{½a†(c₁)}Ω | e^{½a†(c₂)}Ω⟩ (neutral)
/// summed degree by degree on a truncated Fock space.
pub fn fock_oracle_overlap(c1: &CMat, c2: &CMat, formalism: Formalism, nmax: usize) -> Result<OracleValue> {
    if c1.shape() != c2.shape() {
        return input("squeezing matrices must have the same shape");
    }
    let (s1, s2) = match formalism {
        Formalism::Charged => (Squeeze::Charged(c1), Squeeze::Charged(c2)),
        Formalism::Neutral => {
            let sym = |m: &CMat| m.is_square() && (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0);
            if !sym(c1) || !sym(c2) {
                return input("neutral squeezing matrices must be square and symmetric");
            }
            (Squeeze::Neutral(c1), Squeeze::Neutral(c2))
        }
    };
    let fock = TruncatedFock::new(s1.modes(), nmax)?;
    let (t1, t2) = (s1.terms(&fock), s2.terms(&fock));
    let terms: Vec<C64> = t1.iter().zip(&t2).map(|(a, b)| a.dotc(b)).collect();
    let s = sum_series(&terms);
    refuse_above(s.tail, nmax)?;
    Ok(OracleValue { value: s.value, tail: s.tail, nmax })
}

/// Normalized ⟨Ω₊|Ω₋⟩ from the squeezed vector of S₊ in the Fock space of S₋.
/// The squeezing matrix is read off Z₊⁽⁻⁾ as a graph over Z₋⁽⁻⁾.
pub fn fock_oracle_in_out(
    space: &KreinSpace,
    s_minus: &AdmissibleInvolution,
    s_plus: &AdmissibleInvolution,
    formalism: Formalism,
    conj: Option<&Conjugation>,
    nmax: usize,
) -> Result<OracleValue> {
    let frame = match formalism {
        Formalism::Charged => Frame::charged(s_minus),
        Formalism::Neutral => {
            let cj = conj.ok_or_else(|| Error::Input("neutral formalism needs a conjugation".into()))?;
            Frame::neutral(s_minus, cj)?
        }
    };
    if s_plus.minus_basis.nrows() != space.dim {
        return input("involution does not match the space");
    }
    let gamma = -frame.graph_of(&s_plus.minus_basis)?;
    let sq = match formalism {
        Formalism::Charged => Squeeze::Charged(&gamma),
        Formalism::Neutral => Squeeze::Neutral(&gamma),
    };
    let fock = TruncatedFock::new(sq.modes(), nmax)?;
    let terms: Vec<C64> = sq.terms(&fock).iter().map(|t| c(t.norm_squared(), 0.0)).collect();
    let s = sum_series(&terms);
    let tail = 0.5 * s.tail;
    refuse_above(tail, nmax)?;
    Ok(OracleValue { value: c(1.0 / s.value.re.sqrt(), 0.0), tail, nmax })
}

/// Charged fields on the Fock space of S₋ and the out vacuum as a squeezed vector.
pub(crate) struct ChargedOracle {
    pub fock: TruncatedFock,
    frame: Frame,
    /// Degree-wise terms of the unnormalized Ω₊ with ⟨Ω₋|Ω₊⟩ = 1.
    pub omega_plus: Vec<CVec>,
}

impl ChargedOracle {
    pub(crate) fn new(s_minus: &AdmissibleInvolution, s_plus: &AdmissibleInvolution, nmax: usize) -> Result<Self> {
        let frame = Frame::charged(s_minus);
        let gamma = -frame.graph_of(&s_plus.minus_basis)?;
        let sq = Squeeze::Charged(&gamma);
        let fock = TruncatedFock::new(sq.modes(), nmax)?;
        let omega_plus = sq.terms(&fock);
        Ok(ChargedOracle { fock, frame, omega_plus })
    }

    fn split(&self, w: &CVec) -> (CVec, CVec) {
        let (xp, xm) = self.frame.coords(w);
        let k = self.fock.k;
        let kp = xp.len();
        let mut up = CVec::zeros(k);
        let mut um = CVec::zeros(k);
        up.rows_mut(0, kp).copy_from(&xp);
        um.rows_mut(kp, xm.len()).copy_from(&xm);
        (up, um)
    }

    /// ψ(w) = Σ x̄₊ᵢ aᵢ + Σ x̄₋ⱼ bⱼ†.
    pub(crate) fn psi(&self, w: &CVec, v: &CVec) -> CVec {
        let (up, um) = self.split(w);
        self.fock.annihilate_along(&up, v) + self.fock.create_along(&um.map(|z| z.conj()), v)
    }

    /// ψ*(w) = Σ x₊ᵢ aᵢ† + Σ x₋ⱼ bⱼ.
    pub(crate) fn psi_star(&self, w: &CVec, v: &CVec) -> CVec {
        let (up, um) = self.split(w);
        self.fock.create_along(&up, v) + self.fock.annihilate_along(&um.map(|z| z.conj()), v)
    }

    /// ⟨Ω₊|φ⟩ / ⟨Ω₊|Ω₋⟩ as a degree-wise series.
    pub(crate) fn out_bra(&self, phi: &CVec) -> SeriesSum {
        let terms: Vec<C64> = self.omega_plus.iter().map(|t| t.dotc(phi)).collect();
        sum_series(&terms)
    }

    /// ⟨Ω₋|φ⟩ / ⟨Ω₋|Ω₊⟩ for φ built on Ω₊ (⟨Ω₋|Ω₊⟩ = 1).
    pub(crate) fn in_bra(&self, build: impl Fn(&CVec) -> CVec) -> SeriesSum {
        let terms: Vec<C64> = self.omega_plus.iter().map(|t| build(t)[0]).collect();
        sum_series(&terms)
    }

    /// Scalar of [ψ(v), ψ*(w)] on the vacuum and the largest deviation from a
    /// scalar on basis states with total occupation ≤ 4 away from the cutoff.
    pub(crate) fn commutator(&self, v: &CVec, w: &CVec) -> (C64, f64) {
        let comm = |phi: &CVec| self.psi(v, &self.psi_star(w, phi)) - self.psi_star(w, &self.psi(v, phi));
        let vac = self.fock.vacuum();
        let scalar = comm(&vac)[0];
        let level = self.fock.nmax.saturating_sub(1);
        let worst = self
            .fock
            .low_states(4)
            .iter()
            .filter(|phi| {
                let idx = phi.iter().position(|z| z.re == 1.0).unwrap_or(0);
                (0..self.fock.k).all(|i| self.fock.occupation(idx, i) < level)
            })
            .map(|phi| (comm(phi) - phi * scalar).norm())
            .fold(0.0, f64::max);
        (scalar, worst)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleTwoPoint {
    /// ⟨Ω₊|ψ(v)ψ*(w)Ω₋⟩ / ⟨Ω₊|Ω₋⟩
    pub ratio: C64,
    /// [ψ(v), ψ*(w)] as a scalar
    pub commutator: C64,
    /// largest deviation of the commutator from that scalar below the cutoff
    pub commutator_residual: f64,
    pub tail: f64,
    pub nmax: usize,
}

pub fn fock_oracle_two_point(
    space: &KreinSpace,
    s_minus: &AdmissibleInvolution,
    s_plus: &AdmissibleInvolution,
    v: &CVec,
    w: &CVec,
    nmax: usize,
) -> Result<OracleTwoPoint> {
    if v.len() != space.dim || w.len() != space.dim {
        return input(format!("vectors must have dimension {}", space.dim));
    }
    let o = ChargedOracle::new(s_minus, s_plus, nmax)?;
    if o.fock.k > 4 {
        return input("the two-point oracle supports at most two particle modes");
    }
    let vac = o.fock.vacuum();
    let s = o.out_bra(&o.psi(v, &o.psi_star(w, &vac)));
    refuse_above(s.tail, nmax)?;
    let (commutator, commutator_residual) = o.commutator(v, w);
    Ok(OracleTwoPoint { ratio: s.value, commutator, commutator_residual, tail: s.tail, nmax })
}

/// The single-mode quench pair ω: 1 → 3 on the Klein–Gordon space of one mode.
pub fn quench_pair(formalism: Formalism) -> Result<GaussianInOut> {
    let space = KreinSpace::kg(1);
    let s1 = crate::krein::check_admissible(&space, &crate::krein::mode_involution(1.0))?;
    let s2 = crate::krein::check_admissible(&space, &crate::krein::mode_involution(3.0))?;
    GaussianInOut::new(&space, s1, s2, formalism)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::krein::{check_admissible, mode_involution};
    use crate::random::{gaussian_vector, random_admissible, random_krein_space, random_pseudo_unitary};

    #[test]
    fn quench_overlaps() {
        let g = quench_pair(Formalism::Charged).unwrap();
        assert!((g.c_hs - 0.5).abs() < 1e-14);
        assert!((g.overlap_charged - 0.75f64.sqrt()).abs() < 1e-14);
        assert!((g.overlap_neutral - 0.75f64.powf(0.25)).abs() < 1e-14);
        let vo = vacuum_overlap(&g).unwrap();
        assert!(vo.det_chain.residuals.max() < 1e-14, "{:?}", vo.det_chain);
        assert!((g.pair_spectrum()[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn identical_pair_is_trivial() {
        let space = KreinSpace::kg(1);
        let s = check_admissible(&space, &mode_involution(2.0)).unwrap();
        let g = GaussianInOut::new(&space, s.clone(), s.clone(), Formalism::Charged).unwrap();
        assert_eq!(g.overlap(), 1.0);
        let v = CVec::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2)]);
        let w = CVec::from_vec(vec![c(0.2, 0.0), c(0.7, -1.0)]);
        let direct = v.dotc(&(&space.q * &s.pi_plus * &w));
        assert!((two_point_in_out(&g, &v, &w).unwrap() - direct).norm() < 1e-14);
        let sh = shale_diagnostics(&space, &eye(2), &s, &s, 1e3).unwrap();
        assert!(sh.rpm_hs < 1e-15 && sh.c_hs < 1e-15 && sh.implementable);
    }

    #[test]
    fn scalar_squeezed_overlaps() {
        let c1 = CMat::from_element(1, 1, c(0.3, 0.0));
        let c2 = CMat::from_element(1, 1, c(0.5, 0.0));
        let ch = fock_oracle_overlap(&c1, &c2, Formalism::Charged, 12).unwrap();
        assert!((ch.value - c(1.0 / 0.85, 0.0)).norm() < 1e-10);
        // 0.15⁷·binom(14,7)/4⁷ ≈ 3.6e-7 exceeds the limit at nmax = 12
        assert!(matches!(
            fock_oracle_overlap(&c1, &c2, Formalism::Neutral, 12),
            Err(Error::Truncation { .. })
        ));
        let ne = fock_oracle_overlap(&c1, &c2, Formalism::Neutral, 24).unwrap();
        assert!((ne.value - c(1.0 / 0.85f64.sqrt(), 0.0)).norm() < 1e-9);
        let z = CMat::zeros(1, 1);
        assert_eq!(fock_oracle_overlap(&z, &z, Formalism::Charged, 4).unwrap().value, c(1.0, 0.0));
    }

    #[test]
    fn quench_oracle_matches_formulas() {
        let g = quench_pair(Formalism::Charged).unwrap();
        let o = fock_oracle_in_out(&g.space, &g.s_minus, &g.s_plus, Formalism::Charged, None, 12).unwrap();
        assert!((o.value.re - 0.75f64.sqrt()).abs() < 1e-8, "{o:?}");
        let cj = Conjugation::kg(1);
        let on = fock_oracle_in_out(&g.space, &g.s_minus, &g.s_plus, Formalism::Neutral, Some(&cj), 40).unwrap();
        assert!((on.value.re - 0.75f64.powf(0.25)).abs() < 1e-9, "{on:?}");
        let e = [CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]), CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])];
        for v in &e {
            for w in &e {
                let tp = fock_oracle_two_point(&g.space, &g.s_minus, &g.s_plus, v, w, 12).unwrap();
                let formula = two_point_in_out(&g, v, w).unwrap();
                assert!((tp.ratio - formula).norm() < 1e-12, "{} vs {formula}", tp.ratio);
                assert!((tp.commutator - v.dotc(&(&g.space.q * w))).norm() < 1e-14);
                assert!(tp.commutator_residual < 1e-13);
            }
        }
    }

    #[test]
    fn random_two_mode_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let space = KreinSpace::kg(2);
        let s = |w: [f64; 2]| {
            let mut m = CMat::zeros(4, 4);
            for i in 0..2 {
                m[(i, i + 2)] = c(1.0 / w[i], 0.0);
                m[(i + 2, i)] = c(w[i], 0.0);
            }
            check_admissible(&space, &m).unwrap()
        };
        let s1 = s([1.0, 1.5]);
        let u = random_pseudo_unitary(&mut rng, &space, 0.2);
        let u_inv = u.clone().try_inverse().unwrap();
        let s2 = check_admissible(&space, &(&u * &s([1.2, 1.3]).s * u_inv)).unwrap();
        let g = GaussianInOut::new(&space, s1, s2, Formalism::Charged).unwrap();
        for _ in 0..3 {
            let v = gaussian_vector(&mut rng, 4);
            let w = gaussian_vector(&mut rng, 4);
            let tp = fock_oracle_two_point(&space, &g.s_minus, &g.s_plus, &v, &w, 6).unwrap();
            let formula = two_point_in_out(&g, &v, &w).unwrap();
            assert!((tp.ratio - formula).norm() < 1e-10 * formula.norm().max(1.0), "{} vs {formula}", tp.ratio);
        }
        let o = fock_oracle_in_out(&space, &g.s_minus, &g.s_plus, Formalism::Charged, None, 12);
        if let Ok(o) = o {
            assert!((o.value.re - g.overlap_charged).abs() < 1e-8);
        }
    }

    #[test]
    fn det_chain_on_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 4, 6] {
            let (space, frame) = random_krein_space(&mut rng, dim, dim / 2);
            let s1 = random_admissible(&mut rng, &space, &frame, 0.3);
            let s2 = random_admissible(&mut rng, &space, &frame, 0.3);
            let r = random_pseudo_unitary(&mut rng, &space, 0.3);
            let chain = det_chain(&space, &r, &s1, &s2).unwrap();
            assert!(chain.residuals.max() < 1e-10, "{chain:?}");
            let sh = shale_diagnostics(&space, &r, &s1, &s2, 1e6).unwrap();
            assert!(sh.c_agreement < 1e-10);
        }
    }
}
