//! Finite-dimensional Krein spaces: charge forms, admissible involutions,
//! pairs of involutions and Bogoliubov blocks of pseudo-unitary maps.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::linalg::{
    self, c, cholesky, commutator, eig_range_h, eye, herm_fn, herm_residual, inverse_or, max_abs,
    op_norm, orth, orth_complement, projection_along, CMat,
};

/// A complex space with a non-degenerate Hermitian charge form `Q`.
#[derive(Clone, Debug)]
pub struct KreinSpace {
    pub dim: usize,
    pub q: CMat,
    pub q_inv: CMat,
    pub tol_def: f64,
}

impl KreinSpace {
    /// Builds the space with the default tolerance `1e-10 · dim · max|Q|`.
    pub fn new(q: CMat) -> Result<Self> {
        let tol = 1e-10 * q.nrows().max(1) as f64 * max_abs(&q).max(1.0);
        Self::with_tol(q, tol)
    }

    pub fn with_tol(q: CMat, tol_def: f64) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return input(format!("Q must be square and non-empty, got {:?}", q.shape()));
        }
        if !(tol_def >= 0.0) {
            return input("tol_def must be nonnegative");
        }
        let herm = herm_residual(&q);
        if herm > tol_def {
            return Err(Error::NotAdmissible { invariant: "Q = Q†", residual: herm, tol: tol_def });
        }
        let smin = linalg::min_singular(&q);
        if smin <= tol_def {
            return Err(Error::NotAdmissible {
                invariant: "Q invertible",
                residual: smin,
                tol: tol_def,
            });
        }
        let q = linalg::herm_part(&q);
        let q_inv = inverse_or(&q, "Q")?;
        Ok(KreinSpace { dim: q.nrows(), q, q_inv, tol_def })
    }

    /// Q = [[0, 1], [1, 0]] in n×n blocks, the Klein–Gordon charge.
    pub fn kg(n: usize) -> Self {
        let z = CMat::zeros(n, n);
        Self::new(linalg::block2(&z, &eye(n), &eye(n), &z)).expect("block charge is non-degenerate")
    }

    /// The charge pairing (v|Qw).
    pub fn form(&self, v: &linalg::CVec, w: &linalg::CVec) -> linalg::C64 {
        (v.adjoint() * &self.q * w)[(0, 0)]
    }

    /// Q-adjoint Q⁻¹A†Q.
    pub fn q_adjoint(&self, a: &CMat) -> CMat {
        &self.q_inv * a.adjoint() * &self.q
    }

    /// Tolerance scaled for products of matrices of size `scale`.
    pub fn tol_for(&self, scale: f64) -> f64 {
        self.tol_def * scale.max(1.0)
    }

    fn check_square(&self, m: &CMat, what: &str) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return input(format!(
                "{what} has shape {:?}, expected {}x{}",
                m.shape(),
                self.dim,
                self.dim
            ));
        }
        Ok(())
    }
}

/// Raw residuals of the admissibility invariants.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub qs_hermitian: f64,
    pub involution: f64,
    pub q_preserved: f64,
    pub qs_min_eig: f64,
    pub tol: f64,
    pub first_failure: Option<&'static str>,
}

/// An involution S with S² = 1 and QS positive definite.
#[derive(Clone, Debug)]
pub struct AdmissibleInvolution {
    pub s: CMat,
    pub pi_plus: CMat,
    pub pi_minus: CMat,
    /// Scalar-product matrix G_S = QS.
    pub g: CMat,
    /// G_S-orthonormal basis of Z^(+), one column per particle mode.
    pub plus_basis: CMat,
    /// G_S-orthonormal basis of Z^(−).
    pub minus_basis: CMat,
    pub report: AdmissibilityReport,
}

/// Residuals of the admissibility invariants, without deciding.
pub fn admissibility_report(space: &KreinSpace, s: &CMat) -> Result<AdmissibilityReport> {
    space.check_square(s, "S")?;
    let n = space.dim;
    let tol = space.tol_for(max_abs(s).powi(2));
    let qs = &space.q * s;
    let qs_hermitian = herm_residual(&qs);
    let involution = op_norm(&(s * s - eye(n)));
    let q_preserved = op_norm(&(s.adjoint() * &space.q * s - &space.q));
    let qs_min_eig = eig_range_h(&qs).0;
    let first_failure = if qs_hermitian > tol {
        Some("QS Hermitian")
    } else if involution > tol {
        Some("S² = 1")
    } else if q_preserved > tol {
        Some("S†QS = Q")
    } else if qs_min_eig <= space.tol_def {
        Some("QS positive definite")
    } else {
        None
    };
    Ok(AdmissibilityReport { qs_hermitian, involution, q_preserved, qs_min_eig, tol, first_failure })
}

/// Validates `s` and returns the admissible involution with its particle bases.
pub fn check_admissible(space: &KreinSpace, s: &CMat) -> Result<AdmissibleInvolution> {
    let report = admissibility_report(space, s)?;
    if let Some(invariant) = report.first_failure {
        let residual = match invariant {
            "QS Hermitian" => report.qs_hermitian,
            "S² = 1" => report.involution,
            "S†QS = Q" => report.q_preserved,
            _ => report.qs_min_eig,
        };
        let tol = if invariant == "QS positive definite" { space.tol_def } else { report.tol };
        return Err(Error::NotAdmissible { invariant, residual, tol });
    }
    Ok(build_involution(space, s.clone(), report))
}

/// Wraps an involution that is known to be admissible up to accumulated round-off
/// (for instance an evolved S(t)); the report is still filled in.
pub fn assume_admissible(space: &KreinSpace, s: CMat) -> Result<AdmissibleInvolution> {
    let report = admissibility_report(space, &s)?;
    Ok(build_involution(space, s, report))
}

fn build_involution(space: &KreinSpace, s: CMat, report: AdmissibilityReport) -> AdmissibleInvolution {
    let n = space.dim;
    let half = c(0.5, 0.0);
    let pi_plus = (eye(n) + &s) * half;
    let pi_minus = (eye(n) - &s) * half;
    let g = linalg::herm_part(&(&space.q * &s));
    let plus_basis = g_orthonormal_range(&pi_plus, &g);
    let minus_basis = g_orthonormal_range(&pi_minus, &g);
    AdmissibleInvolution { s, pi_plus, pi_minus, g, plus_basis, minus_basis, report }
}

/// Gram–Schmidt of the columns of a projection `p` in the `g` inner product,
/// in index order, skipping near-dependent columns.
///
/// This fixes the basis (and phase) convention for Z^(±) used by every block
/// computation in the crate.
pub fn g_orthonormal_range(p: &CMat, g: &CMat) -> CMat {
    let n = p.nrows();
    let rank = p.trace().re.round().max(0.0) as usize;
    let scale = max_abs(p).max(1.0);
    let mut cols: Vec<linalg::CVec> = Vec::with_capacity(rank);
    for j in 0..n {
        if cols.len() == rank {
            break;
        }
        let mut v = p.column(j).into_owned();
        let raw = (v.adjoint() * g * &v)[(0, 0)].re.max(0.0).sqrt();
        for _ in 0..2 {
            for u in &cols {
                let proj = (u.adjoint() * g * &v)[(0, 0)];
                v -= u * proj;
            }
        }
        let nrm = (v.adjoint() * g * &v)[(0, 0)].re.max(0.0).sqrt();
        if nrm > 1e-8 * scale && nrm > 1e-6 * raw {
            cols.push(v / c(nrm, 0.0));
        }
    }
    let mut out = CMat::zeros(n, cols.len());
    for (k, v) in cols.iter().enumerate() {
        out.set_column(k, v);
    }
    out
}

/// A subspace stored by an orthonormal basis (standard inner product).
#[derive(Clone, Debug)]
pub struct Subspace {
    pub basis: CMat,
}

impl Subspace {
    /// Rejects rank-deficient spanning sets (σ_min ≤ tol · σ_max).
    pub fn new(span: &CMat, tol: f64) -> Result<Self> {
        let sv = linalg::singular_values(span);
        let (smax, smin) = (sv.first().copied().unwrap_or(0.0), sv.last().copied().unwrap_or(0.0));
        if span.ncols() > span.nrows() || span.ncols() == 0 || smin <= tol * smax {
            return input(format!(
                "subspace basis of shape {:?} is rank deficient (σ_min {smin:.3e}, σ_max {smax:.3e})",
                span.shape()
            ));
        }
        Ok(Subspace { basis: orth(span, 0.0) })
    }

    /// Range of a projection.
    pub fn range_of(p: &CMat) -> Self {
        Subspace { basis: orth(p, 1e-8) }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection onto the subspace.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }
}

/// Z^{⊥Q} = { v : (z|Qv) = 0 for all z ∈ Z }.
pub fn q_complement(space: &KreinSpace, z: &Subspace) -> Result<Subspace> {
    if z.basis.nrows() != space.dim {
        return input("subspace dimension does not match the space");
    }
    let qz = orth(&(&space.q * &z.basis), 1e-12);
    Ok(Subspace { basis: orth_complement(&qz) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceClass {
    MPositive,
    MNegative,
    PositiveNotMaximal,
    NegativeNotMaximal,
    Indefinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: SubspaceClass,
    /// (min, max) eigenvalue of the compressed form on Z.
    pub form_range: (f64, f64),
    /// (min, max) eigenvalue of the compressed form on Z^{⊥Q}.
    pub complement_form_range: (f64, f64),
    /// Both compressed forms vanish: Z is Q-null and self-complementary.
    pub zero_compressed_form: bool,
}

/// m-positive iff the form is PSD on Z and NSD on Z^{⊥Q}; analogously m-negative.
pub fn classify_subspace(space: &KreinSpace, z: &Subspace) -> Result<Classification> {
    let zc = q_complement(space, z)?;
    let range = |b: &CMat| {
        if b.ncols() == 0 {
            (0.0, 0.0)
        } else {
            eig_range_h(&(b.adjoint() * &space.q * b))
        }
    };
    let tol = space.tol_def;
    let form_range = range(&z.basis);
    let complement_form_range = range(&zc.basis);
    let (psd, nsd) = (form_range.0 >= -tol, form_range.1 <= tol);
    let (cpsd, cnsd) = (complement_form_range.0 >= -tol, complement_form_range.1 <= tol);
    let m_pos = psd && cnsd;
    let m_neg = nsd && cpsd;
    let zero_compressed_form = psd && nsd && cpsd && cnsd;
    let class = match (m_pos, m_neg) {
        (true, true) => SubspaceClass::Indefinite,
        (true, false) => SubspaceClass::MPositive,
        (false, true) => SubspaceClass::MNegative,
        _ if psd => SubspaceClass::PositiveNotMaximal,
        _ if nsd => SubspaceClass::NegativeNotMaximal,
        _ => SubspaceClass::Indefinite,
    };
    Ok(Classification { class, form_range, complement_form_range, zero_compressed_form })
}

/// Residuals of the pair-of-involutions invariants.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PairResiduals {
    /// ‖Λ₁₂⁺ + Λ₂₁⁻ − 1‖
    pub rinv1_a: f64,
    /// ‖Λ₂₁⁺ + Λ₁₂⁻ − 1‖
    pub rinv1_b: f64,
    /// max ‖Λ² − Λ‖ over the four projections
    pub lambda_idempotent: f64,
    /// max ‖Λ − ΠΥ⁻¹Π‖ between the stacked solve and the product formula
    pub lambda_formula: f64,
    /// max ‖[Υ, Π]‖ over the four projections
    pub upsilon_commutes: f64,
    /// ‖Υ⁻¹ − (Π₁⁺(1−cc*)Π₁⁺ + Π₁⁻(1−c*c)Π₁⁻)‖
    pub upsilon_inv_blocks: f64,
    /// ‖M S₁ M⁻¹ − S₂‖
    pub m_similarity: f64,
    /// ‖M − block formula in terms of c‖
    pub m_block_formula: f64,
    /// smallest eigenvalue of G₁K and G₂K (both must be positive)
    pub k_min_eig_g1: f64,
    pub k_min_eig_g2: f64,
    /// smallest eigenvalue of G₁M
    pub m_min_eig_g1: f64,
    /// operator norm of c in the G₁ inner product
    pub c_norm: f64,
    /// condition number of the stacked basis [Z₁⁺ | Z₂⁻]
    pub complementarity_cond: f64,
}

/// Everything derived from a pair (S₁, S₂).
#[derive(Clone, Debug)]
pub struct InvolutionPairAnalysis {
    pub k: CMat,
    /// c(2,1) = Π₁⁺(1+K)⁻¹(1−K)Π₁⁻, mapping Z₁⁻ into Z₁⁺.
    pub c: CMat,
    /// G₁-adjoint of c, mapping Z₁⁺ into Z₁⁻.
    pub c_star: CMat,
    pub upsilon: CMat,
    pub upsilon_inv: CMat,
    /// Onto Z₁⁺ along Z₂⁻.
    pub lambda_12_plus: CMat,
    /// Onto Z₂⁻ along Z₁⁺.
    pub lambda_21_minus: CMat,
    /// Onto Z₂⁺ along Z₁⁻.
    pub lambda_21_plus: CMat,
    /// Onto Z₁⁻ along Z₂⁺.
    pub lambda_12_minus: CMat,
    /// Positive square root of K in the G₁ inner product.
    pub m: CMat,
    pub residuals: PairResiduals,
}

impl InvolutionPairAnalysis {
    /// Checks the invariants against `tol`; returns the name of the first failure.
    pub fn first_failure(&self, tol: f64) -> Option<&'static str> {
        let r = &self.residuals;
        let checks: [(&'static str, bool); 9] = [
            ("Λ₁₂⁺ + Λ₂₁⁻ = 1", r.rinv1_a <= tol),
            ("Λ₂₁⁺ + Λ₁₂⁻ = 1", r.rinv1_b <= tol),
            ("Λ² = Λ", r.lambda_idempotent <= tol),
            ("Λ = ΠΥ⁻¹Π", r.lambda_formula <= tol),
            ("[Υ, Π] = 0", r.upsilon_commutes <= tol),
            ("Υ⁻¹ block formula", r.upsilon_inv_blocks <= tol),
            ("M S₁ M⁻¹ = S₂", r.m_similarity <= tol),
            ("K ≻ 0", r.k_min_eig_g1 > 0.0 && r.k_min_eig_g2 > 0.0),
            ("‖c‖ < 1", r.c_norm < 1.0),
        ];
        checks.iter().find(|(_, ok)| !ok).map(|(n, _)| *n)
    }
}

/// Hermitian function of a G-self-adjoint operator `a`, with G = L L†.
fn g_herm_fn(a: &CMat, l: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    // C = L† turns the G inner product into the standard one.
    let cm = l.adjoint();
    let c_inv = inverse_or(&cm, "Cholesky factor")?;
    Ok(&c_inv * herm_fn(&(&cm * a * &c_inv), f) * cm)
}

/// Operator norm in the G inner product.
fn g_op_norm(a: &CMat, l: &CMat) -> Result<f64> {
    let cm = l.adjoint();
    let c_inv = inverse_or(&cm, "Cholesky factor")?;
    Ok(op_norm(&(&cm * a * c_inv)))
}

pub fn analyze_pair(
    space: &KreinSpace,
    s1: &AdmissibleInvolution,
    s2: &AdmissibleInvolution,
) -> Result<InvolutionPairAnalysis> {
    let n = space.dim;
    if s1.s.nrows() != n || s2.s.nrows() != n {
        return input("involutions do not match the space dimension");
    }
    let one = eye(n);
    let k = &s2.s * &s1.s;
    let sum = &s1.s * &s2.s + &s2.s * &s1.s;
    let upsilon = (&one * c(2.0, 0.0) + &sum) * c(0.25, 0.0);
    let smin = linalg::min_singular(&upsilon);
    if smin <= space.tol_def {
        return Err(Error::ComplementarityFailure { smallest: smin });
    }
    let upsilon_inv = inverse_or(&upsilon, "Υ")?;

    // Primary route: projections along stacked bases.
    let z1p = Subspace::range_of(&s1.pi_plus).basis;
    let z1m = Subspace::range_of(&s1.pi_minus).basis;
    let z2p = Subspace::range_of(&s2.pi_plus).basis;
    let z2m = Subspace::range_of(&s2.pi_minus).basis;
    let (lambda_12_plus, cond_a) = projection_along(&z1p, &z2m)?;
    let (lambda_21_minus, _) = projection_along(&z2m, &z1p)?;
    let (lambda_21_plus, cond_b) = projection_along(&z2p, &z1m)?;
    let (lambda_12_minus, _) = projection_along(&z1m, &z2p)?;

    // Product formulas as the second route.
    let f12p = &s1.pi_plus * &upsilon_inv * &s2.pi_plus;
    let f21m = &s2.pi_minus * &upsilon_inv * &s1.pi_minus;
    let f21p = &s2.pi_plus * &upsilon_inv * &s1.pi_plus;
    let f12m = &s1.pi_minus * &upsilon_inv * &s2.pi_minus;

    let one_plus_k_inv = inverse_or(&(&one + &k), "1 + K")?;
    let cmat = &s1.pi_plus * &one_plus_k_inv * (&one - &k) * &s1.pi_minus;
    let c_star = &s1.s * &space.q_inv * cmat.adjoint() * &s1.g;

    let l1 = cholesky(&s1.g).ok_or_else(|| Error::ContractViolation("G_S₁ not positive".into()))?;
    let m = g_herm_fn(&k, &l1, |x| x.max(0.0).sqrt())?;
    let m_inv = inverse_or(&m, "M")?;

    // Υ⁻¹ and M from the c blocks.
    let a = &one - &cmat * &c_star;
    let b = &one - &c_star * &cmat;
    let ups_blocks = &s1.pi_plus * &a * &s1.pi_plus + &s1.pi_minus * &b * &s1.pi_minus;
    let a_mh = g_herm_fn(&(&s1.pi_plus * &a * &s1.pi_plus + &s1.pi_minus), &l1, |x| 1.0 / x.sqrt())?;
    let b_mh = g_herm_fn(&(&s1.pi_minus * &b * &s1.pi_minus + &s1.pi_plus), &l1, |x| 1.0 / x.sqrt())?;
    let a_mh = &s1.pi_plus * a_mh * &s1.pi_plus;
    let b_mh = &s1.pi_minus * b_mh * &s1.pi_minus;
    let m_blocks = &a_mh - &cmat * &b_mh - &c_star * &a_mh + &b_mh;

    let lams = [&lambda_12_plus, &lambda_21_minus, &lambda_21_plus, &lambda_12_minus];
    let forms = [&f12p, &f21m, &f21p, &f12m];
    let pis = [&s1.pi_plus, &s1.pi_minus, &s2.pi_plus, &s2.pi_minus];
    let residuals = PairResiduals {
        rinv1_a: op_norm(&(&lambda_12_plus + &lambda_21_minus - &one)),
        rinv1_b: op_norm(&(&lambda_21_plus + &lambda_12_minus - &one)),
        lambda_idempotent: lams.iter().map(|l| op_norm(&(*l * *l - *l))).fold(0.0, f64::max),
        lambda_formula: lams
            .iter()
            .zip(forms.iter())
            .map(|(l, f)| op_norm(&(*l - *f)))
            .fold(0.0, f64::max),
        upsilon_commutes: pis.iter().map(|p| op_norm(&commutator(&upsilon, p))).fold(0.0, f64::max),
        upsilon_inv_blocks: op_norm(&(&upsilon_inv - &ups_blocks)),
        m_similarity: op_norm(&(&m * &s1.s * &m_inv - &s2.s)),
        m_block_formula: op_norm(&(&m - &m_blocks)),
        k_min_eig_g1: eig_range_h(&(&s1.g * &k)).0,
        k_min_eig_g2: eig_range_h(&(&s2.g * &k)).0,
        m_min_eig_g1: eig_range_h(&(&s1.g * &m)).0,
        c_norm: g_op_norm(&cmat, &l1)?,
        complementarity_cond: cond_a.max(cond_b),
    };
    Ok(InvolutionPairAnalysis {
        k,
        c: cmat,
        c_star,
        upsilon,
        upsilon_inv,
        lambda_12_plus,
        lambda_21_minus,
        lambda_21_plus,
        lambda_12_minus,
        m,
        residuals,
    })
}

/// Residuals of pseudo-unitarity for R: Z₁ → Z₂.
#[derive(Clone, Debug, Serialize)]
pub struct PseudoUnitaryReport {
    /// ‖R†QR − Q‖
    pub q_preserved: f64,
    /// ‖R* S₂ R − S₁‖ with R* = G₁⁻¹R†G₂
    pub pull_back: f64,
    /// ‖R S₁ R* − S₂‖
    pub push_forward: f64,
    /// The four relations R†(Q-signature)R in block form.
    pub rels_1: [f64; 4],
    /// The four relations R(Q-signature)R† in block form.
    pub rels_2: [f64; 4],
}

impl PseudoUnitaryReport {
    pub fn max(&self) -> f64 {
        self.rels_1
            .iter()
            .chain(self.rels_2.iter())
            .fold(self.q_preserved.max(self.pull_back).max(self.push_forward), |a, &b| a.max(b))
    }
}

/// Blocks of R in G-orthonormal coordinates of Z₁^(±) → Z₂^(±).
fn blocks(r: &CMat, s1: &AdmissibleInvolution, s2: &AdmissibleInvolution) -> [CMat; 4] {
    let gr = &s2.g * r;
    let pp = s2.plus_basis.adjoint() * &gr * &s1.plus_basis;
    let pm = s2.plus_basis.adjoint() * &gr * &s1.minus_basis;
    let mp = s2.minus_basis.adjoint() * &gr * &s1.plus_basis;
    let mm = s2.minus_basis.adjoint() * &gr * &s1.minus_basis;
    [pp, pm, mp, mm]
}

pub fn verify_pseudo_unitary(
    space: &KreinSpace,
    r: &CMat,
    s1: &AdmissibleInvolution,
    s2: &AdmissibleInvolution,
) -> Result<PseudoUnitaryReport> {
    space.check_square(r, "R")?;
    let g1_inv = inverse_or(&s1.g, "G_S₁")?;
    let r_star = g1_inv * r.adjoint() * &s2.g;
    let [pp, pm, mp, mm] = blocks(r, s1, s2);
    let id = |m: &CMat| eye(m.nrows());
    let nrm = |m: CMat| op_norm(&m);
    let rels_1 = [
        nrm(pp.adjoint() * &pp - mp.adjoint() * &mp - id(&pp)),
        nrm(pp.adjoint() * &pm - mp.adjoint() * &mm),
        nrm(pm.adjoint() * &pp - mm.adjoint() * &mp),
        nrm(pm.adjoint() * &pm - mm.adjoint() * &mm + id(&mm)),
    ];
    let rels_2 = [
        nrm(&pp * pp.adjoint() - &pm * pm.adjoint() - id(&pp)),
        nrm(&pp * mp.adjoint() - &pm * mm.adjoint()),
        nrm(&mp * pp.adjoint() - &mm * pm.adjoint()),
        nrm(&mp * mp.adjoint() - &mm * mm.adjoint() + id(&mm)),
    ];
    Ok(PseudoUnitaryReport {
        q_preserved: op_norm(&(r.adjoint() * &space.q * r - &space.q)),
        pull_back: op_norm(&(&r_star * &s2.s * r - &s1.s)),
        push_forward: op_norm(&(r * &s1.s * &r_star - &s2.s)),
        rels_1,
        rels_2,
    })
}

/// Bogoliubov blocks of a pseudo-unitary map and the derived c(R), d(R).
#[derive(Clone, Debug)]
pub struct BogoliubovBlocks {
    pub rpp: CMat,
    pub rpm: CMat,
    pub rmp: CMat,
    pub rmm: CMat,
    /// c(R) = R₊₊⁻¹R₊₋ in the Z₁ coordinates.
    pub c: CMat,
    /// d(R) = R₊₋R₋₋⁻¹ in the Z₂ coordinates.
    pub d: CMat,
    /// c(R) as an operator on the full space (Z₁⁻ → Z₁⁺).
    pub c_op: CMat,
    pub residuals: BlockResiduals,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockResiduals {
    pub pseudo_unitary: PseudoUnitaryReport,
    /// ‖R₊₊⁻¹R₊₋ − R₋₊†R₋₋†⁻¹‖
    pub c_two_formulas: f64,
    /// ‖R₊₋R₋₋⁻¹ − R₊₊†⁻¹R₋₊†‖
    pub d_two_formulas: f64,
    /// ‖R − [[1,d],[0,1]]·diag(R₊₊†⁻¹, R₋₋)·[[1,0],[c†,1]]‖
    pub factorization: f64,
    /// ‖R₊₊†R₊₊ − (1−cc†)⁻¹‖
    pub rpp_gram: f64,
    /// ‖R₋₋†R₋₋ − (1−c†c)⁻¹‖
    pub rmm_gram: f64,
    /// smallest singular values of R₊₊ and R₋₋ (both ≥ 1 for pseudo-unitary R)
    pub rpp_min_singular: f64,
    pub rmm_min_singular: f64,
}

pub fn bogoliubov_blocks(
    space: &KreinSpace,
    r: &CMat,
    s1: &AdmissibleInvolution,
    s2: &AdmissibleInvolution,
) -> Result<BogoliubovBlocks> {
    let pseudo_unitary = verify_pseudo_unitary(space, r, s1, s2)?;
    let [rpp, rpm, rmp, rmm] = blocks(r, s1, s2);
    let rpp_inv = inverse_or(&rpp, "R₊₊")?;
    let rmm_inv = inverse_or(&rmm, "R₋₋")?;
    let rpp_adj_inv = inverse_or(&rpp.adjoint(), "R₊₊†")?;
    let rmm_adj_inv = inverse_or(&rmm.adjoint(), "R₋₋†")?;
    let cm = &rpp_inv * &rpm;
    let c_alt = rmp.adjoint() * &rmm_adj_inv;
    let d = &rpm * &rmm_inv;
    let d_alt = &rpp_adj_inv * rmp.adjoint();

    let (kp, km) = (rpp.ncols(), rmm.ncols());
    let upper = linalg::block2(&eye(kp), &d, &CMat::zeros(km, kp), &eye(km));
    let mid = linalg::block2(&rpp_adj_inv, &CMat::zeros(kp, km), &CMat::zeros(km, kp), &rmm);
    let lower = linalg::block2(&eye(kp), &CMat::zeros(kp, km), &cm.adjoint(), &eye(km));
    let full = linalg::block2(&rpp, &rpm, &rmp, &rmm);
    let factorization = op_norm(&(&full - upper * mid * lower));

    let inv_a = inverse_or(&(eye(kp) - &cm * cm.adjoint()), "1 − cc†")?;
    let inv_b = inverse_or(&(eye(km) - cm.adjoint() * &cm), "1 − c†c")?;
    let residuals = BlockResiduals {
        pseudo_unitary,
        c_two_formulas: op_norm(&(&cm - &c_alt)),
        d_two_formulas: op_norm(&(&d - &d_alt)),
        factorization,
        rpp_gram: op_norm(&(rpp.adjoint() * &rpp - inv_a)),
        rmm_gram: op_norm(&(rmm.adjoint() * &rmm - inv_b)),
        rpp_min_singular: linalg::min_singular(&rpp),
        rmm_min_singular: linalg::min_singular(&rmm),
    };
    let c_op = &s1.plus_basis * &cm * s1.minus_basis.adjoint() * &s1.g;
    Ok(BogoliubovBlocks { rpp, rpm, rmp, rmm, c: cm, d, c_op, residuals })
}

/// Standard single-mode involution sgn(B) for B = [[0,1],[ω²,0]].
pub fn mode_involution(omega: f64) -> CMat {
    linalg::from_real(2, 2, &[0.0, 1.0 / omega, omega, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real;

    fn kg1() -> KreinSpace {
        KreinSpace::kg(1)
    }

    #[test]
    fn mode_involution_is_admissible() {
        let s = check_admissible(&kg1(), &mode_involution(2.0)).unwrap();
        let qs = &kg1().q * &s.s;
        assert!((qs - from_real(2, 2, &[2.0, 0.0, 0.0, 0.5])).norm() < 1e-15);
        assert_eq!(s.plus_basis.ncols(), 1);
        assert_eq!(s.minus_basis.ncols(), 1);
    }

    #[test]
    fn diagonal_s_rejected_for_off_diagonal_q() {
        let err = check_admissible(&kg1(), &from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::NotAdmissible { invariant: "QS Hermitian", .. }));
    }

    #[test]
    fn diagonal_case_is_trivially_admissible() {
        let sp = KreinSpace::new(from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let s = check_admissible(&sp, &from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((s.g - eye(2)).norm() < 1e-15);
    }

    #[test]
    fn shape_errors_are_input_errors() {
        assert!(matches!(check_admissible(&kg1(), &eye(3)), Err(Error::Input(_))));
        assert!(matches!(KreinSpace::new(CMat::zeros(2, 2)), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn q_null_line_is_its_own_complement() {
        let z = Subspace::new(&from_real(2, 1, &[1.0, 0.0]), 1e-12).unwrap();
        let zc = q_complement(&kg1(), &z).unwrap();
        assert!((zc.projector() - z.projector()).norm() < 1e-14);
    }

    #[test]
    fn classification_examples() {
        let sp = KreinSpace::new(from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let e1 = Subspace::new(&from_real(2, 1, &[1.0, 0.0]), 1e-12).unwrap();
        assert_eq!(classify_subspace(&sp, &e1).unwrap().class, SubspaceClass::MPositive);
        let null = Subspace::new(&from_real(2, 1, &[1.0, 1.0]), 1e-12).unwrap();
        let cl = classify_subspace(&sp, &null).unwrap();
        assert_eq!(cl.class, SubspaceClass::Indefinite);
        assert!(cl.zero_compressed_form);
        let sp3 = KreinSpace::new(from_real(3, 3, &[1., 0., 0., 0., 1., 0., 0., 0., -1.])).unwrap();
        let z = Subspace::new(&from_real(3, 2, &[1., 0., 0., 1., 0., 0.]), 1e-12).unwrap();
        assert_eq!(classify_subspace(&sp3, &z).unwrap().class, SubspaceClass::MPositive);
        let e1 = Subspace::new(&from_real(3, 1, &[1., 0., 0.]), 1e-12).unwrap();
        assert_eq!(classify_subspace(&sp3, &e1).unwrap().class, SubspaceClass::PositiveNotMaximal);
    }

    #[test]
    fn c_star_is_the_g_adjoint_on_a_complex_space() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (sp, frame) = crate::random::random_krein_space(&mut rng, 4, 2);
        let s1 = crate::random::random_admissible(&mut rng, &sp, &frame, 0.3);
        let s2 = crate::random::random_admissible(&mut rng, &sp, &frame, 0.3);
        let a = analyze_pair(&sp, &s1, &s2).unwrap();
        assert!((&s1.g * &a.c_star - a.c.adjoint() * &s1.g).norm() < 1e-12);
        assert!(a.first_failure(1e-10).is_none(), "{:?}", a.residuals);
    }

    #[test]
    fn identical_pair_is_trivial() {
        let sp = kg1();
        let s = check_admissible(&sp, &mode_involution(1.5)).unwrap();
        let a = analyze_pair(&sp, &s, &s).unwrap();
        assert!((&a.k - eye(2)).norm() < 1e-14);
        assert!(a.c.norm() < 1e-14);
        assert!((&a.upsilon - eye(2)).norm() < 1e-14);
        assert!((&a.lambda_12_plus - &s.pi_plus).norm() < 1e-14);
        assert!((&a.m - eye(2)).norm() < 1e-14);
    }

    #[test]
    fn quench_pair_has_half_c() {
        let sp = kg1();
        let s1 = check_admissible(&sp, &mode_involution(1.0)).unwrap();
        let s2 = check_admissible(&sp, &mode_involution(3.0)).unwrap();
        let a = analyze_pair(&sp, &s1, &s2).unwrap();
        assert!((a.residuals.c_norm - 0.5).abs() < 1e-14);
        assert!(a.first_failure(1e-12).is_none(), "{:?}", a.residuals);
        // 1 − cc* restricted to Z₁⁺ equals 3/4.
        let f = &s1.plus_basis;
        let one_minus = f.adjoint() * &s1.g * (eye(2) - &a.c * &a.c_star) * f;
        assert!((one_minus[(0, 0)].re - 0.75).abs() < 1e-14);
        // Defining property of Λ₁₂⁺ on basis vectors.
        let v = &a.lambda_12_plus * f;
        assert!((v - f).norm() < 1e-14);
        assert!((&a.lambda_12_plus * &s2.minus_basis).norm() < 1e-14);
    }

    #[test]
    fn quench_blocks_match_bogoliubov_algebra() {
        let sp = kg1();
        let s1 = check_admissible(&sp, &mode_involution(1.0)).unwrap();
        let s2 = check_admissible(&sp, &mode_involution(3.0)).unwrap();
        let b = bogoliubov_blocks(&sp, &eye(2), &s1, &s2).unwrap();
        let p = b.rpp[(0, 0)];
        let q = b.rpm[(0, 0)];
        assert!((p.norm() - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((q.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((p.norm_sqr() - q.norm_sqr() - 1.0).abs() < 1e-14);
        // Basis convention: e± = columns of Π± normalized, giving c = +1/2.
        assert!((b.c[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        let a = analyze_pair(&sp, &s1, &s2).unwrap();
        assert!((&b.c_op - &a.c).norm() < 1e-14);
        assert!(b.residuals.factorization < 1e-14);
    }
}
