//! Truncated bosonic Fock space used as a brute-force oracle.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::linalg::{c, CMat, CVec, C64};

/// Largest number of modes.
pub const MAX_MODES: usize = 4;
/// Largest per-mode occupation cutoff.
pub const MAX_NMAX: usize = 64;
/// Largest total dimension (nmax+1)^k.
pub const MAX_DIM: usize = 30_000;
/// Relative truncation tail above which every oracle refuses.
pub const TAIL_LIMIT: f64 = 1e-8;

/// ⊗_{i<k} span{|0⟩, …, |nmax⟩}, states indexed in mixed radix nmax+1.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub k: usize,
    pub nmax: usize,
    pub dim: usize,
}

impl TruncatedFock {
    pub fn new(k: usize, nmax: usize) -> Result<Self> {
        if k == 0 || k > MAX_MODES {
            return input(format!("truncated Fock space needs 1 to {MAX_MODES} modes, got {k}"));
        }
        if nmax == 0 || nmax > MAX_NMAX {
            return input(format!("nmax must lie in 1..={MAX_NMAX}, got {nmax}"));
        }
        let dim = (nmax + 1).checked_pow(k as u32).filter(|&d| d <= MAX_DIM);
        match dim {
            Some(dim) => Ok(TruncatedFock { k, nmax, dim }),
            None => input(format!("(nmax+1)^k exceeds {MAX_DIM} for k = {k}, nmax = {nmax}")),
        }
    }

    fn stride(&self, i: usize) -> usize {
        (self.nmax + 1).pow(i as u32)
    }

    /// Occupation of mode i in basis state `idx`.
    pub fn occupation(&self, idx: usize, i: usize) -> usize {
        (idx / self.stride(i)) % (self.nmax + 1)
    }

    pub fn occupations(&self, idx: usize) -> Vec<usize> {
        (0..self.k).map(|i| self.occupation(idx, i)).collect()
    }

    pub fn total_occupation(&self, idx: usize) -> usize {
        (0..self.k).map(|i| self.occupation(idx, i)).sum()
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().enumerate().map(|(i, &n)| n * self.stride(i)).sum()
    }

    pub fn vacuum(&self) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[0] = c(1.0, 0.0);
        v
    }

    pub fn basis_state(&self, occ: &[usize]) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[self.index(occ)] = c(1.0, 0.0);
        v
    }

    /// a_i v.
    pub fn annihilate(&self, i: usize, v: &CVec) -> CVec {
        let s = self.stride(i);
        let mut out = CVec::zeros(self.dim);
        for (idx, &x) in v.iter().enumerate() {
            if x == C64::default() {
                continue;
            }
            let n = self.occupation(idx, i);
            if n > 0 {
                out[idx - s] += x * (n as f64).sqrt();
            }
        }
        out
    }

    /// a_i† v; components pushed above nmax are dropped.
    pub fn create(&self, i: usize, v: &CVec) -> CVec {
        let s = self.stride(i);
        let mut out = CVec::zeros(self.dim);
        for (idx, &x) in v.iter().enumerate() {
            if x == C64::default() {
                continue;
            }
            let n = self.occupation(idx, i);
            if n < self.nmax {
                out[idx + s] += x * ((n + 1) as f64).sqrt();
            }
        }
        out
    }

    /// Σ_i conj(u_i) a_i v.
    pub fn annihilate_along(&self, u: &CVec, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for (i, ui) in u.iter().enumerate() {
            if *ui != C64::default() {
                out += self.annihilate(i, v) * ui.conj();
            }
        }
        out
    }

    /// Σ_i u_i a_i† v.
    pub fn create_along(&self, u: &CVec, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for (i, ui) in u.iter().enumerate() {
            if *ui != C64::default() {
                out += self.create(i, v) * *ui;
            }
        }
        out
    }

    /// Σ_{ij} m_ij a_{r0+i}† a_{c0+j}† v.
    pub fn pair_create(&self, m: &CMat, r0: usize, c0: usize, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for j in 0..m.ncols() {
            let cj = self.create(c0 + j, v);
            for i in 0..m.nrows() {
                if m[(i, j)] != C64::default() {
                    out += self.create(r0 + i, &cj) * m[(i, j)];
                }
            }
        }
        out
    }

    /// Σ_{ij} m_ij a_{r0+i} a_{c0+j} v.
    pub fn pair_annihilate(&self, m: &CMat, r0: usize, c0: usize, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for j in 0..m.ncols() {
            let cj = self.annihilate(c0 + j, v);
            for i in 0..m.nrows() {
                if m[(i, j)] != C64::default() {
                    out += self.annihilate(r0 + i, &cj) * m[(i, j)];
                }
            }
        }
        out
    }

    /// Zero every component whose occupation in some mode reaches `level`.
    pub fn below(&self, v: &CVec, level: usize) -> CVec {
        CVec::from_iterator(
            self.dim,
            v.iter().enumerate().map(|(idx, &x)| {
                if (0..self.k).all(|i| self.occupation(idx, i) < level) {
                    x
                } else {
                    C64::default()
                }
            }),
        )
    }

    /// Basis states with total occupation ≤ `max_total`.
    pub fn low_states(&self, max_total: usize) -> Vec<CVec> {
        (0..self.dim)
            .filter(|&idx| self.total_occupation(idx) <= max_total)
            .map(|idx| {
                let mut v = CVec::zeros(self.dim);
                v[idx] = c(1.0, 0.0);
                v
            })
            .collect()
    }

    /// Largest ‖[a_i, a_j†]v − δ_ij v‖ over basis states v with every occupation < nmax,
    /// and the largest ‖a_i Ω‖.
    pub fn ccr_residual(&self) -> (f64, f64) {
        let mut worst: f64 = 0.0;
        for idx in 0..self.dim {
            if (0..self.k).any(|i| self.occupation(idx, i) >= self.nmax) {
                continue;
            }
            let mut v = CVec::zeros(self.dim);
            v[idx] = c(1.0, 0.0);
            for i in 0..self.k {
                for j in 0..self.k {
                    let ac = self.annihilate(i, &self.create(j, &v));
                    let ca = self.create(j, &self.annihilate(i, &v));
                    let mut r = ac - ca;
                    if i == j {
                        r -= &v;
                    }
                    worst = worst.max(r.norm());
                }
            }
        }
        let vac = self.vacuum();
        let kill = (0..self.k).map(|i| self.annihilate(i, &vac).norm()).fold(0.0, f64::max);
        (worst, kill)
    }
}

/// Partial sum of a series and an estimate of its relative truncation error:
/// the first neglected term extrapolated from the last ratio.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesSum {
    pub value: C64,
    pub tail: f64,
}

pub fn sum_series(terms: &[C64]) -> SeriesSum {
    let value: C64 = terms.iter().sum();
    let tail = match terms {
        [.., prev, last] => {
            let (p, l) = (prev.norm(), last.norm());
            if l == 0.0 {
                0.0
            } else if p == 0.0 {
                f64::INFINITY
            } else {
                l * (l / p) / value.norm()
            }
        }
        _ => f64::INFINITY,
    };
    SeriesSum { value, tail }
}

pub(crate) fn refuse_above(tail: f64, nmax: usize) -> Result<()> {
    if tail.is_finite() && tail <= TAIL_LIMIT {
        Ok(())
    } else {
        Err(Error::Truncation { tail, limit: TAIL_LIMIT, nmax })
    }
}

/// Degree-wise terms of a squeezed vector on a Fock space.
pub(crate) enum Squeeze<'a> {
    /// e^{Σ γ_ij a_i† b_j†}Ω with a = modes 0..k₊ and b = modes k₊..k₊+k₋.
    Charged(&'a CMat),
    /// e^{½ Σ γ_ij a_i† a_j†}Ω with γ symmetric.
    Neutral(&'a CMat),
}

impl Squeeze<'_> {
    pub(crate) fn modes(&self) -> usize {
        match self {
            Squeeze::Charged(g) => g.nrows() + g.ncols(),
            Squeeze::Neutral(g) => g.nrows(),
        }
    }

    /// Terms t_n = Aⁿ/n! Ω for every degree that the cutoff keeps exactly.
    pub(crate) fn terms(&self, fock: &TruncatedFock) -> Vec<CVec> {
        let (top, apply): (usize, Box<dyn Fn(&CVec) -> CVec + '_>) = match self {
            Squeeze::Charged(g) => (fock.nmax, Box::new(move |v| fock.pair_create(g, 0, g.nrows(), v))),
            Squeeze::Neutral(g) => (fock.nmax / 2, Box::new(move |v| fock.pair_create(g, 0, 0, v) * c(0.5, 0.0))),
        };
        let mut out = vec![fock.vacuum()];
        for n in 1..=top {
            let next = apply(&out[n - 1]) / c(n as f64, 0.0);
            out.push(next);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccr_hold_below_cutoff() {
        let f = TruncatedFock::new(2, 6).unwrap();
        let (ccr, kill) = f.ccr_residual();
        assert!(ccr < 1e-13 && kill == 0.0);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(TruncatedFock::new(5, 2).is_err());
        assert!(TruncatedFock::new(1, 65).is_err());
        assert!(TruncatedFock::new(4, 13).is_err());
        assert_eq!(TruncatedFock::new(4, 12).unwrap().dim, 28561);
    }

    #[test]
    fn indices_round_trip() {
        let f = TruncatedFock::new(3, 4).unwrap();
        for idx in [0, 7, 63, 124] {
            assert_eq!(f.index(&f.occupations(idx)), idx);
        }
    }

    #[test]
    fn series_tail_estimate() {
        let terms: Vec<C64> = (0..10).map(|n| c(0.5f64.powi(n), 0.0)).collect();
        let s = sum_series(&terms);
        assert!((s.value.re - (2.0 - 0.5f64.powi(9))).abs() < 1e-15);
        assert!((s.tail - 0.5f64.powi(10) / s.value.re).abs() < 1e-15);
        assert_eq!(sum_series(&[c(1.0, 0.0), c(0.0, 0.0)]).tail, 0.0);
    }
}
