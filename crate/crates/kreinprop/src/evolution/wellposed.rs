//! Discrete well-posed realizations: the quadrature matrix of a kernel and its inverse.

use nalgebra::LU;
use nalgebra::Dyn;
use serde::Serialize;

use super::kernel::{Kernel, KernelTag};
use crate::error::{Error, Result};
use crate::linalg::{c, singular_values, CMat, CVec, C64};

/// LU handle of the assembled quadrature matrix A with (Au)_i = Σ_j w_j E(t_i,t_j)u_j,
/// the coincident node taken as the mean of both branches.
pub struct WellPosedInverse {
    pub tag: KernelTag,
    pub assembled: CMat,
    lu: LU<C64, Dyn, Dyn>,
    pub report: WellPosedReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct WellPosedReport {
    pub size: usize,
    pub condition_number: f64,
    /// max-entry norm of M·A − 1
    pub identity_residual: f64,
}

pub fn assemble(e: &Kernel) -> CMat {
    let grid = e.grid();
    let d = e.dim();
    let w = grid.weights();
    let size = (grid.n + 1) * d;
    let mut a = CMat::zeros(size, size);
    for i in 0..=grid.n {
        for j in 0..=grid.n {
            let block = if i == j {
                let (l, u) = e.eval_diagonal_branches(i);
                (l + u) * c(0.5 * w[i], 0.0)
            } else {
                e.eval(i, j) * c(w[j], 0.0)
            };
            a.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    a
}

pub fn discrete_well_posed_inverse(e: &Kernel) -> Result<WellPosedInverse> {
    let a = assemble(e);
    let size = a.nrows();
    let sv = singular_values(&a);
    let (smax, smin) = (sv[0], *sv.last().expect("non-empty"));
    if smin <= 1e-14 * smax {
        return Err(Error::KernelNotInjective { smallest: smin });
    }
    let lu = a.clone().lu();
    let m = lu.try_inverse().ok_or(Error::KernelNotInjective { smallest: smin })?;
    let resid = &m * &a - CMat::identity(size, size);
    let identity_residual = resid.iter().fold(0.0f64, |x, z| x.max(z.norm()));
    Ok(WellPosedInverse {
        tag: e.tag,
        assembled: a,
        lu,
        report: WellPosedReport { size, condition_number: smax / smin, identity_residual },
    })
}

impl WellPosedInverse {
    /// M u as a grid function.
    pub fn apply(&self, u: &[CVec]) -> Option<Vec<CVec>> {
        let d = u.first()?.len();
        let flat = CVec::from_iterator(u.len() * d, u.iter().flat_map(|v| v.iter().copied()));
        let x = self.lu.solve(&flat)?;
        Some((0..u.len()).map(|i| x.rows(i * d, d).into_owned()).collect())
    }

    pub fn inverse_matrix(&self) -> Option<CMat> {
        self.lu.try_inverse()
    }

    /// Relative discrepancy ‖M^{*Q} + M_other‖ / ‖M_other‖ in the weighted charge pairing
    /// Σ_i w_i u_i†Q v_i. For (F, F̄) the kernels satisfy E_F^{*Q} = −E_F̄, hence the plus sign.
    pub fn q_adjoint_discrepancy(&self, other: &WellPosedInverse, q: &CMat, weights: &[f64]) -> Option<f64> {
        let m = self.inverse_matrix()?;
        let mo = other.inverse_matrix()?;
        let d = q.nrows();
        let size = m.nrows();
        let mut qt = CMat::zeros(size, size);
        let mut qt_inv = CMat::zeros(size, size);
        let q_inv = q.clone().try_inverse()?;
        for (i, &w) in weights.iter().enumerate() {
            qt.view_mut((i * d, i * d), (d, d)).copy_from(&(q * c(w, 0.0)));
            qt_inv.view_mut((i * d, i * d), (d, d)).copy_from(&(&q_inv * c(1.0 / w, 0.0)));
        }
        let adj = qt_inv * m.adjoint() * qt;
        Some((adj + &mo).norm() / mo.norm())
    }
}
