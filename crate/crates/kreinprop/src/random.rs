//! Seeded generators of random Krein data for property sweeps.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::krein::{check_admissible, AdmissibleInvolution, KreinSpace};
use crate::linalg::{c, eye, CMat, CVec};

/// Complex Gaussian matrix with entries of variance `sigma²`.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, sigma: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * sigma, im * sigma)
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    gaussian_matrix(rng, n, 1, 1.0).column(0).into_owned()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma: f64) -> CMat {
    let a = gaussian_matrix(rng, n, n, sigma);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Well-conditioned invertible matrix 1 + (small Gaussian).
fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    eye(n) + gaussian_matrix(rng, n, n, 0.3 / (n as f64).sqrt())
}

/// Q = T† diag(1,…,1,−1,…,−1) T with `n_neg` negative directions.
pub fn random_krein_space<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_neg: usize) -> (KreinSpace, CMat) {
    let t = random_frame(rng, dim);
    let j = CMat::from_fn(dim, dim, |a, b| {
        if a != b {
            c(0.0, 0.0)
        } else if a < dim - n_neg {
            c(1.0, 0.0)
        } else {
            c(-1.0, 0.0)
        }
    });
    let q = t.adjoint() * &j * &t;
    (KreinSpace::new(q).expect("random charge is non-degenerate"), t)
}

/// exp(−iQ⁻¹H) for random Hermitian H of scale `sigma`.
pub fn random_pseudo_unitary<R: Rng + ?Sized>(rng: &mut R, space: &KreinSpace, sigma: f64) -> CMat {
    let h = random_hermitian(rng, space.dim, sigma);
    let b = &space.q_inv * h;
    (b * c(0.0, -1.0)).exp()
}

/// U T⁻¹ J T U⁻¹ with U random pseudo-unitary; admissible by construction.
pub fn random_admissible<R: Rng + ?Sized>(
    rng: &mut R,
    space: &KreinSpace,
    frame: &CMat,
    sigma: f64,
) -> AdmissibleInvolution {
    let t_inv = frame.clone().try_inverse().expect("frame invertible");
    // J from the frame: Q = T†JT.
    let j = t_inv.adjoint() * &space.q * &t_inv;
    let s0 = &t_inv * j * frame;
    let u = random_pseudo_unitary(rng, space, sigma);
    let u_inv = u.clone().try_inverse().expect("pseudo-unitary maps are invertible");
    let s = &u * s0 * u_inv;
    check_admissible(space, &s).expect("conjugated involution is admissible")
}
