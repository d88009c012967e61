//! Truncated-Fock oracle against closed-form squeezed-vector overlaps.

use kreinprop::linalg::{c, det, eye, op_norm};
use kreinprop::quant::{fock_oracle_overlap, Formalism};
use kreinprop::random::gaussian_matrix;
use kreinprop::{CMat, Error};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scaled(m: CMat, norm: f64) -> CMat {
    let s = op_norm(&m);
    m * c(norm / s, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn squeezed_overlaps_match_determinants(
        seed in any::<u64>(),
        k in 1usize..=2,
        n1 in 0.05f64..0.45,
        n2 in 0.05f64..0.45,
        neutral in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c1 = gaussian_matrix(&mut rng, k, k, 1.0);
        let mut c2 = gaussian_matrix(&mut rng, k, k, 1.0);
        let (formalism, power, nmax) = if neutral {
            c1 = &c1 + c1.transpose();
            c2 = &c2 + c2.transpose();
            (Formalism::Neutral, -0.5, 24)
        } else {
            (Formalism::Charged, -1.0, 12)
        };
        let (c1, c2) = (scaled(c1, n1), scaled(c2, n2));
        let expect = det(&(eye(k) - c1.adjoint() * &c2)).powf(power);
        match fock_oracle_overlap(&c1, &c2, formalism, nmax) {
            Ok(v) => prop_assert!((v.value - expect).norm() <= 1e-8 * expect.norm(), "{:?} vs {expect}", v),
            Err(Error::Truncation { .. }) => prop_assume!(false),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
