//! Randomized invariants of admissible involutions, pairs and Bogoliubov blocks.

use kreinprop::krein::{analyze_pair, bogoliubov_blocks, q_complement, AdmissibleInvolution, KreinSpace, Subspace};
use kreinprop::linalg::{eye, min_singular, op_norm};
use kreinprop::quant::{det_chain, two_point_in_out, Formalism, GaussianInOut};
use kreinprop::random::{gaussian_matrix, gaussian_vector, random_admissible, random_krein_space, random_pseudo_unitary};
use kreinprop::CMat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Case {
    space: KreinSpace,
    s1: AdmissibleInvolution,
    s2: AdmissibleInvolution,
    rng: ChaCha8Rng,
}

fn case(seed: u64, half: usize) -> Case {
    let dim = 2 * half;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (space, frame) = random_krein_space(&mut rng, dim, half);
    let sigma = 0.5 / (dim as f64).sqrt();
    let s1 = random_admissible(&mut rng, &space, &frame, sigma);
    let s2 = random_admissible(&mut rng, &space, &frame, sigma);
    Case { space, s1, s2, rng }
}

fn hstack(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admissible_involutions(seed in any::<u64>(), half in 1usize..=4) {
        let c = case(seed, half);
        for s in [&c.s1, &c.s2] {
            let one = eye(c.space.dim);
            prop_assert!(op_norm(&(&s.s * &s.s - &one)) <= 1e-9);
            prop_assert!(op_norm(&(s.s.adjoint() * &c.space.q * &s.s - &c.space.q)) <= 1e-9);
            prop_assert!(s.report.qs_min_eig > 0.0);
            prop_assert!(op_norm(&(&s.pi_plus + &s.pi_minus - &one)) <= 1e-9);
        }
    }

    #[test]
    fn pair_invariants(seed in any::<u64>(), half in 1usize..=4) {
        let c = case(seed, half);
        let a = analyze_pair(&c.space, &c.s1, &c.s2).unwrap();
        prop_assert!(a.first_failure(1e-8).is_none(), "{:?}", a.residuals);
        let one = eye(c.space.dim);
        // Υ⁻¹ = 4(2 + S₁S₂ + S₂S₁)⁻¹, by direct inversion of the sum.
        let sum = &one * kreinprop::linalg::c(2.0, 0.0) + &c.s1.s * &c.s2.s + &c.s2.s * &c.s1.s;
        let direct = sum.try_inverse().unwrap() * kreinprop::linalg::c(4.0, 0.0);
        prop_assert!(op_norm(&(&a.upsilon_inv - direct)) <= 1e-8);
        prop_assert!(a.residuals.m_min_eig_g1 > 0.0);
        // (Z₁⁺, Z₂⁻) is complementary.
        let z1p = Subspace::range_of(&c.s1.pi_plus).basis;
        let z2m = Subspace::range_of(&c.s2.pi_minus).basis;
        prop_assert_eq!(z1p.ncols() + z2m.ncols(), c.space.dim);
        prop_assert!(min_singular(&hstack(&z1p, &z2m)) > 1e-6);
    }

    #[test]
    fn q_complement_is_an_involution_and_keeps_complementarity(seed in any::<u64>(), half in 1usize..=4) {
        let mut c = case(seed, half);
        let dim = c.space.dim;
        let k = 1 + (seed as usize) % (dim - 1);
        let a = Subspace::new(&gaussian_matrix(&mut c.rng, dim, k, 1.0), 1e-8).unwrap();
        let b = Subspace::new(&gaussian_matrix(&mut c.rng, dim, dim - k, 1.0), 1e-8).unwrap();
        let aa = q_complement(&c.space, &q_complement(&c.space, &a).unwrap()).unwrap();
        prop_assert!(op_norm(&(aa.projector() - a.projector())) <= 1e-8);
        prop_assume!(min_singular(&hstack(&a.basis, &b.basis)) > 1e-3);
        let (ac, bc) = (q_complement(&c.space, &a).unwrap(), q_complement(&c.space, &b).unwrap());
        prop_assert_eq!(ac.dim() + bc.dim(), dim);
        prop_assert!(min_singular(&hstack(&ac.basis, &bc.basis)) > 1e-10);
    }

    #[test]
    fn bogoliubov_relations_and_det_chain(seed in any::<u64>(), half in 1usize..=4) {
        let mut c = case(seed, half);
        let r = random_pseudo_unitary(&mut c.rng, &c.space, 0.3);
        let b = bogoliubov_blocks(&c.space, &r, &c.s1, &c.s2).unwrap();
        let res = &b.residuals;
        prop_assert!(res.pseudo_unitary.max() <= 1e-9, "{:?}", res);
        for x in [res.c_two_formulas, res.d_two_formulas, res.factorization, res.rpp_gram, res.rmm_gram] {
            prop_assert!(x <= 1e-8, "{:?}", res);
        }
        let chain = det_chain(&c.space, &r, &c.s1, &c.s2).unwrap();
        prop_assert!(chain.residuals.max() <= 1e-9, "{:?}", chain);
    }

    #[test]
    fn in_out_two_point_structure(seed in any::<u64>(), half in 1usize..=3) {
        let mut c = case(seed, half);
        let dim = c.space.dim;
        let g = GaussianInOut::new(&c.space, c.s1.clone(), c.s2.clone(), Formalism::Charged).unwrap();
        let (v, w, u) = (gaussian_vector(&mut c.rng, dim), gaussian_vector(&mut c.rng, dim), gaussian_vector(&mut c.rng, dim));
        let (a, b) = (kreinprop::linalg::c(0.3, -1.1), kreinprop::linalg::c(-0.7, 0.4));
        // Antilinear in v, linear in w.
        let lhs = two_point_in_out(&g, &(&v * a + &u * b), &w).unwrap();
        let rhs = two_point_in_out(&g, &v, &w).unwrap() * a.conj() + two_point_in_out(&g, &u, &w).unwrap() * b.conj();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
        let lhs = two_point_in_out(&g, &v, &(&w * a + &u * b)).unwrap();
        let rhs = two_point_in_out(&g, &v, &w).unwrap() * a + two_point_in_out(&g, &v, &u).unwrap() * b;
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
        // Vanishes for w ∈ Z₋⁽⁻⁾ and for v ∈ Z₊⁽⁻⁾.
        let w_minus = &g.s_minus.pi_minus * &w;
        let v_minus = &g.s_plus.pi_minus * &v;
        prop_assert!(two_point_in_out(&g, &v, &w_minus).unwrap().norm() <= 1e-9 * (1.0 + v.norm() * w.norm()));
        prop_assert!(two_point_in_out(&g, &v_minus, &w).unwrap().norm() <= 1e-9 * (1.0 + v.norm() * w.norm()));
    }
}
