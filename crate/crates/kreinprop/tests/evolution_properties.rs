//! Randomized Klein–Gordon schedules: structure preservation, kernel support and identities.

use std::sync::Arc;

use kreinprop::evolution::{
    bisolution_kernels, classical_kernels, feynman_kernels, identity_residuals, in_out_involutions, read_dump,
    solve_evolution, write_dump, DumpBlock, DumpFormat, DumpHeader, IdentityOptions, Scheme, Smoothness, TimeGrid,
};
use kreinprop::kleingordon::{assemble_phase_space, charge_drift, lattice_model, spacetime_propagators, KGData, LatticeParams, SiteFn};
use kreinprop::linalg::{c, eye, max_abs, op_norm};
use kreinprop::CVec;
use proptest::prelude::*;

/// m²(t) = a + b·tanh(t/w) on `sites` lattice sites (a single mode when `sites` is 1).
fn model(sites: usize, a: f64, b: f64, w: f64, grid: &TimeGrid) -> KGData {
    let m2 = move |t: f64| a + b * (t / w).tanh();
    if sites == 1 {
        return KGData::mode(m2).with_smoothness(Smoothness::C1);
    }
    let zero: SiteFn = Arc::new(|_, _| 0.0);
    lattice_model(LatticeParams {
        sites,
        spacing: 1.0,
        mass2: Arc::new(move |t, _| m2(t)),
        scalar: zero.clone(),
        electric: zero,
        window: (grid.t_minus, grid.t_plus),
        smoothness: Smoothness::C1,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn structure_support_and_identities(
        sites in prop_oneof![Just(1usize), Just(3usize)],
        a in 1.0f64..4.0,
        frac in -0.8f64..0.8,
        w in 0.5f64..2.0,
        n in 120usize..240,
    ) {
        let b = frac * (a - 0.2);
        let grid = TimeGrid::new(-3.0, 3.0, n).unwrap();
        let ph = assemble_phase_space(model(sites, a, b, w, &grid), &grid).unwrap();
        let evo = Arc::new(solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap());
        prop_assert!(evo.q_drift() <= 1e-12 * n as f64);

        let io = in_out_involutions(&ph.schedule(), &evo).unwrap();
        let dim = ph.space.dim;
        for j in [0, n / 3, n] {
            for s in [io.s_minus_at(j), io.s_plus_at(j)] {
                prop_assert!(op_norm(&(&s * &s - eye(dim))) <= 1e-9);
                prop_assert!(op_norm(&(s.adjoint() * &ph.space.q * &s - &ph.space.q)) <= 1e-9);
            }
        }

        let k = classical_kernels(&evo);
        for (i, j) in [(1, 5), (n / 2, n / 2 + 1), (0, n)] {
            prop_assert_eq!(max_abs(&k.forward.eval(i, j)), 0.0);
            prop_assert_eq!(max_abs(&k.backward.eval(j, i)), 0.0);
        }
        let bis = bisolution_kernels(&evo, &io);
        let f = feynman_kernels(&evo, &io).unwrap();
        let rep = identity_residuals(&k, &bis, &f, &io, IdentityOptions { pair_budget: 20_000, ..IdentityOptions::default() });
        prop_assert!(rep.all_pass(), "{:?}", rep);

        let props = spacetime_propagators(&k, &bis, &f);
        let herm = props.hermiticity(1e-9, 7, 48).unwrap();
        prop_assert!(herm.all_pass(), "{:?}", herm);

        let u0 = CVec::from_fn(dim, |i, _| c(1.0 + i as f64, 0.5));
        let v0 = CVec::from_fn(dim, |i, _| c(0.3, -(i as f64)));
        let d = charge_drift(&ph, &evo, &u0, &v0).unwrap();
        prop_assert!(d.evolved <= 1e-11 * (1.0 + d.reference) * n as f64);
    }

    #[test]
    fn dumps_round_trip(n in 64usize..96, json in any::<bool>(), a in 1.0f64..4.0) {
        let grid = TimeGrid::new(-1.0, 1.0, n).unwrap();
        let ph = assemble_phase_space(model(1, a, 0.0, 1.0, &grid), &grid).unwrap();
        let evo = Arc::new(solve_evolution(&ph.schedule(), grid, Scheme::MidpointExp).unwrap());
        let k = classical_kernels(&evo);
        let encoding = if json { DumpFormat::Json } else { DumpFormat::Binary };
        let header = DumpHeader::new("PJ", DumpBlock::Full, 2, 2, grid, encoding);
        let mut bytes = Vec::new();
        write_dump(&mut bytes, &header, &|i, j| k.pj.eval(i, j)).unwrap();
        let back = read_dump(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back.header, &header);
        prop_assert_eq!(back.records.len(), (n + 1) * (n + 1));
        for (i, j, m) in &back.records {
            prop_assert_eq!(m, &k.pj.eval(*i, *j));
        }
    }
}
