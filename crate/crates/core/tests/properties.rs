use carleson_core::expsums::{complete_weyl_sum, weyl_sum_direct, weyl_sum_gauss, DEFAULT_TERM_BUDGET};
use carleson_core::multipliers::{m_grid, m_lattice, DEFAULT_LATTICE_BUDGET};
use carleson_core::operators::{
    apply_mj, carleson_apply, kappa_forms, rm_bound, tts_kernel, LambdaGrid, LatticeFunction,
};
use carleson_core::rationals::{dirichlet_approx, gcd, reduce, xj_candidates};
use carleson_core::{ArcPair, ArcParams, KernelFamily, C64};
use proptest::prelude::*;

fn pair_strategy(q_max: i64, n: usize) -> impl Strategy<Value = ArcPair> {
    (1..=q_max).prop_flat_map(move |q| {
        (0..q, proptest::collection::vec(0..q, n)).prop_filter_map("joint gcd", move |(a, b)| {
            let g = b.iter().fold(gcd(a, q), |g, &x| gcd(g, x));
            (g == 1).then(|| ArcPair::new(a, &b, q).unwrap())
        })
    })
}

fn lattice_fn(vals: Vec<(f64, f64)>, center: i64) -> LatticeFunction<f64> {
    let half = (vals.len() as i64 - 1) / 2;
    let v: Vec<C64> = vals[..(2 * half + 1) as usize].iter().map(|&(a, b)| C64::new(a, b)).collect();
    LatticeFunction::new(vec![center], vec![half], v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dirichlet_bound_holds(x in -1e3f64..1e3, q_max in 1u64..5000) {
        let r = dirichlet_approx(x, q_max).unwrap();
        let (a, q) = (r.num() as f64, r.den() as f64);
        prop_assert!(r.den() as u64 <= q_max);
        prop_assert!(x.mul_add(q, -a).abs() <= 1.0 / q_max as f64 + 1e-12 * x.abs().max(1.0) * q);
    }

    #[test]
    fn weyl_conjugation(p in pair_strategy(40, 2), d in 1u32..=2) {
        let s = complete_weyl_sum::<f64>(&p, d).unwrap().value;
        let neg_b: Vec<i64> = p.b().iter().map(|&b| -b).collect();
        let m = ArcPair::new(-p.a(), &neg_b, p.q()).unwrap();
        let t = complete_weyl_sum::<f64>(&m, d).unwrap().value;
        prop_assert!((s - t.conj()).norm() < 1e-12);
        prop_assert!(s.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn gauss_path_matches_direct(p in pair_strategy(100, 1)) {
        let fast: C64 = weyl_sum_gauss(&p);
        let slow = weyl_sum_direct::<f64>(&p, 1, DEFAULT_TERM_BUDGET).unwrap().value;
        prop_assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1e-3));
    }

    #[test]
    fn gauss_path_matches_direct_3d(p in pair_strategy(30, 3)) {
        let fast: C64 = weyl_sum_gauss(&p);
        let slow = weyl_sum_direct::<f64>(&p, 1, DEFAULT_TERM_BUDGET).unwrap().value;
        prop_assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1e-3));
    }

    #[test]
    fn xj_has_at_most_one_element(lam in 0.0f64..1.0, j in 1u32..40) {
        let p = ArcParams::rescaled(0.25, 0.5, 1, 1).unwrap();
        prop_assert!(xj_candidates(lam, j, &p).len() <= 1);
    }

    #[test]
    fn rm_inequality(s in 1u32..=8, seed in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 257)) {
        let len = (1usize << s) + 1;
        let a: Vec<C64> = seed[..len].iter().map(|&(x, y)| C64::new(x, y)).collect();
        let (lhs, rhs) = rm_bound(&a, 0).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn multiplier_periodicity(j in 1u32..5, lam in -1.0f64..1.0, xi in -1.0f64..1.0, z in -3i64..3) {
        let k = KernelFamily::<f64>::hilbert(1);
        let m0 = m_lattice(&k, j, lam, &[xi], DEFAULT_LATTICE_BUDGET).unwrap();
        let m1 = m_lattice(&k, j, lam + 1.0, &[xi + z as f64], DEFAULT_LATTICE_BUDGET).unwrap();
        prop_assert!((m0 - m1).norm() < 1e-12);
    }

    #[test]
    fn grid_matches_direct(j in 1u32..4, lam in 0.0f64..1.0, node in 0usize..64) {
        let k = KernelFamily::<f64>::riesz(2, 0, 1).unwrap();
        let size = 64usize.max(1 << (j + 3));
        let g = m_grid(&k, j, lam, size, DEFAULT_LATTICE_BUDGET).unwrap();
        let (k0, k1) = (node % size, (node * 7 + 3) % size);
        let xi = [k0 as f64 / size as f64, k1 as f64 / size as f64];
        let want = m_lattice(&k, j, lam, &xi, DEFAULT_LATTICE_BUDGET).unwrap();
        let l1 = k.lattice_l1(j, DEFAULT_LATTICE_BUDGET).unwrap();
        prop_assert!((g.values[k0 * size + k1] - want).norm() <= 1e-10 * l1);
    }

    #[test]
    fn apply_is_linear_and_equivariant(
        f in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        g in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        lam in 0.0f64..1.0,
        shift in -20i64..20,
    ) {
        let k = KernelFamily::<f64>::hilbert(1);
        let (f, g) = (lattice_fn(f, 0), lattice_fn(g, 0));
        let lhs = apply_mj(&k, 3, lam, &f.add(&g).unwrap()).unwrap();
        let rhs = apply_mj(&k, 3, lam, &f).unwrap().add(&apply_mj(&k, 3, lam, &g).unwrap()).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let moved = apply_mj(&k, 3, lam, &f.translate(&[shift])).unwrap();
        let base = apply_mj(&k, 3, lam, &f).unwrap();
        for x in -24i64..=24 {
            prop_assert!((moved.get(&[x + shift]) - base.get(&[x])).norm() < 1e-12);
        }
    }

    #[test]
    fn kappa_forms_agree(q in 1i64..=12, q2 in 1i64..=12, a in 0i64..12, a2 in 0i64..12, w in -24i64..=24, d in 1u32..=2) {
        prop_assume!(gcd(a % q, q) == 1 && gcd(a2 % q2, q2) == 1);
        let k = kappa_forms::<f64>(reduce(a % q, q).unwrap(), reduce(a2 % q2, q2).unwrap(), &[w], d, 1).unwrap();
        prop_assert!(k.discrepancy <= 1e-9);
    }

    #[test]
    fn tts_support(x in -40i64..40, y in -40i64..40, lam in 0.0f64..1.0) {
        let k = KernelFamily::<f64>::hilbert(1);
        let map = move |_: &[i64]| lam;
        let v = tts_kernel(&k, 2, &map, &[x], &[y]).unwrap();
        if x.abs() > 16 || y.abs() > 16 {
            prop_assert_eq!(v, C64::new(0.0, 0.0));
        }
    }
}

#[test]
fn grid_refinement_is_monotone() {
    let k = KernelFamily::<f64>::hilbert(1);
    let f = carleson_core::operators::random_trial::<f64>(1, 8, 3, 1);
    let coarse = carleson_apply(&k, &f, 3, &LambdaGrid::uniform(16).unwrap()).unwrap();
    let fine = carleson_apply(&k, &f, 3, &LambdaGrid::uniform(64).unwrap()).unwrap();
    let refined =
        carleson_apply(&k, &f, 3, &LambdaGrid::uniform(16).unwrap().refined_near_rationals(4, 0.01, 3).unwrap())
            .unwrap();
    assert!(fine.cf.l2_norm() >= coarse.cf.l2_norm());
    assert!(refined.cf.l2_norm() >= coarse.cf.l2_norm());
    for (a, b) in coarse.cf.values().iter().zip(fine.cf.values()) {
        assert!(b.re >= a.re);
    }
}
