//! Comparisons against slow, independently written reference computations.

use std::f64::consts::TAU;

use carleson_core::expsums::{complete_weyl_sum, verify_orthogonality};
use carleson_core::kernels::KernelFamily;
use carleson_core::multipliers::{m_lattice, DEFAULT_LATTICE_BUDGET};
use carleson_core::operators::{
    apply_mj, apply_mj_adjoint, kappa_forms, linearized_norm, power_bound, schur_bound, tts_kernel, LatticeFunction,
};
use carleson_core::oscint::phi;
use carleson_core::rationals::{dirichlet_approx, enumerate_rs, euler_phi, farey_set, gcd, reduce};
use carleson_core::{ArcPair, QuadratureSpec, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn e(t: f64) -> C64 {
    C64::from_polar(1.0, TAU * t)
}

fn naive_weyl(a: i64, b: &[i64], q: i64, d: u32) -> C64 {
    let n = b.len();
    let mut acc = C64::new(0.0, 0.0);
    let total = (q as usize).pow(n as u32);
    for f in 0..total {
        let mut r = vec![0i64; n];
        let mut g = f;
        for k in (0..n).rev() {
            r[k] = (g % q as usize) as i64;
            g /= q as usize;
        }
        let s: i128 = r.iter().map(|&v| (v * v) as i128).sum();
        let lin: i128 = r.iter().zip(b).map(|(&x, &y)| (x * y) as i128).sum();
        let ph = ((a as i128) * s.pow(d) + lin).rem_euclid(q as i128);
        acc += e(ph as f64 / q as f64);
    }
    acc / total as f64
}

#[test]
fn weyl_sums_match_naive_sum() {
    for q in 1..=24 {
        for a in 0..q {
            for b in [0, 1, q / 2, q - 1] {
                for d in 1..=3 {
                    let Ok(p) = ArcPair::new(a, &[b], q) else { continue };
                    let got = complete_weyl_sum::<f64>(&p, d).unwrap().value;
                    assert!((got - naive_weyl(a, &[b], q, d)).norm() < 1e-12, "{a} {b} {q} {d}");
                }
            }
        }
    }
    for (a, b, q) in [(1, [2, 3], 7), (3, [0, 5], 10), (2, [1, 1], 9)] {
        let got = complete_weyl_sum::<f64>(&ArcPair::new(a, &b, q).unwrap(), 2).unwrap().value;
        assert!((got - naive_weyl(a, &b, q, 2)).norm() < 1e-12);
    }
}

#[test]
fn gauss_sum_modulus() {
    for q in [3, 5, 7, 11, 13] {
        let s = complete_weyl_sum::<f64>(&ArcPair::new(1, &[0], q).unwrap(), 1).unwrap().value;
        assert!((s.norm() - (q as f64).powf(-0.5)).abs() < 1e-10);
    }
}

#[test]
fn orthogonality_small() {
    for d in 1..=2 {
        for n in 1..=2 {
            let r = verify_orthogonality(20, d, n, 1e-9).unwrap();
            assert!(r.passed() && r.cases > 0);
        }
    }
}

#[test]
fn farey_cardinality_matches_sieve() {
    let q_max = 300usize;
    let mut phi: Vec<u64> = (0..=q_max as u64).collect();
    for p in 2..=q_max {
        if phi[p] == p as u64 {
            for m in (p..=q_max).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    for q in 1..=q_max {
        assert_eq!(euler_phi(q as u64), phi[q]);
    }
    // [0, 1) drops the endpoint 1/1 of the closed Farey sequence
    for q in [1usize, 2, 7, 50, 300] {
        let want = phi[1..=q].iter().sum::<u64>();
        assert_eq!(farey_set(q as u64).unwrap().len() as u64, want);
    }
}

#[test]
fn rs_cardinality_matches_brute_force() {
    for n in 1..=2usize {
        for s in 1..=4u32 {
            let mut count = 0;
            for q in (1i64 << (s - 1))..(1i64 << s) {
                let vecs = carleson_core::rationals::cartesian(&vec![(0..q).collect(); n + 1]);
                count += vecs.iter().filter(|v| v.iter().fold(q, |g, &x| gcd(g, x)) == 1).count();
            }
            assert_eq!(enumerate_rs(s, n).unwrap().len(), count);
        }
    }
}

#[test]
fn dirichlet_on_many_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100_000 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        let q_max: u64 = rng.gen_range(1..2000);
        let r = dirichlet_approx(x, q_max).unwrap();
        let err = (x - r.num() as f64 / r.den() as f64).abs();
        assert!(err <= 1.0 / (r.den() as f64 * q_max as f64) * (1.0 + 1e-9));
    }
}

#[test]
fn multiplier_matches_naive_sum() {
    let k = KernelFamily::<f64>::hilbert(2);
    for j in 1..5 {
        for &(lam, xi) in &[(0.0, 0.1), (0.37, -0.2), (0.9, 0.45)] {
            let h = 1i64 << (j + 1);
            let mut want = C64::new(0.0, 0.0);
            for y in -h..=h {
                let y4 = (y * y * y * y) as f64;
                want += k.piece(j, &[y as f64]) * e(lam * y4 + xi * y as f64);
            }
            let got = m_lattice(&k, j, lam, &[xi], DEFAULT_LATTICE_BUDGET).unwrap();
            assert!((got - want).norm() < 1e-10);
        }
    }
}

#[test]
fn phi_matches_trapezoid() {
    // the integrand is smooth with compact support, so the trapezoid rule
    // converges spectrally
    let k = KernelFamily::<f64>::hilbert(1);
    let quad = QuadratureSpec::default();
    for j in 2..6u32 {
        for &(lam, xi) in &[(0.0, 0.05), (1e-3, 0.1), (-2e-3, -0.3)] {
            let hi = 2f64.powi(j as i32 + 1);
            let m = 200_000;
            let h = 2.0 * hi / m as f64;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..=m {
                let y = -hi + i as f64 * h;
                acc += k.piece(j, &[y]) * e(lam * y * y + xi * y);
            }
            let got = phi(&k, j, lam, &[xi], &quad).unwrap();
            assert!((got - acc * h).norm() < 1e-9, "j={j} {got} {}", acc * h);
        }
    }
}

fn box_points(r: i64) -> Vec<Vec<i64>> {
    (-r..=r).map(|x| vec![x]).collect()
}

#[test]
fn apply_and_adjoint_match_dense_matrices() {
    let k = KernelFamily::<f64>::hilbert(1);
    let (j, lam, r) = (2u32, 0.3, 5i64);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vals: Vec<C64> = (0..2 * r + 1).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let f = LatticeFunction::new(vec![0], vec![r], vals).unwrap();
    let g = apply_mj(&k, j, lam, &f).unwrap();
    let ga = apply_mj_adjoint(&k, j, lam, &f).unwrap();
    for x in -20i64..=20 {
        let mut want = C64::new(0.0, 0.0);
        let mut want_adj = C64::new(0.0, 0.0);
        for y in -r..=r {
            let kv = k.piece_at(j, &[x - y]) * e(lam * ((x - y) * (x - y)) as f64);
            want += f.get(&[y]) * kv;
            let ka = k.piece_at(j, &[y - x]) * e(lam * ((y - x) * (y - x)) as f64);
            want_adj += f.get(&[y]) * ka.conj();
        }
        assert!((g.get(&[x]) - want).norm() < 1e-12);
        assert!((ga.get(&[x]) - want_adj).norm() < 1e-12);
    }
}

#[test]
fn tts_kernel_matches_dense_product() {
    let k = KernelFamily::<f64>::hilbert(1);
    let j = 2u32;
    let lam_of = |x: &[i64]| 0.05 * x[0] as f64 + 0.013;
    let rows = box_points(1 << (j + 2));
    let cols = box_points(1 << j);
    // T(x, z) = e(lambda(x) |x - z|^2) K_j(x - z) 1_{|z| <= 2^j}
    let t = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        let (x, z) = (rows[a][0], cols[b][0]);
        k.piece_at(j, &[x - z]) * e(lam_of(&rows[a]) * ((x - z) * (x - z)) as f64)
    });
    let tts = &t * t.adjoint();
    for a in 0..rows.len() {
        for b in 0..rows.len() {
            let got = tts_kernel(&k, j, &lam_of, &rows[a], &rows[b]).unwrap();
            assert!((got - tts[(a, b)]).norm() < 1e-12);
        }
    }
    let kern = |x: &[i64], y: &[i64]| tts_kernel(&k, j, &lam_of, x, y).unwrap();
    let sigma = tts.singular_values()[0];
    let schur = schur_bound(&kern, &rows, &rows);
    let power = power_bound(&kern, &rows, 200);
    assert!(schur >= sigma * (1.0 - 1e-12));
    assert!((power - sigma).abs() < 1e-6 * sigma);
}

#[test]
fn linearized_norm_matches_svd() {
    let k = KernelFamily::<f64>::hilbert(1);
    let (big_j, lam, r) = (3u32, 0.21, 6i64);
    let reach = r + (1 << (big_j + 1));
    let mat = DMatrix::from_fn((2 * reach + 1) as usize, (2 * r + 1) as usize, |a, b| {
        let y = (a as i64 - reach) - (b as i64 - r);
        (1..=big_j).map(|j| k.piece_at(j, &[y])).sum::<C64>() * e(lam * (y * y) as f64)
    });
    let sigma = mat.singular_values().max();
    let est = linearized_norm(&k, big_j, lam, r, 300, 5).unwrap();
    assert!(est <= sigma * (1.0 + 1e-9));
    assert!(est >= sigma * (1.0 - 1e-4));
}

fn naive_kappa(a: i64, q: i64, a2: i64, q2: i64, w: i64, d: u32) -> (C64, C64) {
    let g = gcd(q, q2);
    let s = |aa: i64, qq: i64, c: i64| {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..qq {
            let ph = (aa as i128 * ((r * r) as i128).pow(d) + (c * r) as i128).rem_euclid(qq as i128);
            acc += e(ph as f64 / qq as f64);
        }
        acc / qq as f64
    };
    let mut beta = C64::new(0.0, 0.0);
    for b in 0..g {
        beta += s(a, q, b * (q / g)) * s(a2, q2, b * (q2 / g)).conj() * e(((w * b).rem_euclid(g)) as f64 / g as f64);
    }
    let m = q2 / g;
    let mut closed = C64::new(0.0, 0.0);
    for u in 0..m {
        for r in 0..q {
            let t = r + w + u * g;
            let p1 = (a as i128 * ((r * r) as i128).pow(d)).rem_euclid(q as i128) as f64 / q as f64;
            let p2 = (a2 as i128 * ((t * t) as i128).pow(d)).rem_euclid(q2 as i128) as f64 / q2 as f64;
            closed += e(p1 - p2);
        }
    }
    (beta, closed / (m * q) as f64)
}

#[test]
fn kappa_matches_naive_forms() {
    for q in 1..=9i64 {
        for q2 in 1..=9i64 {
            for a in (0..q).filter(|&a| gcd(a, q) == 1) {
                let a2 = (0..q2).find(|&x| gcd(x, q2) == 1).unwrap();
                for w in [-7i64, 0, 3, 11] {
                    for d in 1..=2 {
                        let got = kappa_forms::<f64>(reduce(a, q).unwrap(), reduce(a2, q2).unwrap(), &[w], d, 1).unwrap();
                        let (beta, closed) = naive_kappa(a, q, a2, q2, w, d);
                        assert!((got.beta_form - beta).norm() < 1e-11);
                        assert!((got.closed_form - closed).norm() < 1e-11);
                    }
                }
            }
        }
    }
}
