use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{check_budget, Error, Result};
use crate::expsums::{pow_mod, unit_roots, DEFAULT_TERM_BUDGET};
use crate::kernels::KernelFamily;
use crate::multipliers::DEFAULT_LATTICE_BUDGET;
use crate::rationals::{cartesian, gcd, ReducedRational};
use crate::scalar::{e_turns, frac_product, from_int, CompensatedSum, Real};

fn norm2(x: &[i64]) -> i128 {
    x.iter().map(|&v| (v as i128) * (v as i128)).sum()
}

/// Kernel of `T T*` for `T f(x) = sum_y f(y) e(lambda(x) |x-y|^(2d)) K_j(x-y) 1_{|y| <= 2^j}`:
///
/// `K#(x, y) = sum_z e(lambda(x)|z|^(2d) - lambda(y)|y-x+z|^(2d)) K_j(z) conj(K_j(y-x+z)) 1_{|x-z| <= 2^j}`.
pub fn tts_kernel<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda_map: &(dyn Fn(&[i64]) -> T + Sync),
    x: &[i64],
    y: &[i64],
) -> Result<Complex<T>> {
    let n = fam.n();
    if x.len() != n || y.len() != n {
        return Err(Error::invalid("dimension mismatch"));
    }
    let outer = 1i128 << (2 * (j + 2));
    if norm2(x) > outer || norm2(y) > outer {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let h = KernelFamily::<T>::support_radius(j);
    let side = (2 * h + 1) as u128;
    check_budget("TT* kernel sum", side.pow(n as u32), DEFAULT_LATTICE_BUDGET)?;
    let (lx, ly) = (lambda_map(x), lambda_map(y));
    let ball = 1i128 << (2 * j);
    let hh = (h as i128) * (h as i128);
    let p = fam.d();
    let axis: Vec<i64> = (-h..=h).collect();
    let mut acc = CompensatedSum::new();
    let mut z = vec![0i64; n];
    let mut v = vec![0i64; n];
    let mut xz = vec![0i64; n];
    let mut idx = vec![0usize; n];
    loop {
        for k in 0..n {
            z[k] = axis[idx[k]];
            v[k] = y[k] - x[k] + z[k];
            xz[k] = x[k] - z[k];
        }
        let (nz, nv) = (norm2(&z), norm2(&v));
        if nz > 0 && nz <= hh && nv > 0 && nv <= hh && norm2(&xz) <= ball {
            let kz = fam.piece_at(j, &z);
            let kv = fam.piece_at(j, &v);
            let ph = frac_product(lx, nz.pow(p)) - frac_product(ly, nv.pow(p));
            acc.add(e_turns(ph) * kz * kv.conj());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(acc.value());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `max_x sum_y |K(x, y)|` over the given rows and column window. For a
/// Hermitian kernel this bounds the `l^2` operator norm of the restriction.
pub fn schur_bound<T: Real>(
    kernel: &(dyn Fn(&[i64], &[i64]) -> Complex<T> + Sync),
    rows: &[Vec<i64>],
    cols: &[Vec<i64>],
) -> T {
    rows.par_iter()
        .map(|x| {
            let mut s = CompensatedSum::new();
            for y in cols {
                s.add(Complex::new(kernel(x, y).norm(), T::zero()));
            }
            s.value().re
        })
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::zero(), |a, b| a.max(b))
}

/// Power-iteration estimate of the largest singular value of the matrix
/// `(K(x, y))_{x, y in window}`.
pub fn power_bound<T: Real>(
    kernel: &(dyn Fn(&[i64], &[i64]) -> Complex<T> + Sync),
    window: &[Vec<i64>],
    iterations: usize,
) -> T {
    let m = window.len();
    if m == 0 {
        return T::zero();
    }
    let mat: Vec<Vec<Complex<T>>> = window
        .par_iter()
        .map(|x| window.iter().map(|y| kernel(x, y)).collect())
        .collect();
    let apply = |v: &[Complex<T>], adj: bool| -> Vec<Complex<T>> {
        (0..m)
            .map(|r| {
                let mut s = CompensatedSum::new();
                for c in 0..m {
                    let a = if adj { mat[c][r].conj() } else { mat[r][c] };
                    s.add(a * v[c]);
                }
                s.value()
            })
            .collect()
    };
    let l2 = |v: &[Complex<T>]| v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let mut v: Vec<Complex<T>> = (0..m)
        .map(|i| Complex::new(T::one() + from_int::<T>((i % 7) as i128) / from_int(10), T::zero()))
        .collect();
    let mut est = T::zero();
    for _ in 0..iterations.max(1) {
        let nv = l2(&v);
        if nv == T::zero() {
            return T::zero();
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let w = apply(&v, false);
        est = l2(&w);
        v = apply(&w, true);
    }
    est
}

/// `q^-n sum_{r in [q]^n} e(a |r|^(2d)/q - a' |r+w|^(2d)/q')`.
pub fn s_xy<T: Real>(a: i64, q: i64, a_prime: i64, q_prime: i64, w: &[i64], d: u32, n: usize) -> Result<Complex<T>> {
    if q < 1 || q_prime < 1 {
        return Err(Error::invalid("denominators must be positive"));
    }
    if w.len() != n {
        return Err(Error::invalid("dimension mismatch"));
    }
    let terms = (q as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Overflow(format!("{q}^{n} terms")))?;
    check_budget("S_xy sum", terms, DEFAULT_TERM_BUDGET)?;
    let hist = sxy_histogram(a, q, a_prime, q_prime, w, d, 1, 1);
    Ok(hist_value::<T>(&hist) / from_int::<T>(terms as i128))
}

/// Residue counts of the `S_xy` phase modulo `lcm(q, q')`, accumulated over
/// the shifts `w + u g` for `u in [m]^n`.
#[allow(clippy::too_many_arguments)]
fn sxy_histogram(a: i64, q: i64, a_prime: i64, q_prime: i64, w: &[i64], d: u32, g: i64, m: i64) -> Vec<u64> {
    let n = w.len();
    let l = q / gcd(q, q_prime) * q_prime;
    let lu = l as u64;
    let (qu, q2u) = (q as u64, q_prime as u64);
    let phase = |num: i64, den: u64| -> Vec<u64> {
        let c = (l as u64 / den) as u128;
        let am = num.rem_euclid(den as i64) as u128;
        (0..den)
            .map(|s| (am * pow_mod(s, d, den) as u128 % den as u128 * c % lu as u128) as u64)
            .collect()
    };
    let (p1, p2) = (phase(a, qu), phase(a_prime, q2u));
    let sq2: Vec<u64> = (0..q2u).map(|t| t * t % q2u).collect();
    let rs: Vec<Vec<u64>> = cartesian(&vec![(0..q).collect(); n])
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as u64).collect())
        .collect();
    let s1: Vec<u64> = rs.iter().map(|r| p1[(r.iter().map(|v| v * v).sum::<u64>() % qu) as usize]).collect();
    let mut hist = vec![0u64; l as usize];
    let mut shift = vec![0u64; n];
    for u in cartesian(&vec![(0..m).collect(); n]) {
        for k in 0..n {
            shift[k] = (w[k] + u[k] * g).rem_euclid(q_prime) as u64;
        }
        for (r, &ph1) in rs.iter().zip(&s1) {
            let mut s2 = 0u64;
            for k in 0..n {
                s2 += sq2[((r[k] + shift[k]) % q2u) as usize];
            }
            hist[((ph1 + lu - p2[(s2 % q2u) as usize]) % lu) as usize] += 1;
        }
    }
    hist
}

fn hist_value<T: Real>(hist: &[u64]) -> Complex<T> {
    let roots = unit_roots::<T>(hist.len() as u64);
    let mut acc = CompensatedSum::new();
    for (c, z) in hist.iter().zip(&roots) {
        if *c != 0 {
            acc.add(*z * from_int::<T>(*c as i128));
        }
    }
    acc.value()
}

/// `q^-n sum_r e((a |r|^(2d) + c.r)/q)` by residue counting.
fn weyl_direct<T: Real>(a: i64, q: i64, c: &[i64], d: u32) -> Complex<T> {
    let n = c.len();
    let qu = q as u64;
    let am = a.rem_euclid(q) as u64;
    let cm: Vec<u64> = c.iter().map(|&v| v.rem_euclid(q) as u64).collect();
    let mut hist = vec![0u64; q as usize];
    let mut r = vec![0u64; n];
    loop {
        let mut s = 0u64;
        let mut lin = 0u64;
        for k in 0..n {
            s = (s + r[k] * r[k] % qu) % qu;
            lin = (lin + cm[k] * r[k] % qu) % qu;
        }
        let ph = ((am as u128 * pow_mod(s, d, qu) as u128 + lin as u128) % qu as u128) as usize;
        hist[ph] += 1;
        let mut k = n;
        loop {
            if k == 0 {
                return hist_value::<T>(&hist) / from_int::<T>((qu as i128).pow(n as u32));
            }
            k -= 1;
            r[k] += 1;
            if r[k] < qu {
                break;
            }
            r[k] = 0;
        }
    }
}

/// Both evaluations of the major-arc correlation `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaValue<T: Real> {
    /// `sum_{b in [q_flat]^n} S(a/q, b/q_flat) conj(S(a'/q', b/q_flat)) e(w.b/q_flat)`.
    pub beta_form: Complex<T>,
    /// `(q'/q_flat)^-n sum_{u in [q'/q_flat]^n} S_xy(w + u q_flat)`.
    pub closed_form: Complex<T>,
    pub discrepancy: f64,
}

const KAPPA_TOL: f64 = 1e-9;

/// [`kappa_forms`] for many shifts `w` sharing one pair of fractions; the
/// Weyl sums of the first form are computed once.
pub fn kappa_forms_many<T: Real>(
    alpha: ReducedRational,
    alpha_prime: ReducedRational,
    ws: &[Vec<i64>],
    d: u32,
    n: usize,
) -> Result<Vec<KappaValue<T>>> {
    if d < 1 || n < 1 || ws.iter().any(|w| w.len() != n) {
        return Err(Error::invalid("need d >= 1, n >= 1 and w of length n"));
    }
    let (a, q) = (alpha.num(), alpha.den());
    let (a2, q2) = (alpha_prime.num(), alpha_prime.den());
    let g = gcd(q, q2);
    let cells = |m: i64| (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    check_budget("kappa beta form", cells(g).saturating_mul(cells(q) + cells(q2)), DEFAULT_TERM_BUDGET)?;
    check_budget("kappa closed form", cells(q2 / g).saturating_mul(cells(q)), DEFAULT_TERM_BUDGET)?;

    let bs = cartesian(&vec![(0..g).collect(); n]);
    let prods: Vec<Complex<T>> = bs
        .iter()
        .map(|b| {
            let c1: Vec<i64> = b.iter().map(|v| v * (q / g)).collect();
            let c2: Vec<i64> = b.iter().map(|v| v * (q2 / g)).collect();
            weyl_direct::<T>(a, q, &c1, d) * weyl_direct::<T>(a2, q2, &c2, d).conj()
        })
        .collect();
    let roots = unit_roots::<T>(g as u64);
    let norm = from_int::<T>(cells(q2 / g) as i128) * from_int::<T>(cells(q) as i128);

    let mut out = Vec::with_capacity(ws.len());
    for w in ws {
        let mut beta = CompensatedSum::new();
        for (b, p) in bs.iter().zip(&prods) {
            let wb: i128 = w.iter().zip(b).map(|(x, y)| (*x as i128) * (*y as i128)).sum();
            beta.add(*p * roots[wb.rem_euclid(g as i128) as usize]);
        }
        let beta_form = beta.value();
        let closed_form = hist_value::<T>(&sxy_histogram(a, q, a2, q2, w, d, g, q2 / g)) / norm;
        let discrepancy = (beta_form - closed_form).norm().to_f64().unwrap();
        if !(discrepancy <= KAPPA_TOL) {
            return Err(Error::Mismatch {
                what: "kappa forms",
                discrepancy,
                tolerance: KAPPA_TOL,
            });
        }
        out.push(KappaValue {
            beta_form,
            closed_form,
            discrepancy,
        });
    }
    Ok(out)
}

/// Both forms of `kappa` for arbitrary reduced `a/q`, `a'/q'`, with no
/// constraint tying the denominators to a scale. Fails with `Mismatch` when
/// the forms disagree by more than `1e-9`.
pub fn kappa_forms<T: Real>(
    alpha: ReducedRational,
    alpha_prime: ReducedRational,
    w: &[i64],
    d: u32,
    n: usize,
) -> Result<KappaValue<T>> {
    Ok(kappa_forms_many(alpha, alpha_prime, &[w.to_vec()], d, n)?[0])
}

/// `kappa` at scale `s`: both denominators must lie in `[2^(s-1), 2^s)`.
pub fn kappa<T: Real>(
    s: u32,
    alpha: ReducedRational,
    alpha_prime: ReducedRational,
    w: &[i64],
    d: u32,
    n: usize,
) -> Result<KappaValue<T>> {
    if !(1..=62).contains(&s) {
        return Err(Error::invalid("scale s must lie in 1..=62"));
    }
    let (lo, hi) = (1i64 << (s - 1), 1i64 << s);
    for q in [alpha.den(), alpha_prime.den()] {
        if q < lo || q >= hi {
            return Err(Error::invalid(format!("denominator {q} outside [2^{}, 2^{s})", s - 1)));
        }
    }
    kappa_forms(alpha, alpha_prime, w, d, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsums::complete_weyl_sum;
    use crate::rationals::{reduce, ArcPair};

    fn r(a: i64, q: i64) -> ReducedRational {
        reduce(a, q).unwrap()
    }

    #[test]
    fn kappa_trivial_cases() {
        let k = kappa::<f64>(1, r(0, 1), r(0, 1), &[5], 1, 1).unwrap();
        assert!((k.beta_form - 1.0).norm() < 1e-12);
        for (a, q) in [(1, 5), (3, 7), (2, 5)] {
            for d in [1, 2] {
                let k = kappa_forms::<f64>(r(a, q), r(a, q), &[2 * q, -q], d, 2).unwrap();
                assert!((k.closed_form - 1.0).norm() < 1e-10, "{a}/{q} d={d}");
            }
        }
    }

    #[test]
    fn coprime_denominators_give_one_term() {
        let k = kappa::<f64>(2, r(1, 2), r(1, 3), &[4], 2, 1).unwrap();
        let s1 = complete_weyl_sum::<f64>(&ArcPair::new(1, &[0], 2).unwrap(), 2).unwrap().value;
        let s2 = complete_weyl_sum::<f64>(&ArcPair::new(1, &[0], 3).unwrap(), 2).unwrap().value;
        assert!((k.beta_form - s1 * s2.conj()).norm() < 1e-12);
    }

    #[test]
    fn kappa_scale_is_checked() {
        assert!(kappa::<f64>(2, r(1, 5), r(1, 3), &[0], 1, 1).is_err());
    }

    #[test]
    fn s_xy_basics() {
        let v = s_xy::<f64>(3, 7, 3, 7, &[0, 0], 2, 2).unwrap();
        assert!((v - 1.0).norm() < 1e-12);
        let a = s_xy::<f64>(2, 5, 1, 3, &[2], 1, 1).unwrap();
        let b = s_xy::<f64>(2, 5, 1, 3, &[17], 1, 1).unwrap();
        assert!((a - b).norm() < 1e-12 && a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn tts_diagonal_is_real_and_hermitian() {
        let fam = KernelFamily::<f64>::hilbert(1);
        let lam = |_: &[i64]| 0.3;
        let v = tts_kernel(&fam, 3, &lam, &[2], &[2]).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-14);
        let a = tts_kernel(&fam, 3, &lam, &[1], &[-4]).unwrap();
        let b = tts_kernel(&fam, 3, &lam, &[-4], &[1]).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
        assert_eq!(tts_kernel(&fam, 3, &lam, &[33], &[0]).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn schur_of_identity() {
        let id = |x: &[i64], y: &[i64]| if x == y { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
        let w: Vec<Vec<i64>> = (-3..=3).map(|i| vec![i]).collect();
        assert_eq!(schur_bound::<f64>(&id, &w, &w), 1.0);
        assert!((power_bound::<f64>(&id, &w, 5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn batched_kappa_matches_single() {
        let (x, y) = (reduce(1, 6).unwrap(), reduce(3, 4).unwrap());
        let ws: Vec<Vec<i64>> = (-5..=5).map(|i| vec![i]).collect();
        let many = kappa_forms_many::<f64>(x, y, &ws, 2, 1).unwrap();
        for (w, k) in ws.iter().zip(&many) {
            assert_eq!(*k, kappa_forms::<f64>(x, y, w, 2, 1).unwrap());
        }
    }
}
