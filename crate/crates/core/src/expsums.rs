//! Complete Weyl sums
//! `S(a/q, b/q) = q^-n sum_{r in [q]^n} e(a |r|^(2d)/q + b.r/q)`,
//! region sums with polynomial phases, and the orthogonality and decay
//! sweeps built on them.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{check_budget, Error, Result};
use crate::fft::fft_nd;
use crate::rationals::{gcd, gcd_all, ArcPair};
use crate::scalar::{frac_product, from_int, CompensatedSum, Real};

/// Default number of elementary terms a single evaluation may touch.
pub const DEFAULT_TERM_BUDGET: u128 = 1_000_000_000;

/// A complete Weyl sum with its bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylSumResult<T: Real> {
    pub value: Complex<T>,
    pub q: u64,
    /// Number of summands, `q^n`.
    pub terms: u128,
}

/// Table of `e(k/q)` for `k in [q]`, using the representative of `k/q`
/// closest to zero so the argument reduction is exact.
pub fn unit_roots<T: Real>(q: u64) -> Vec<Complex<T>> {
    let qi = q as i128;
    (0..qi)
        .map(|k| {
            let k = if 2 * k > qi { k - qi } else { k };
            let t = from_int::<T>(k) / from_int::<T>(qi);
            let (s, c) = (T::TAU() * t).sin_cos();
            Complex::new(c, s)
        })
        .collect()
}

/// `x^e mod m` for small moduli.
#[inline]
pub fn pow_mod(x: u64, e: u32, m: u64) -> u64 {
    let m = m as u128;
    let mut base = x as u128 % m;
    let mut acc = 1u128 % m;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc as u64
}

fn term_count(q: u64, n: usize) -> Result<u128> {
    (q as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Overflow(format!("{q}^{n} terms")))
}

/// Sums `weight * e(k/q)` over a residue histogram in ascending `k`.
fn histogram_sum<T: Real>(counts: &[u64], q: u64) -> Complex<T> {
    let roots = unit_roots::<T>(q);
    let mut acc = CompensatedSum::new();
    for (c, z) in counts.iter().zip(&roots) {
        if *c != 0 {
            acc.add(*z * from_int::<T>(*c as i128));
        }
    }
    acc.value()
}

/// Residue histogram of a phase `r -> (a |r|^(2d) + b.r) mod q` over
/// `r in [q]^n`. Counts are exact, so the result does not depend on how the
/// outer coordinate is split across workers.
fn phase_histogram(a: u64, b: &[u64], q: u64, d: u32) -> Vec<u64> {
    let n = b.len();
    let qm = q as u128;
    let sq: Vec<u64> = (0..q).map(|r| ((r as u128 * r as u128) % qm) as u64).collect();
    let outer: Vec<u64> = (0..q).collect();
    outer
        .par_iter()
        .fold(
            || vec![0u64; q as usize],
            |mut hist, &r0| {
                let mut idx = vec![0u64; n];
                idx[0] = r0;
                loop {
                    let mut norm2 = 0u64;
                    let mut lin = 0u128;
                    for k in 0..n {
                        norm2 = (norm2 + sq[idx[k] as usize]) % q;
                        lin += b[k] as u128 * idx[k] as u128;
                    }
                    let p = pow_mod(norm2, d, q) as u128;
                    let phase = ((a as u128 * p + lin) % qm) as usize;
                    hist[phase] += 1;
                    // advance trailing coordinates
                    let mut k = n;
                    loop {
                        if k == 1 {
                            k = 0;
                            break;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < q {
                            break;
                        }
                        idx[k] = 0;
                    }
                    if k == 0 {
                        break;
                    }
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; q as usize],
            |mut x, y| {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
                x
            },
        )
}

/// Direct evaluation by exact residue counting.
pub fn weyl_sum_direct<T: Real>(pair: &ArcPair, d: u32, budget: u128) -> Result<WeylSumResult<T>> {
    let q = pair.q() as u64;
    let n = pair.n();
    let terms = term_count(q, n)?;
    check_budget("complete Weyl sum", terms, budget)?;
    let b: Vec<u64> = pair.b().iter().map(|&x| x as u64).collect();
    let hist = phase_histogram(pair.a() as u64, &b, q, d);
    let scale = from_int::<T>(q as i128).powi(-(n as i32));
    Ok(WeylSumResult {
        value: histogram_sum::<T>(&hist, q) * scale,
        q,
        terms,
    })
}

/// One-dimensional quadratic sum `q^-1 sum_r e((a r^2 + b r)/q)`.
fn gauss_1d<T: Real>(a: u64, b: u64, q: u64) -> Complex<T> {
    let qm = q as u128;
    let mut hist = vec![0u64; q as usize];
    for r in 0..q as u128 {
        let ph = (a as u128 * (r * r % qm) + b as u128 * r) % qm;
        hist[ph as usize] += 1;
    }
    histogram_sum::<T>(&hist, q) / from_int::<T>(q as i128)
}

/// The `d = 1` sum as a product of `n` one-dimensional quadratic sums.
pub fn weyl_sum_gauss<T: Real>(pair: &ArcPair) -> Complex<T> {
    let q = pair.q() as u64;
    let a = pair.a() as u64;
    pair.b()
        .iter()
        .fold(Complex::new(T::one(), T::zero()), |acc, &b| acc * gauss_1d::<T>(a, b as u64, q))
}

/// `S(a/q, b/q)` for a canonical pair, using the factorised path when `d = 1`.
pub fn complete_weyl_sum<T: Real>(pair: &ArcPair, d: u32) -> Result<WeylSumResult<T>> {
    complete_weyl_sum_with_budget(pair, d, DEFAULT_TERM_BUDGET)
}

pub fn complete_weyl_sum_with_budget<T: Real>(
    pair: &ArcPair,
    d: u32,
    budget: u128,
) -> Result<WeylSumResult<T>> {
    if d < 1 {
        return Err(Error::invalid("degree d must be at least one"));
    }
    let q = pair.q() as u64;
    let n = pair.n();
    let terms = term_count(q, n)?;
    if d == 1 {
        check_budget("complete Weyl sum", (q as u128) * n as u128, budget)?;
        return Ok(WeylSumResult {
            value: weyl_sum_gauss(pair),
            q,
            terms,
        });
    }
    weyl_sum_direct(pair, d, budget)
}

/// `S(a/q, b/q)` for every `b in [q]^n` at once, by an `n`-dimensional
/// inverse DFT of `r -> e(a |r|^(2d)/q)`. Output is row-major in `b`.
pub fn weyl_sums_all_b<T: Real>(a: u64, q: u64, d: u32, n: usize, budget: u128) -> Result<Vec<Complex<T>>> {
    let terms = term_count(q, n)?;
    check_budget("Weyl sum batch", terms, budget)?;
    let roots = unit_roots::<T>(q);
    let qs = q as usize;
    let sq: Vec<u64> = (0..q).map(|r| ((r as u128 * r as u128) % q as u128) as u64).collect();
    let mut data = Vec::with_capacity(terms as usize);
    let mut idx = vec![0usize; n];
    for _ in 0..terms {
        let norm2 = idx.iter().fold(0u64, |acc, &r| (acc + sq[r]) % q);
        let ph = (a as u128 * pow_mod(norm2, d, q) as u128 % q as u128) as usize;
        data.push(roots[ph]);
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < qs {
                break;
            }
            idx[k] = 0;
        }
    }
    fft_nd(&mut data, &vec![qs; n], FftDirection::Inverse);
    let scale = from_int::<T>(q as i128).powi(-(n as i32));
    for z in data.iter_mut() {
        *z *= scale;
    }
    Ok(data)
}

/// Lexicographic list of all `b in [q]^n`.
fn all_b(q: u64, n: usize) -> Vec<Vec<i64>> {
    let axis: Vec<i64> = (0..q as i64).collect();
    crate::rationals::cartesian(&vec![axis; n])
}

/// Outcome of the orthogonality sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityReport {
    /// Number of canonical pairs with `gcd(a, q) > 1` and joint gcd one.
    pub cases: u64,
    /// Largest `|S|` over those pairs.
    pub max_abs: f64,
    /// Pairs `(a, b, q)` whose `|S|` exceeded the tolerance.
    pub violations: Vec<(i64, Vec<i64>, i64)>,
}

impl OrthogonalityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `S = 0` for every canonical pair with `q <= q_max`,
/// `gcd(a, b, q) = 1` and `gcd(a, q) > 1`.
pub fn verify_orthogonality(q_max: u64, d: u32, n: usize, tol: f64) -> Result<OrthogonalityReport> {
    if q_max < 1 || n < 1 || d < 1 {
        return Err(Error::invalid("q_max, d and n must be positive"));
    }
    let work: Vec<(u64, u64)> = (1..=q_max)
        .flat_map(|q| (0..q).filter(move |&a| gcd(a as i64, q as i64) > 1).map(move |a| (q, a)))
        .collect();
    let partial: Vec<Result<(u64, f64, Vec<(i64, Vec<i64>, i64)>)>> = work
        .par_iter()
        .map(|&(q, a)| {
            let sums = weyl_sums_all_b::<f64>(a, q, d, n, DEFAULT_TERM_BUDGET)?;
            let mut cases = 0;
            let mut max_abs = 0.0f64;
            let mut bad = Vec::new();
            for (b, s) in all_b(q, n).into_iter().zip(sums) {
                if gcd_all(std::iter::once(a as i64).chain(b.iter().copied()).chain([q as i64])) != 1 {
                    continue;
                }
                cases += 1;
                let m = s.norm();
                max_abs = max_abs.max(m);
                if m > tol {
                    bad.push((a as i64, b, q as i64));
                }
            }
            Ok((cases, max_abs, bad))
        })
        .collect();
    let mut report = OrthogonalityReport {
        cases: 0,
        max_abs: 0.0,
        violations: Vec::new(),
    };
    for p in partial {
        let (c, m, bad) = p?;
        report.cases += c;
        report.max_abs = report.max_abs.max(m);
        report.violations.extend(bad);
    }
    Ok(report)
}

/// Per-`q` maxima and the fitted decay exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of `log M(q) = -delta log q` (no intercept).
    pub delta_hat: f64,
    /// Slope of the fit with a free intercept, reported for comparison.
    pub delta_affine: f64,
    /// `(q, M(q))` with `M(q) = max |S(a/q, b/q)|` over `gcd(a, q) = 1`.
    pub table: Vec<(u64, f64)>,
}

/// `M(q)` for a single denominator.
pub fn max_weyl_modulus(q: u64, d: u32, n: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for a in 0..q {
        if gcd(a as i64, q as i64) != 1 {
            continue;
        }
        let sums = weyl_sums_all_b::<f64>(a, q, d, n, DEFAULT_TERM_BUDGET)?;
        for s in sums {
            best = best.max(s.norm());
        }
    }
    Ok(best)
}

/// Tabulates `M(q)` for `2 <= q <= q_max` and fits the decay exponent.
pub fn fit_decay_exponent(q_max: u64, d: u32, n: usize) -> Result<DecayFit> {
    if q_max < 8 {
        return Err(Error::invalid("q_max must be at least 8"));
    }
    let qs: Vec<u64> = (2..=q_max).collect();
    let ms: Vec<Result<f64>> = qs.par_iter().map(|&q| max_weyl_modulus(q, d, n)).collect();
    let mut table = Vec::with_capacity(qs.len());
    for (q, m) in qs.into_iter().zip(ms) {
        table.push((q, m?));
    }
    let xs: Vec<f64> = table.iter().map(|&(q, _)| (q as f64).ln()).collect();
    let ys: Vec<f64> = table.iter().map(|&(_, m)| m.max(f64::MIN_POSITIVE).ln()).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let delta_hat = -sxy / sxx;
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(DecayFit {
        delta_hat,
        delta_affine: -cov / var,
        table,
    })
}

/// A bounded lattice region for [`weyl_sum_region`].
pub struct Region {
    lo: Vec<i64>,
    hi: Vec<i64>,
    contains: Box<dyn Fn(&[i64]) -> bool + Send + Sync>,
}

impl Region {
    /// The box `prod [lo_k, hi_k]`.
    pub fn cube(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        Self {
            lo,
            hi,
            contains: Box::new(|_| true),
        }
    }

    /// The closed Euclidean ball of radius `r` about the origin.
    pub fn ball(n: usize, r: f64) -> Self {
        let k = r.floor() as i64;
        let r2 = r * r;
        Self {
            lo: vec![-k; n],
            hi: vec![k; n],
            contains: Box::new(move |x| x.iter().map(|&v| (v * v) as f64).sum::<f64>() <= r2),
        }
    }

    /// A region given by a membership test inside a bounding box.
    pub fn custom(
        lo: Vec<i64>,
        hi: Vec<i64>,
        contains: impl Fn(&[i64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            lo,
            hi,
            contains: Box::new(contains),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// `sum_{x in Z^n cap omega} e(P(xi; x)) phi(x)` with
/// `P(xi; x) = sum_alpha xi_alpha x^alpha`, by direct summation.
///
/// Monomial phases are reduced modulo one exactly before accumulation, so
/// integer shifts of a coefficient leave the sum unchanged.
pub fn weyl_sum_region<T: Real>(
    coeffs: &BTreeMap<Vec<u32>, T>,
    radius: T,
    cutoff: &(dyn Fn(&[T]) -> T + Sync),
    region: &Region,
    budget: u128,
) -> Result<Complex<T>> {
    let n = region.dim();
    if coeffs.keys().any(|k| k.len() != n) {
        return Err(Error::invalid("multi-index length differs from the region dimension"));
    }
    let big = (radius * crate::scalar::lit(100.0)).to_f64().unwrap_or(f64::INFINITY);
    for k in 0..n {
        if (region.lo[k] as f64) < -big || (region.hi[k] as f64) > big {
            return Err(Error::invalid("region exceeds the ball of radius 100 R"));
        }
    }
    let mut count: u128 = 1;
    for k in 0..n {
        let w = (region.hi[k] - region.lo[k] + 1).max(0) as u128;
        count = count.saturating_mul(w);
    }
    check_budget("region Weyl sum", count, budget)?;
    if count == 0 {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let terms: Vec<(&Vec<u32>, T)> = coeffs.iter().map(|(k, v)| (k, *v)).collect();
    let first: Vec<i64> = (region.lo[0]..=region.hi[0]).collect();
    let parts: Vec<CompensatedSum<T>> = first
        .par_iter()
        .map(|&x0| {
            let mut acc = CompensatedSum::new();
            let mut x: Vec<i64> = region.lo.clone();
            x[0] = x0;
            let mut xt = vec![T::zero(); n];
            loop {
                if (region.contains)(&x) {
                    let mut phase = T::zero();
                    for (alpha, c) in &terms {
                        let mono = alpha
                            .iter()
                            .zip(&x)
                            .fold(1i128, |m, (&e, &v)| m * (v as i128).pow(e));
                        phase += frac_product(*c, mono);
                    }
                    for (t, &v) in xt.iter_mut().zip(&x) {
                        *t = from_int(v as i128);
                    }
                    acc.add(crate::scalar::e_turns(phase) * cutoff(&xt));
                }
                let mut k = n;
                let mut done = true;
                while k > 1 {
                    k -= 1;
                    x[k] += 1;
                    if x[k] <= region.hi[k] {
                        done = false;
                        break;
                    }
                    x[k] = region.lo[k];
                }
                if done {
                    break;
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: i64, b: &[i64], q: i64) -> ArcPair {
        ArcPair::new(a, b, q).unwrap()
    }

    #[test]
    fn hand_values() {
        let s = complete_weyl_sum::<f64>(&ArcPair::origin(1), 1).unwrap();
        assert!((s.value - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let s = complete_weyl_sum::<f64>(&pair(1, &[0], 2), 1).unwrap();
        assert!(s.value.norm() < 1e-15);
        let s = complete_weyl_sum::<f64>(&pair(1, &[0], 3), 1).unwrap();
        assert!((s.value.norm() - 3f64.powf(-0.5)).abs() < 1e-15);
        let s = complete_weyl_sum::<f64>(&pair(2, &[1], 4), 1).unwrap();
        assert!(s.value.norm() < 1e-15);
        assert_eq!(s.terms, 4);
    }

    #[test]
    fn gauss_path_matches_direct() {
        for q in [5i64, 12, 31] {
            for n in 1..=3usize {
                if (q as u128).pow(n as u32) > 40_000 {
                    continue;
                }
                let b: Vec<i64> = (0..n as i64).map(|k| (3 * k + 1) % q).collect();
                let p = pair(1, &b, q);
                let fast = weyl_sum_gauss::<f64>(&p);
                let slow = weyl_sum_direct::<f64>(&p, 1, DEFAULT_TERM_BUDGET).unwrap().value;
                assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1e-3));
            }
        }
    }

    #[test]
    fn batch_matches_single() {
        let (a, q, d, n) = (3u64, 7u64, 2u32, 2usize);
        let all = weyl_sums_all_b::<f64>(a, q, d, n, DEFAULT_TERM_BUDGET).unwrap();
        for (b, s) in all_b(q, n).into_iter().zip(all) {
            let p = pair(a as i64, &b, q as i64);
            let direct = weyl_sum_direct::<f64>(&p, d, DEFAULT_TERM_BUDGET).unwrap().value;
            assert!((direct - s).norm() < 1e-13);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = pair(1, &[0, 0], 101);
        let e = weyl_sum_direct::<f64>(&p, 2, 100).unwrap_err();
        assert!(e.is_budget());
    }

    #[test]
    fn orthogonality_small() {
        let r = verify_orthogonality(20, 1, 1, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.cases > 0);
        // prime q: only a = 0 contributes, with b != 0
        let r7 = verify_orthogonality(7, 2, 1, 1e-9).unwrap();
        assert!(r7.passed());
    }

    #[test]
    fn region_lattice_count() {
        let coeffs = BTreeMap::new();
        let one = |_: &[f64]| 1.0;
        let r = Region::cube(vec![-5], vec![5]);
        let v = weyl_sum_region(&coeffs, 5.3, &one, &r, 1_000_000).unwrap();
        assert!((v - Complex::new(11.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn f32_sum_is_close() {
        let p = pair(2, &[1], 9);
        let a = complete_weyl_sum::<f32>(&p, 2).unwrap().value;
        let b = complete_weyl_sum::<f64>(&p, 2).unwrap().value;
        assert!(((a.re as f64 - b.re).powi(2) + (a.im as f64 - b.im).powi(2)).sqrt() < 1e-5);
    }
}
