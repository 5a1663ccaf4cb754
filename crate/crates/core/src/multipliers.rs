//! Lattice multipliers `m_{j,lambda}(xi) = sum_y e(lambda |y|^(2d) + xi.y) K_j(y)`,
//! their major-arc pieces `L^s_{j,lambda}`, the error `E_{j,lambda}`, and the
//! arc-localised operators `L_{s,alpha}[m]`, `L#_s[m]`.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{check_budget, Error, Result};
use crate::expsums::{complete_weyl_sum, weyl_sum_direct, DEFAULT_TERM_BUDGET};
use crate::fft::fft_nd;
use crate::kernels::KernelFamily;
use crate::oscint::{in_phi_star_window, phi, QuadratureSpec};
use crate::rationals::{cartesian, gcd, gcd_all, in_mj, in_xj, window_numerators, ArcPair, ArcParams, ReducedRational};
use crate::scalar::{e_turns, frac_product, from_int, lit, norm, wrap_turns, CompensatedSum, Real};
use crate::smooth::plateau;

/// Default number of lattice points a multiplier evaluation may touch.
pub const DEFAULT_LATTICE_BUDGET: u128 = 100_000_000;

/// A multiplier handle: a function of `xi`.
pub type MultiplierFn<'a, T> = &'a (dyn Fn(&[T]) -> Complex<T> + Sync);

/// Cutoffs `chi_s(xi) = chi(2^(10s) xi)` and `chi~_s(xi) = chi~(2^(10s) xi)`.
///
/// `chi` is one on `|xi| <= sqrt(n)/4` (hence on `[-1/4, 1/4]^n`) and vanishes
/// for `|xi| >= 1/2`; `chi~` is one on `|xi| <= 1/2` and vanishes for `|xi| >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec<T: Real> {
    pub s: u32,
    pub n: usize,
    chi_inner: T,
    chi_outer: T,
    tilde_inner: T,
    tilde_outer: T,
}

impl<T: Real> CutoffSpec<T> {
    pub fn new(s: u32, n: usize) -> Result<Self> {
        if s < 1 {
            return Err(Error::invalid("s must be at least one"));
        }
        if !(1..=3).contains(&n) {
            // a radial chi equal to one on [-1/4,1/4]^n needs sqrt(n)/4 < 1/2
            return Err(Error::invalid("cutoffs exist only for n <= 3"));
        }
        Ok(Self {
            s,
            n,
            chi_inner: lit::<T>((n as f64).sqrt() / 4.0),
            chi_outer: lit(0.5),
            tilde_inner: lit(0.5),
            tilde_outer: T::one(),
        })
    }

    /// Cutoffs with arbitrary profile radii, without checking the nesting
    /// `chi~ = 1 on supp chi`. Used to inject faults.
    pub fn with_radii_unchecked(s: u32, n: usize, chi: (T, T), tilde: (T, T)) -> Self {
        Self {
            s,
            n,
            chi_inner: chi.0,
            chi_outer: chi.1,
            tilde_inner: tilde.0,
            tilde_outer: tilde.1,
        }
    }

    /// The same profiles at another scale `s`.
    pub fn at_scale(&self, s: u32) -> Self {
        Self { s, ..*self }
    }

    fn dilation(&self) -> T {
        lit::<T>(2.0).powi(10 * self.s as i32)
    }

    pub fn chi(&self, xi: &[T]) -> T {
        plateau(norm(xi), self.chi_inner, self.chi_outer)
    }

    pub fn chi_tilde(&self, xi: &[T]) -> T {
        plateau(norm(xi), self.tilde_inner, self.tilde_outer)
    }

    pub fn chi_s(&self, xi: &[T]) -> T {
        plateau(norm(xi) * self.dilation(), self.chi_inner, self.chi_outer)
    }

    pub fn chi_tilde_s(&self, xi: &[T]) -> T {
        plateau(norm(xi) * self.dilation(), self.tilde_inner, self.tilde_outer)
    }

    /// Radius beyond which `chi_s` vanishes.
    pub fn chi_s_radius(&self) -> T {
        self.chi_outer / self.dilation()
    }

    /// Radius beyond which `chi~_s` vanishes.
    pub fn chi_tilde_s_radius(&self) -> T {
        self.tilde_outer / self.dilation()
    }
}

/// Sampled values of a periodic multiplier at `xi = k/N`, `k in [N]^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierGrid<T: Real> {
    pub n: usize,
    pub size: usize,
    pub j: i64,
    pub lambda: f64,
    pub kind: String,
    /// Row-major, last axis fastest.
    pub values: Vec<Complex<T>>,
}

impl<T: Real> MultiplierGrid<T> {
    /// Writes the flat binary layout: `u64 n, u64 N, i64 j, f64 lambda`, then
    /// interleaved real and imaginary parts, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, self.n as u64, self.size as u64, self.j, self.lambda)?;
        write_payload(&mut w, &self.values)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let (n, size, j, lambda) = read_header(&mut r)?;
        let count = (size as u128)
            .checked_pow(n as u32)
            .filter(|c| *c <= 1 << 32)
            .ok_or_else(|| Error::Format("grid header describes an oversized grid".into()))?;
        let values = read_payload(&mut r, count as usize)?;
        Ok(Self {
            n: n as usize,
            size: size as usize,
            j,
            lambda,
            kind: "m".into(),
            values,
        })
    }

    /// CSV with columns `k_0..k_{n-1}, xi_0..xi_{n-1}, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut head: Vec<String> = (0..self.n).map(|k| format!("k{k}")).collect();
        head.extend((0..self.n).map(|k| format!("xi{k}")));
        head.push("re".into());
        head.push("im".into());
        writeln!(w, "{}", head.join(","))?;
        let dims = vec![self.size; self.n];
        let mut idx = vec![0usize; self.n];
        for (f, v) in self.values.iter().enumerate() {
            crate::fft::unflat_index(f, &dims, &mut idx);
            let mut row: Vec<String> = idx.iter().map(|k| k.to_string()).collect();
            row.extend(idx.iter().map(|&k| fmt_f64(k as f64 / self.size as f64)));
            row.push(fmt_f64(v.re.to_f64().unwrap()));
            row.push(fmt_f64(v.im.to_f64().unwrap()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// A float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_header<W: Write>(w: &mut W, n: u64, size: u64, j: i64, lambda: f64) -> Result<()> {
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&size.to_le_bytes())?;
    w.write_all(&j.to_le_bytes())?;
    w.write_all(&lambda.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_header<R: Read>(r: &mut R) -> Result<(u64, u64, i64, f64)> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b);
    r.read_exact(&mut b)?;
    let size = u64::from_le_bytes(b);
    r.read_exact(&mut b)?;
    let j = i64::from_le_bytes(b);
    r.read_exact(&mut b)?;
    let lambda = f64::from_le_bytes(b);
    if n == 0 || n > 16 {
        return Err(Error::Format(format!("bad dimension {n} in header")));
    }
    Ok((n, size, j, lambda))
}

pub(crate) fn write_payload<W: Write, T: Real>(w: &mut W, values: &[Complex<T>]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_f64().unwrap().to_le_bytes());
        buf.extend_from_slice(&v.im.to_f64().unwrap().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_payload<R: Read, T: Real>(r: &mut R, count: usize) -> Result<Vec<Complex<T>>> {
    let mut buf = vec![0u8; count * 16];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex::new(lit(re), lit(im))
        })
        .collect())
}

/// `|y|^(2d)` for an integer point.
#[inline]
pub(crate) fn norm_pow(y: &[i64], d: u32) -> i128 {
    let r2: i128 = y.iter().map(|&v| v as i128 * v as i128).sum();
    r2.pow(d)
}

/// Modulated kernel samples `e(lambda |y|^(2d)) K_j(y)` on the support box.
pub fn modulated_kernel_box<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    budget: u128,
) -> Result<(i64, Vec<Complex<T>>)> {
    let (h, mut vals) = fam.lattice_box(j, budget)?;
    let n = fam.n();
    let side = (2 * h + 1) as usize;
    let dims = vec![side; n];
    let mut idx = vec![0usize; n];
    let mut y = vec![0i64; n];
    for (f, v) in vals.iter_mut().enumerate() {
        if *v == Complex::new(T::zero(), T::zero()) {
            continue;
        }
        crate::fft::unflat_index(f, &dims, &mut idx);
        for k in 0..n {
            y[k] = idx[k] as i64 - h;
        }
        *v *= e_turns(frac_product(lambda, norm_pow(&y, fam.d())));
    }
    Ok((h, vals))
}

/// `m_{j,lambda}(xi)` by direct summation over the lattice, in lexicographic
/// order with compensated accumulation.
pub fn m_lattice<T: Real>(fam: &KernelFamily<T>, j: u32, lambda: T, xi: &[T], budget: u128) -> Result<Complex<T>> {
    if xi.len() != fam.n() {
        return Err(Error::invalid("xi has the wrong dimension"));
    }
    let h = KernelFamily::<T>::support_radius(j);
    let n = fam.n();
    let count = ((2 * h + 1) as u128).pow(n as u32);
    check_budget("lattice multiplier", count, budget)?;
    let d = fam.d();
    let mut acc = CompensatedSum::new();
    let mut y = vec![-h; n];
    for _ in 0..count {
        let k = fam.piece_at(j, &y);
        if k != Complex::new(T::zero(), T::zero()) {
            let mut t = frac_product(lambda, norm_pow(&y, d));
            for (x, &v) in xi.iter().zip(&y) {
                t += frac_product(*x, v as i128);
            }
            acc.add(k * e_turns(t));
        }
        for a in (0..n).rev() {
            y[a] += 1;
            if y[a] <= h {
                break;
            }
            y[a] = -h;
        }
    }
    Ok(acc.value())
}

/// `m_{j,lambda}(k/N)` for all `k in [N]^n` by one FFT of the modulated kernel.
pub fn m_grid<T: Real>(fam: &KernelFamily<T>, j: u32, lambda: T, size: usize, budget: u128) -> Result<MultiplierGrid<T>> {
    if !size.is_power_of_two() {
        return Err(Error::invalid(format!("grid size {size} is not a power of two")));
    }
    if (size as u128) < (1u128 << (j + 3)) {
        return Err(Error::invalid(format!(
            "grid size {size} is below 2^(j+3) = {}",
            1u128 << (j + 3)
        )));
    }
    let n = fam.n();
    let total = (size as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Overflow("grid size".into()))?;
    check_budget("multiplier grid", total, budget)?;
    let (h, vals) = modulated_kernel_box(fam, j, lambda, budget)?;
    let side = (2 * h + 1) as usize;
    let mut data = vec![Complex::new(T::zero(), T::zero()); total as usize];
    let box_dims = vec![side; n];
    let dims = vec![size; n];
    let mut idx = vec![0usize; n];
    let mut tgt = vec![0usize; n];
    for (f, v) in vals.iter().enumerate() {
        crate::fft::unflat_index(f, &box_dims, &mut idx);
        for k in 0..n {
            tgt[k] = (idx[k] as i64 - h).rem_euclid(size as i64) as usize;
        }
        data[crate::fft::flat_index(&tgt, &dims)] = *v;
    }
    fft_nd(&mut data, &dims, FftDirection::Inverse);
    Ok(MultiplierGrid {
        n,
        size,
        j: j as i64,
        lambda: lambda.to_f64().unwrap(),
        kind: "m".into(),
        values: data,
    })
}

/// Outcome of [`approx_error`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxError<T: Real> {
    pub err: Complex<T>,
    /// `|err| / (q delta)`.
    pub bound_ratio: f64,
    /// Smallest admissible `delta`.
    pub delta: f64,
    /// `|lambda - a/q|` and `|xi - b/q|` with the nearest integer translates.
    pub nu: f64,
    pub eta: f64,
}

/// Offsets of `(lambda, xi)` from the nearest translate of `(a/q, b/q)`.
pub fn arc_offsets<T: Real>(pair: &ArcPair, lambda: T, xi: &[T]) -> (T, Vec<T>) {
    let q = from_int::<T>(pair.q() as i128);
    let nu = wrap_turns(lambda - from_int::<T>(pair.a() as i128) / q);
    let eta = xi
        .iter()
        .zip(pair.b())
        .map(|(&x, &b)| wrap_turns(x - from_int::<T>(b as i128) / q))
        .collect();
    (nu, eta)
}

/// Smallest `delta >= 2^-j` with `|nu| <= delta 2^(-(2d-1)j)` and `|eta| <= delta`.
pub fn admissible_delta(j: u32, d: u32, nu: f64, eta: f64) -> f64 {
    let jf = j as f64;
    (nu.abs() * ((2.0 * d as f64 - 1.0) * jf).exp2())
        .max(eta)
        .max((-jf).exp2())
}

/// `m_{j,lambda}(xi) - S(a/q, b/q) Phi_{j, lambda - a/q}(xi - b/q)`.
pub fn approx_error<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    pair: &ArcPair,
    lambda: T,
    xi: &[T],
    quad: &QuadratureSpec,
) -> Result<ApproxError<T>> {
    if pair.n() != fam.n() || xi.len() != fam.n() {
        return Err(Error::invalid("dimension mismatch"));
    }
    if j < 2 || (pair.q() as u128) > (1u128 << (j - 2)) {
        return Err(Error::invalid(format!("need q <= 2^(j-2), got q = {} at j = {j}", pair.q())));
    }
    let (nu, eta) = arc_offsets(pair, lambda, xi);
    let nu_f = nu.to_f64().unwrap();
    let eta_f = norm(&eta).to_f64().unwrap();
    let delta = admissible_delta(j, fam.d(), nu_f, eta_f);
    if delta >= 1.0 {
        return Err(Error::invalid(format!(
            "(lambda, xi) is not within an admissible distance of the pair (delta = {delta})"
        )));
    }
    let m = m_lattice(fam, j, lambda, xi, DEFAULT_LATTICE_BUDGET)?;
    let s = complete_weyl_sum::<T>(pair, fam.d())?.value;
    let p = phi(fam, j, nu, &eta, quad)?;
    let err = m - s * p;
    Ok(ApproxError {
        err,
        bound_ratio: err.norm().to_f64().unwrap() / (pair.q() as f64 * delta),
        delta,
        nu: nu_f.abs(),
        eta: eta_f,
    })
}

/// Integer vectors `b` with `|xi - b/q| <= radius` (Euclidean).
fn window_vectors(xi: &[f64], radius: f64, q: i64) -> Vec<Vec<i64>> {
    let axes: Vec<Vec<i64>> = xi.iter().map(|&x| window_numerators(x, radius, q).collect()).collect();
    if axes.iter().any(|a| a.is_empty()) {
        return Vec::new();
    }
    cartesian(&axes)
        .into_iter()
        .filter(|b| {
            let d2: f64 = xi
                .iter()
                .zip(b)
                .map(|(&x, &bk)| {
                    let t = x.mul_add(q as f64, -(bk as f64)) / q as f64;
                    t * t
                })
                .sum();
            d2.sqrt() <= radius
        })
        .collect()
}

fn to_f64_vec<T: Real>(xi: &[T]) -> Vec<f64> {
    xi.iter().map(|v| v.to_f64().unwrap()).collect()
}

/// `xi - b/q` computed coordinatewise with one rounding per coordinate.
fn offset<T: Real>(xi: &[T], b: &[i64], q: i64) -> Vec<T> {
    let qt = from_int::<T>(q as i128);
    xi.iter()
        .zip(b)
        .map(|(&x, &bk)| (x * qt - from_int::<T>(bk as i128)) / qt)
        .collect()
}

fn weyl_value<T: Real>(a: i64, b: &[i64], q: i64, d: u32) -> Result<Complex<T>> {
    let pair = ArcPair::new(a, b, q)?;
    if d == 1 {
        Ok(complete_weyl_sum::<T>(&pair, d)?.value)
    } else {
        Ok(weyl_sum_direct::<T>(&pair, d, DEFAULT_TERM_BUDGET)?.value)
    }
}

/// A single evaluation of `L^s_{j,lambda}(xi)` with the number of pairs
/// whose cutoff factor `1_{window} chi_s` is non-zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSum<T: Real> {
    pub value: Complex<T>,
    pub terms: usize,
}

/// `L^s_{j,lambda}(xi) = sum_{(alpha,beta) in R_s} S(alpha,beta)
/// Phi*_{j,lambda-alpha}(xi-beta) chi_s(xi-beta)`, over the pairs whose
/// windows contain `(lambda, xi)`.
#[allow(clippy::too_many_arguments)]
pub fn l_sj<T: Real>(
    fam: &KernelFamily<T>,
    s: u32,
    j: u32,
    lambda: T,
    xi: &[T],
    params: &ArcParams,
    cut: &CutoffSpec<T>,
    quad: &QuadratureSpec,
) -> Result<ArcSum<T>> {
    if s < 1 || s > params.xj_scale(j) {
        return Err(Error::invalid(format!("need 1 <= s <= eps1 j, got s = {s}, j = {j}")));
    }
    if s > 40 {
        return Err(Error::Overflow("denominator range".into()));
    }
    let cut = cut.at_scale(s);
    let lam = lambda.to_f64().unwrap();
    let xif = to_f64_vec(xi);
    let wl = params.xj_radius(j);
    let wx = cut.chi_s_radius().to_f64().unwrap();
    let d = fam.d();
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for q in (1i64 << (s - 1))..(1i64 << s) {
        let a_list: Vec<i64> = window_numerators(lam, wl, q).collect();
        if a_list.is_empty() {
            continue;
        }
        for b in window_vectors(&xif, wx, q) {
            let eta = offset(xi, &b, q);
            let c = cut.chi_s(&eta);
            if c == T::zero() {
                continue;
            }
            for &a in &a_list {
                if gcd_all(std::iter::once(a).chain(b.iter().copied()).chain([q])) != 1 {
                    continue;
                }
                let qt = from_int::<T>(q as i128);
                let nu = (lambda * qt - from_int::<T>(a as i128)) / qt;
                if !in_phi_star_window(nu.to_f64().unwrap(), j, d, params.eps1) {
                    continue;
                }
                terms += 1;
                let sv = weyl_value::<T>(a, &b, q, d)?;
                if sv.norm() == T::zero() {
                    continue;
                }
                acc.add(sv * phi(fam, j, nu, &eta, quad)? * c);
            }
        }
    }
    Ok(ArcSum {
        value: acc.value(),
        terms,
    })
}

/// `L_{j,lambda}(xi) = sum_{1 <= s <= eps1 j} L^s_{j,lambda}(xi)`.
#[allow(clippy::too_many_arguments)]
pub fn l_j<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    xi: &[T],
    params: &ArcParams,
    cut: &CutoffSpec<T>,
    quad: &QuadratureSpec,
) -> Result<ArcSum<T>> {
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for s in 1..=params.xj_scale(j) {
        let v = l_sj(fam, s, j, lambda, xi, params, cut, quad)?;
        acc.add(v.value);
        terms += v.terms;
    }
    Ok(ArcSum {
        value: acc.value(),
        terms,
    })
}

/// Components of `E_{j,lambda}(xi) = m_{j,lambda}(xi) 1_{X_j}(lambda) - L_{j,lambda}(xi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorTerm<T: Real> {
    pub value: Complex<T>,
    pub m: Complex<T>,
    pub l: Complex<T>,
    pub in_xj: bool,
    pub terms: usize,
}

/// `E_{j,lambda}(xi)`.
#[allow(clippy::too_many_arguments)]
pub fn e_j<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    xi: &[T],
    params: &ArcParams,
    cut: &CutoffSpec<T>,
    quad: &QuadratureSpec,
    budget: u128,
) -> Result<ErrorTerm<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    if in_xj(lambda.to_f64().unwrap(), j, params).is_none() {
        return Ok(ErrorTerm {
            value: zero,
            m: zero,
            l: zero,
            in_xj: false,
            terms: 0,
        });
    }
    let m = m_lattice(fam, j, lambda, xi, budget)?;
    let l = l_j(fam, j, lambda, xi, params, cut, quad)?;
    Ok(ErrorTerm {
        value: m - l.value,
        m,
        l: l.value,
        in_xj: true,
        terms: l.terms,
    })
}

/// Outcome of [`e_decay_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct EDecayReport {
    /// `(j, number of evaluations, max |E_{j,lambda}(xi)|)`.
    pub per_j: Vec<(u32, usize, f64)>,
    /// Minus the least-squares slope of `log2 max |E|` against `j`.
    pub gamma_hat: f64,
    pub strictly_decreasing: bool,
}

/// `max |E_{j,lambda}(xi)|` over random `lambda in X_j` and uniform `xi`.
///
/// For each of `lambdas` draws, `a/q` is uniform over reduced fractions with
/// `q < 2^floor(j eps1)` (denominator first) and `lambda = a/q + r U(-1, 1)`
/// with `r` the `X_j` radius; `xi` takes `xis` uniform values in `[0, 1)^n`.
/// With `gate_mj`, only `xi` with `(lambda, xi)` in a major arc count, found
/// by rejection with at most `64 xis` attempts. Scales with empty `A_j`
/// report zero evaluations and are left out of the fit.
#[allow(clippy::too_many_arguments)]
pub fn e_decay_sweep<T: Real>(
    fam: &KernelFamily<T>,
    js: &[u32],
    params: &ArcParams,
    cut: &CutoffSpec<T>,
    quad: &QuadratureSpec,
    lambdas: usize,
    xis: usize,
    gate_mj: bool,
    seed: u64,
) -> Result<EDecayReport> {
    let n = fam.n();
    let mut per_j = Vec::with_capacity(js.len());
    for &j in js {
        let scale = params.xj_scale(j);
        if scale == 0 {
            per_j.push((j, 0, 0.0));
            continue;
        }
        if scale > 30 {
            return Err(Error::Overflow(format!("denominators below 2^{scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let radius = params.xj_radius(j);
        let mut work: Vec<(f64, Vec<f64>)> = Vec::with_capacity(lambdas * xis);
        for _ in 0..lambdas {
            let (a, q) = loop {
                let q = rng.gen_range(1..(1i64 << scale));
                let a = rng.gen_range(0..q);
                if gcd(a, q) == 1 {
                    break (a, q);
                }
            };
            let lam = a as f64 / q as f64 + radius * rng.gen_range(-1.0..1.0);
            let mut taken = 0;
            let mut tries = 0;
            while taken < xis && tries < 64 * xis {
                tries += 1;
                let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                if gate_mj && in_mj(lam, &xi, j, params).is_none() {
                    continue;
                }
                work.push((lam, xi));
                taken += 1;
            }
        }
        let vals: Vec<Result<f64>> = work
            .par_iter()
            .map(|(lam, xi)| {
                let xt: Vec<T> = xi.iter().map(|&v| lit(v)).collect();
                let e = e_j(fam, j, lit(*lam), &xt, params, cut, quad, DEFAULT_LATTICE_BUDGET)?;
                Ok(e.value.norm().to_f64().unwrap())
            })
            .collect();
        let mut best = 0.0f64;
        for v in vals {
            best = best.max(v?);
        }
        per_j.push((j, work.len(), best));
    }
    let pts: Vec<(f64, f64)> = per_j
        .iter()
        .filter(|p| p.1 > 0 && p.2 > 0.0)
        .map(|p| (p.0 as f64, p.2.log2()))
        .collect();
    let gamma_hat = if pts.len() < 2 {
        f64::NAN
    } else {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        -cov / var
    };
    let strictly_decreasing = pts.len() == per_j.len() && per_j.windows(2).all(|w| w[1].2 < w[0].2);
    Ok(EDecayReport {
        per_j,
        gamma_hat,
        strictly_decreasing,
    })
}

/// `L_{s,alpha}[m](xi) = sum_{beta in B_s(alpha)} S(alpha,beta) m(xi-beta) chi_s(xi-beta)`.
///
/// `B_s(alpha)` consists of `b/(k q0)` with `k q0 in [2^(s-1), 2^s)` and
/// `gcd(b, k) = 1`, where `alpha = a0/q0`. Only `beta` within the support of
/// `chi_s` around `xi` contribute, so they are found by a window lookup.
pub fn script_l<T: Real>(
    s: u32,
    alpha: &ReducedRational,
    m: MultiplierFn<'_, T>,
    xi: &[T],
    cut: &CutoffSpec<T>,
    d: u32,
) -> Result<ArcSum<T>> {
    if !(1..=40).contains(&s) {
        return Err(Error::invalid("s must lie in [1, 40]"));
    }
    let cut = cut.at_scale(s);
    let (lo, hi) = (1i64 << (s - 1), 1i64 << s);
    let q0 = alpha.den();
    let xif = to_f64_vec(xi);
    let wx = cut.chi_s_radius().to_f64().unwrap();
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    let k_lo = (lo + q0 - 1) / q0;
    let mut k = k_lo.max(1);
    while k * q0 < hi {
        let q = k * q0;
        let a = k * alpha.num();
        for b in window_vectors(&xif, wx, q) {
            if gcd_all(b.iter().copied().chain([k])) != 1 {
                continue;
            }
            let eta = offset(xi, &b, q);
            let c = cut.chi_s(&eta);
            if c == T::zero() {
                continue;
            }
            terms += 1;
            let sv = weyl_value::<T>(a, &b, q, d)?;
            acc.add(sv * m(&eta) * c);
        }
        k += 1;
    }
    Ok(ArcSum {
        value: acc.value(),
        terms,
    })
}

/// `L#_s[m](xi) = sum_{beta in B#_s} m(xi-beta) chi~_s(xi-beta)`.
pub fn script_l_sharp<T: Real>(s: u32, m: MultiplierFn<'_, T>, xi: &[T], cut: &CutoffSpec<T>) -> Result<ArcSum<T>> {
    if !(1..=40).contains(&s) {
        return Err(Error::invalid("s must lie in [1, 40]"));
    }
    let cut = cut.at_scale(s);
    let (lo, hi) = (1i64 << (s - 1), 1i64 << s);
    let xif = to_f64_vec(xi);
    let wx = cut.chi_tilde_s_radius().to_f64().unwrap();
    // B#_s is a set of rationals; b/q and 2b/2q are the same point
    let mut seen = BTreeSet::new();
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for q in lo..hi {
        for b in window_vectors(&xif, wx, q) {
            let g = gcd_all(b.iter().copied().chain([q]));
            let key: Vec<i64> = b.iter().map(|&v| v / g).chain([q / g]).collect();
            if !seen.insert(key) {
                continue;
            }
            let eta = offset(xi, &b, q);
            let c = cut.chi_tilde_s(&eta);
            if c == T::zero() {
                continue;
            }
            terms += 1;
            acc.add(m(&eta) * c);
        }
    }
    Ok(ArcSum {
        value: acc.value(),
        terms,
    })
}

/// Whether `alpha = a0/q0` lies in `A_s`, i.e. `q0 < 2^s`.
pub fn in_a_s(alpha: &ReducedRational, s: u32) -> bool {
    (alpha.den() as u128) < (1u128 << s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rationals::reduce;

    #[test]
    fn hilbert_multiplier_vanishes_at_origin() {
        let k = KernelFamily::<f64>::hilbert(1);
        let v = m_lattice(&k, 5, 0.0, &[0.0], DEFAULT_LATTICE_BUDGET).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn grid_matches_lattice() {
        let k = KernelFamily::<f64>::hilbert(1);
        let g = m_grid(&k, 4, 0.3, 128, DEFAULT_LATTICE_BUDGET).unwrap();
        let l1 = k.lattice_l1(4, DEFAULT_LATTICE_BUDGET).unwrap();
        for idx in [0usize, 1, 17, 64, 127] {
            let direct = m_lattice(&k, 4, 0.3, &[idx as f64 / 128.0], DEFAULT_LATTICE_BUDGET).unwrap();
            assert!((direct - g.values[idx]).norm() <= 1e-10 * l1);
        }
        assert!(m_grid(&k, 4, 0.3, 64, DEFAULT_LATTICE_BUDGET).is_err());
    }

    #[test]
    fn binary_roundtrip() {
        let k = KernelFamily::<f64>::hilbert(1);
        let g = m_grid(&k, 2, 0.125, 32, DEFAULT_LATTICE_BUDGET).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 32 * 16);
        let back = MultiplierGrid::<f64>::read_binary(&buf[..]).unwrap();
        assert_eq!(back, g);
        assert!(MultiplierGrid::<f64>::read_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn cutoff_shapes() {
        let c = CutoffSpec::<f64>::new(1, 1).unwrap();
        assert_eq!(c.chi(&[0.25]), 1.0);
        assert_eq!(c.chi(&[0.5]), 0.0);
        assert_eq!(c.chi_tilde(&[0.5]), 1.0);
        assert_eq!(c.chi_tilde(&[1.0]), 0.0);
        assert!(CutoffSpec::<f64>::new(1, 4).is_err());
        let c2 = CutoffSpec::<f64>::new(1, 2).unwrap();
        assert_eq!(c2.chi(&[0.25, 0.25]), 1.0);
    }

    #[test]
    fn script_l_center_values() {
        let cut = CutoffSpec::<f64>::new(2, 1).unwrap();
        let one = |_: &[f64]| Complex::new(1.0, 0.0);
        let alpha = reduce(1, 3).unwrap();
        // beta = 1/3 with q = 3 (k = 1), s = 2
        let v = script_l(2, &alpha, &one, &[1.0 / 3.0], &cut, 1).unwrap();
        let s = complete_weyl_sum::<f64>(&ArcPair::new(1, &[1], 3).unwrap(), 1).unwrap().value;
        assert_eq!(v.terms, 1);
        assert!((v.value - s).norm() < 1e-12);
        let sharp = script_l_sharp(2, &one, &[1.0 / 3.0], &cut).unwrap();
        assert_eq!(sharp.terms, 1);
        assert!((sharp.value.re - 1.0).abs() < 1e-12);
        // alpha outside A_s
        let far = reduce(1, 5).unwrap();
        assert_eq!(script_l(2, &far, &one, &[0.2], &cut, 1).unwrap().terms, 0);
    }

    #[test]
    fn e_sweep_skips_empty_arcs() {
        let fam = KernelFamily::<f64>::hilbert(1);
        let quad = QuadratureSpec::default();
        let cut = CutoffSpec::new(1, 1).unwrap();
        let p = ArcParams::rescaled(0.25, 0.5, 1, 1).unwrap();
        let r = e_decay_sweep(&fam, &[3, 4], &p, &cut, &quad, 2, 2, false, 5).unwrap();
        assert_eq!(r.per_j[0], (3, 0, 0.0));
        assert_eq!(r.per_j[1].1, 4);
        assert!(r.gamma_hat.is_nan() && !r.strictly_decreasing);
        assert_eq!(r.per_j, e_decay_sweep(&fam, &[3, 4], &p, &cut, &quad, 2, 2, false, 5).unwrap().per_j);
    }
}
