use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftDirection;

use crate::error::{check_budget, Error, Result};
use crate::fft::{fft_nd, flat_index, unflat_index};
use crate::kernels::KernelFamily;
use crate::multipliers::modulated_kernel_box;
use crate::operators::LatticeFunction;
use crate::scalar::{from_int, Real};

/// Largest padded transform (points) a convolution may allocate.
pub const CONVOLUTION_BUDGET: u128 = 1 << 26;

/// Zero-padded cyclic convolution plan for inputs on a fixed box and kernels
/// on the centred box `[-H, H]^n`. The padding is at least the linear
/// convolution length, so the cyclic result has no wraparound.
pub(crate) struct PaddedConv {
    pub n: usize,
    pub f_center: Vec<i64>,
    pub f_half: Vec<i64>,
    pub kh: i64,
    pub dims: Vec<usize>,
}

impl PaddedConv {
    pub fn new(f_center: &[i64], f_half: &[i64], kh: i64) -> Result<Self> {
        let dims: Vec<usize> = f_half
            .iter()
            .map(|&h| ((2 * h + 1) as usize + 2 * kh as usize + 1).next_power_of_two())
            .collect();
        let total: u128 = dims.iter().map(|&d| d as u128).product();
        check_budget("padded convolution", total, CONVOLUTION_BUDGET)?;
        Ok(Self {
            n: f_center.len(),
            f_center: f_center.to_vec(),
            f_half: f_half.to_vec(),
            kh,
            dims,
        })
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Spectrum of `f`, placed with its lowest corner at index zero.
    pub fn input_spectrum<T: Real>(&self, f: &LatticeFunction<T>) -> Vec<Complex<T>> {
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.total()];
        let fd = f.dims();
        let mut idx = vec![0usize; self.n];
        for (k, v) in f.values().iter().enumerate() {
            unflat_index(k, &fd, &mut idx);
            data[flat_index(&idx, &self.dims)] = *v;
        }
        fft_nd(&mut data, &self.dims, FftDirection::Forward);
        data
    }

    /// Spectrum of a kernel on `[-H, H]^n` (row-major), placed with `-H` at zero.
    pub fn kernel_spectrum<T: Real>(&self, kernel: &[Complex<T>]) -> Vec<Complex<T>> {
        let side = (2 * self.kh + 1) as usize;
        let kd = vec![side; self.n];
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.total()];
        let mut idx = vec![0usize; self.n];
        for (k, v) in kernel.iter().enumerate() {
            unflat_index(k, &kd, &mut idx);
            data[flat_index(&idx, &self.dims)] = *v;
        }
        fft_nd(&mut data, &self.dims, FftDirection::Forward);
        data
    }

    /// Output box: same centre, half-width grown by `H`.
    pub fn out_half(&self) -> Vec<i64> {
        self.f_half.iter().map(|h| h + self.kh).collect()
    }

    /// Inverse transform of a product spectrum, cropped to the output box, as
    /// a flat row-major vector.
    pub fn finish<T: Real>(&self, mut prod: Vec<Complex<T>>) -> Vec<Complex<T>> {
        fft_nd(&mut prod, &self.dims, FftDirection::Inverse);
        let scale = from_int::<T>(self.total() as i128).recip();
        let od: Vec<usize> = self.out_half().iter().map(|&h| (2 * h + 1) as usize).collect();
        let count: usize = od.iter().product();
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; self.n];
        for k in 0..count {
            unflat_index(k, &od, &mut idx);
            out.push(prod[flat_index(&idx, &self.dims)] * scale);
        }
        out
    }

    pub fn wrap<T: Real>(&self, values: Vec<Complex<T>>) -> LatticeFunction<T> {
        LatticeFunction::new(self.f_center.clone(), self.out_half(), values).expect("consistent box")
    }
}

/// `(k * f)(x) = sum_y f(x - y) k(y)` for a kernel on `[-H, H]^n`.
pub fn convolve_box<T: Real>(f: &LatticeFunction<T>, kh: i64, kernel: &[Complex<T>]) -> Result<LatticeFunction<T>> {
    let n = f.n();
    let side = (2 * kh + 1) as usize;
    if kernel.len() != side.pow(n as u32) {
        return Err(Error::invalid("kernel box has the wrong size"));
    }
    let plan = PaddedConv::new(f.center(), f.half_width(), kh)?;
    let a = plan.input_spectrum(f);
    let b = plan.kernel_spectrum(kernel);
    let prod: Vec<Complex<T>> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(plan.wrap(plan.finish(prod)))
}

/// `g(x) = sum_{y != 0} f(x - y) e(lambda |y|^(2d)) K_j(y)`.
pub fn apply_mj<T: Real>(fam: &KernelFamily<T>, j: u32, lambda: T, f: &LatticeFunction<T>) -> Result<LatticeFunction<T>> {
    if f.n() != fam.n() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let (h, k) = modulated_kernel_box(fam, j, lambda, CONVOLUTION_BUDGET)?;
    convolve_box(f, h, &k)
}

/// Adjoint of [`apply_mj`]: `g(x) = sum_y f(x + y) conj(e(lambda |y|^(2d)) K_j(y))`.
pub fn apply_mj_adjoint<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    f: &LatticeFunction<T>,
) -> Result<LatticeFunction<T>> {
    if f.n() != fam.n() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let (h, k) = modulated_kernel_box(fam, j, lambda, CONVOLUTION_BUDGET)?;
    // reversing a centred row-major box maps y to -y
    let refl: Vec<Complex<T>> = k.iter().rev().map(|v| v.conj()).collect();
    convolve_box(f, h, &refl)
}

/// Kernel `sum_{1 <= j <= J} e(lambda |y|^(2d)) K_j(y)` on `[-2^(J+1), 2^(J+1)]^n`.
pub(crate) fn summed_kernel<T: Real>(fam: &KernelFamily<T>, big_j: u32, lambda: T) -> Result<(i64, Vec<Complex<T>>)> {
    let (hh, mut acc) = modulated_kernel_box(fam, big_j, lambda, CONVOLUTION_BUDGET)?;
    let n = fam.n();
    let side = (2 * hh + 1) as usize;
    let outer = vec![side; n];
    for j in 1..big_j {
        let (h, k) = modulated_kernel_box(fam, j, lambda, CONVOLUTION_BUDGET)?;
        let inner = vec![(2 * h + 1) as usize; n];
        let mut idx = vec![0usize; n];
        for (f, v) in k.iter().enumerate() {
            unflat_index(f, &inner, &mut idx);
            for i in idx.iter_mut() {
                *i += (hh - h) as usize;
            }
            acc[flat_index(&idx, &outer)] += *v;
        }
    }
    Ok((hh, acc))
}

/// `sum_{1 <= j <= J} apply_mj(j, lambda, f)` with one convolution.
pub fn apply_sum<T: Real>(fam: &KernelFamily<T>, big_j: u32, lambda: T, f: &LatticeFunction<T>) -> Result<LatticeFunction<T>> {
    if big_j < 1 {
        return Err(Error::invalid("J must be at least one"));
    }
    let (h, k) = summed_kernel(fam, big_j, lambda)?;
    convolve_box(f, h, &k)
}

/// Power-iteration estimate of the `l^2` norm of `f -> sum_{j <= J} apply_mj`
/// at a fixed `lambda`, for `f` supported on the cube of half-width `radius`.
pub fn linearized_norm<T: Real>(
    fam: &KernelFamily<T>,
    big_j: u32,
    lambda: T,
    radius: i64,
    iterations: usize,
    seed: u64,
) -> Result<T> {
    let n = fam.n();
    let (h, k) = summed_kernel(fam, big_j, lambda)?;
    let refl: Vec<Complex<T>> = k.iter().rev().map(|v| v.conj()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = ((2 * radius + 1) as usize).pow(n as u32);
    let vals: Vec<Complex<T>> = (0..count)
        .map(|_| Complex::new(T::from_f64(rng.gen_range(-1.0..1.0)).unwrap(), T::zero()))
        .collect();
    let mut f = LatticeFunction::new(vec![0; n], vec![radius; n], vals)?;
    let mut est = T::zero();
    for _ in 0..iterations.max(1) {
        let nf = f.l2_norm();
        if nf == T::zero() {
            return Ok(T::zero());
        }
        for v in f.values_mut() {
            *v /= nf;
        }
        let g = convolve_box(&f, h, &k)?;
        est = g.l2_norm();
        let back = convolve_box(&g, h, &refl)?;
        f = back.reboxed(vec![0; n], vec![radius; n]);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{e_turns, frac_product};

    #[test]
    fn delta_reproduces_kernel() {
        let k = KernelFamily::<f64>::hilbert(1);
        let g = apply_mj(&k, 3, 0.37, &LatticeFunction::delta(&[0])).unwrap();
        for x in -20i64..=20 {
            let want = k.piece_at(3, &[x]) * e_turns(frac_product(0.37, (x * x) as i128));
            assert!((g.get(&[x]) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_sum() {
        let k = KernelFamily::<f64>::hilbert(1);
        let vals: Vec<Complex<f64>> = (0..17)
            .map(|i| Complex::new(((i * 7) % 5) as f64 - 2.0, ((i * 3) % 4) as f64 * 0.5))
            .collect();
        let f = LatticeFunction::new(vec![0], vec![8], vals).unwrap();
        let g = apply_mj(&k, 4, 0.2, &f).unwrap();
        let l1 = f.l1_norm();
        for x in -50i64..=50 {
            let mut acc = Complex::new(0.0, 0.0);
            for y in -40i64..=40 {
                acc += f.get(&[x - y]) * k.piece_at(4, &[y]) * e_turns(frac_product(0.2, (y * y) as i128));
            }
            assert!((acc - g.get(&[x])).norm() <= 1e-10 * l1);
        }
    }

    #[test]
    fn adjoint_identity() {
        let k = KernelFamily::<f64>::hilbert(1);
        let f = LatticeFunction::new(vec![1], vec![3], (0..7).map(|i| Complex::new(i as f64, 1.0)).collect()).unwrap();
        let g = LatticeFunction::new(vec![-2], vec![5], (0..11).map(|i| Complex::new(1.0, -(i as f64))).collect()).unwrap();
        let af = apply_mj(&k, 3, 0.1, &f).unwrap();
        let ag = apply_mj_adjoint(&k, 3, 0.1, &g).unwrap();
        let dot = |a: &LatticeFunction<f64>, b: &LatticeFunction<f64>| {
            let mut s = Complex::new(0.0, 0.0);
            for i in 0..a.values().len() {
                let x = a.point(i);
                s += a.values()[i] * b.get(&x).conj();
            }
            s
        };
        assert!((dot(&af, &g) - dot(&f, &ag)).norm() < 1e-12);
    }
}
