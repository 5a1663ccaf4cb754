//! Multi-dimensional FFT over row-major arrays (last axis fastest).

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::scalar::Real;

/// Unnormalised in-place transform along every axis.
///
/// `Forward` computes `sum_x f(x) e(-k.x/N)`; `Inverse` uses the opposite sign.
pub fn fft_nd<T: Real>(data: &mut [Complex<T>], dims: &[usize], direction: FftDirection) {
    let total: usize = dims.iter().product();
    assert_eq!(total, data.len(), "array shape does not match data length");
    if total == 0 {
        return;
    }
    let mut planner = FftPlanner::<T>::new();
    let mut stride = total;
    for &len in dims {
        stride /= len;
        if len <= 1 {
            continue;
        }
        let fft = planner.plan_fft(len, direction);
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        if stride == 1 {
            for line in data.chunks_exact_mut(len) {
                fft.process_with_scratch(line, &mut scratch);
            }
            continue;
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
        let block = len * stride;
        for outer in 0..total / block {
            let base = outer * block;
            for inner in 0..stride {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = data[base + inner + k * stride];
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (k, b) in buf.iter().enumerate() {
                    data[base + inner + k * stride] = *b;
                }
            }
        }
    }
}

/// Row-major flat index of a multi-index.
#[inline]
pub fn flat_index(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Inverse of [`flat_index`].
#[inline]
pub fn unflat_index(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::e_turns;

    #[test]
    fn matches_direct_dft_2d() {
        let dims = [3usize, 4];
        let data: Vec<Complex<f64>> = (0..12)
            .map(|k| Complex::new(k as f64 * 0.37 - 1.0, (k * k) as f64 * 0.01))
            .collect();
        let mut out = data.clone();
        fft_nd(&mut out, &dims, FftDirection::Forward);
        let mut idx = [0usize; 2];
        let mut jdx = [0usize; 2];
        for f in 0..12 {
            unflat_index(f, &dims, &mut idx);
            let mut acc = Complex::new(0.0, 0.0);
            for g in 0..12 {
                unflat_index(g, &dims, &mut jdx);
                let t = -((idx[0] * jdx[0]) as f64) / 3.0 - (idx[1] * jdx[1]) as f64 / 4.0;
                acc += data[g] * e_turns(t);
            }
            assert!((acc - out[f]).norm() < 1e-12);
        }
    }

    #[test]
    fn flat_roundtrip() {
        let dims = [2usize, 5, 3];
        let mut idx = [0usize; 3];
        for f in 0..30 {
            unflat_index(f, &dims, &mut idx);
            assert_eq!(flat_index(&idx, &dims), f);
        }
    }
}
