use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{compensated_real_sum, Real};

/// Dyadic chaining bound for a sequence of length `2^s + 1`:
/// returns `(max_j |a_j|, |a_j0| + sqrt2 sum_l (sum_k |a_((k+1)2^l) - a_(k 2^l)|^2)^(1/2))`.
pub fn rm_bound<T: Real>(a: &[Complex<T>], j0: usize) -> Result<(T, T)> {
    let len = a.len();
    if len < 2 || !(len - 1).is_power_of_two() {
        return Err(Error::invalid(format!("length {len} is not 2^s + 1")));
    }
    if j0 >= len {
        return Err(Error::invalid("j0 out of range"));
    }
    let s = (len - 1).trailing_zeros();
    let lhs = a.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let levels = (0..=s).map(|l| {
        let step = 1usize << l;
        compensated_real_sum((0..(len - 1) / step).map(|k| (a[(k + 1) * step] - a[k * step]).norm_sqr())).sqrt()
    });
    let rhs = a[j0].norm() + T::SQRT_2() * compensated_real_sum(levels);
    Ok((lhs, rhs))
}

/// `N^(1/2) A + (2 N A B delta)^(1/2)`.
pub fn sobolev_maximal_bound(n: u64, a: f64, b: f64, delta: f64) -> Result<f64> {
    if n < 1 || !(a >= 0.0 && b >= 0.0 && delta >= 0.0) {
        return Err(Error::invalid("need N >= 1 and A, B, delta >= 0"));
    }
    let n = n as f64;
    Ok(n.sqrt() * a + (2.0 * n * a * b * delta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> Vec<Complex<f64>> {
        v.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn hand_cases() {
        let (l, r) = rm_bound(&seq(&[0.0, 1.0, 2.0]), 0).unwrap();
        assert_eq!(l, 2.0);
        assert!((r - 2f64.sqrt() * (2f64.sqrt() + 2.0)).abs() < 1e-12);
        let (l, r) = rm_bound(&seq(&[0.0, 1.0, 0.0]), 0).unwrap();
        assert_eq!(l, 1.0);
        assert!((r - 2.0).abs() < 1e-12);
        let (l, r) = rm_bound(&seq(&[-3.0; 9]), 4).unwrap();
        assert_eq!((l, r), (3.0, 3.0));
        assert!(rm_bound(&seq(&[1.0; 4]), 0).is_err());
    }

    #[test]
    fn sobolev_arithmetic() {
        assert_eq!(sobolev_maximal_bound(1, 1.0, 0.0, 0.3).unwrap(), 1.0);
        assert!((sobolev_maximal_bound(1, 1.0, 1.0, 1.0).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((sobolev_maximal_bound(4, 1.0, 1.0, 0.125).unwrap() - 3.0).abs() < 1e-15);
    }
}
