//! Smooth step and bump profiles built from the mollifier `exp(-1/x)`.

use crate::scalar::Real;

/// `exp(-1/x)` for `x > 0`, zero otherwise.
#[inline]
pub fn mollifier<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        (-x.recip()).exp()
    }
}

/// Smooth step: zero for `x <= 0`, one for `x >= 1`, increasing in between.
#[inline]
pub fn smooth_step<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let a = mollifier(x);
    let b = mollifier(T::one() - x);
    a / (a + b)
}

/// Radial plateau: one for `r <= inner`, zero for `r >= outer`.
#[inline]
pub fn plateau<T: Real>(r: T, inner: T, outer: T) -> T {
    smooth_step((outer - r) / (outer - inner))
}

/// `phi(t) = 1` for `t <= 1`, `0` for `t >= 2`.
#[inline]
pub fn phi_bump<T: Real>(t: T) -> T {
    smooth_step(T::from_f64(2.0).unwrap() - t)
}

/// Dyadic bump `psi(t) = phi(t) - phi(2t)`, supported in `[1/2, 2]`.
///
/// Its dilates telescope: `sum_{j=a..b} psi(2^-j t) = phi(2^-b t) - phi(2^(1-a) t)`.
#[inline]
pub fn psi_bump<T: Real>(t: T) -> T {
    let two = T::from_f64(2.0).unwrap();
    if t <= T::from_f64(0.5).unwrap() || t >= two {
        return T::zero();
    }
    phi_bump(t) - phi_bump(two * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_limits_and_monotone() {
        assert_eq!(smooth_step(-0.1f64), 0.0);
        assert_eq!(smooth_step(1.5f64), 1.0);
        assert!((smooth_step(0.5f64) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for k in 0..=1000 {
            let v = smooth_step(k as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn psi_support_and_range() {
        for k in 0..=4000 {
            let t = k as f64 / 1000.0;
            let v = psi_bump(t);
            assert!((0.0..=1.0).contains(&v));
            if !(0.5..=2.0).contains(&t) {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(psi_bump(1.0f64), 1.0);
    }
}
