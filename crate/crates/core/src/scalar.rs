//! Scalar abstraction shared by every numerical module.
//!
//! All floating-point code in the crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. Integer and rational arithmetic lives in
//! [`crate::rationals`] and never goes through this trait.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable")
}

/// Converts an integer into `T` (rounding if it has more bits than the mantissa).
#[inline]
pub fn from_int<T: Real>(k: i128) -> T {
    T::from_i128(k).expect("integer representable")
}

/// Reduces `t` to the representative in `[-1/2, 1/2]` of `t mod 1`.
#[inline]
pub fn wrap_turns<T: Real>(t: T) -> T {
    t - t.round()
}

/// `e(t) = exp(2 pi i t)` with the argument reduced modulo one first.
#[inline]
pub fn e_turns<T: Real>(t: T) -> Complex<T> {
    let r = wrap_turns(t);
    let (s, c) = (T::TAU() * r).sin_cos();
    Complex::new(c, s)
}

/// Fractional part of `x * k` in `[-1/2, 1/2]`, computed without losing the
/// low-order bits of the product.
///
/// `x` is first reduced modulo one (an exact operation), the product is
/// formed with a fused multiply-add to recover the rounding error, and only
/// then is the integer part discarded. For `f64` and `|k| < 2^53` the result is
/// accurate to a few ulps of one.
#[inline]
pub fn frac_product<T: Real>(x: T, k: i128) -> T {
    if k == 0 {
        return T::zero();
    }
    let xr = x - x.floor();
    let kt = from_int::<T>(k);
    let p = xr * kt;
    let err = xr.mul_add(kt, -p);
    let mut f = wrap_turns(p) + err;
    // Integer part of k that did not fit in the mantissa.
    let k_rest = k - kt.to_i128().unwrap_or(k);
    if k_rest != 0 {
        f += frac_product(xr, k_rest);
    }
    wrap_turns(f)
}

/// Neumaier-compensated accumulator for complex values.
///
/// The summation order is the call order, so results are reproducible as long
/// as the caller feeds terms in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T: Real> {
    re: T,
    re_c: T,
    im: T,
    im_c: T,
}

#[inline]
fn neumaier<T: Real>(sum: &mut T, comp: &mut T, x: T) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            re: T::zero(),
            re_c: T::zero(),
            im: T::zero(),
            im_c: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, z: Complex<T>) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(Complex::new(other.re, other.im));
        self.add(Complex::new(other.re_c, other.im_c));
    }

    pub fn value(&self) -> Complex<T> {
        Complex::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// Compensated sum of real terms in iteration order.
pub fn compensated_real_sum<T: Real, I: IntoIterator<Item = T>>(terms: I) -> T {
    let mut s = T::zero();
    let mut c = T::zero();
    for x in terms {
        neumaier(&mut s, &mut c, x);
    }
    s + c
}

/// Euclidean norm of a real vector.
pub fn norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_product_matches_exact_dyadic() {
        // 0.1 * 3 = 0.30000000000000004 in f64; the exact product of the f64
        // value 0.1 with 3 is recovered to within an ulp of one.
        let f = frac_product(0.1f64, 3);
        assert!((f - 0.3).abs() < 1e-16);
        // Large multiplier: x = 1/3 (as f64), k = 3 * 2^40.
        let k: i128 = 3 << 40;
        let f = frac_product(1.0f64 / 3.0, k);
        let exact = {
            // (1/3)_f64 = 1/3 - 1/(3 * 2^54); times 3*2^40 = 2^40 - 2^-14.
            -(2.0f64).powi(-14)
        };
        assert!((f - exact).abs() < 1e-15, "{f} vs {exact}");
    }

    #[test]
    fn frac_product_periodic_in_x() {
        for k in [1i128, 7, 1 << 20, (1 << 40) + 3] {
            let a = frac_product(0.25f64, k);
            let b = frac_product(1.25f64, k);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(Complex::new(1e16, 0.0));
        for _ in 0..10 {
            s.add(Complex::new(1.0, -1.0));
        }
        s.add(Complex::new(-1e16, 0.0));
        assert_eq!(s.value(), Complex::new(10.0, -10.0));
    }

    #[test]
    fn e_turns_is_unit_and_periodic() {
        for t in [0.0f64, 0.25, 0.5, -0.75, 3.125] {
            let z = e_turns(t);
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z - e_turns(t + 1.0)).norm() < 1e-15);
        }
        assert!((e_turns(0.25f32) - Complex::new(0.0, 1.0)).norm() < 1e-6);
    }
}
