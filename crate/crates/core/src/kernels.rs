//! Calderón–Zygmund kernels `K(x) = Omega(x)/|x|^n` and their dyadic pieces
//! `K_j = psi_j K` (`j >= 2`), `K_1 = sum_{i <= 1} psi_i K`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{check_budget, Error, Result};
use crate::quad::gauss_legendre;
use crate::scalar::{from_int, lit, norm, Real};
use crate::smooth::{phi_bump, psi_bump};

/// Angular part of the kernel, homogeneous of degree zero.
#[derive(Clone)]
pub enum Omega<T: Real> {
    /// `sign(x)` in dimension one.
    Sign,
    /// `x_k / |x|` (zero-based `k`).
    Riesz { k: usize },
    /// `Re((x_1 + i x_2)/|x|)^m = cos(m theta)` in dimension two, `m >= 1`.
    Harmonic { m: u32 },
    /// A user-supplied function of the unit vector.
    Custom {
        name: String,
        f: Arc<dyn Fn(&[T]) -> Complex<T> + Send + Sync>,
    },
}

impl<T: Real> fmt::Debug for Omega<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Sign => write!(f, "Sign"),
            Omega::Riesz { k } => write!(f, "Riesz({k})"),
            Omega::Harmonic { m } => write!(f, "Harmonic({m})"),
            Omega::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl<T: Real> Omega<T> {
    /// Evaluates at a unit vector.
    pub fn on_sphere(&self, w: &[T]) -> Complex<T> {
        let re = |v: T| Complex::new(v, T::zero());
        match self {
            Omega::Sign => re(w[0].signum()),
            Omega::Riesz { k } => re(w[*k]),
            Omega::Harmonic { m } => re((T::from_u32(*m).unwrap() * w[1].atan2(w[0])).cos()),
            Omega::Custom { f, .. } => f(w),
        }
    }

    /// Whether `Omega(-x) = -Omega(x)` is known to hold.
    pub fn is_odd(&self) -> bool {
        match self {
            Omega::Sign | Omega::Riesz { .. } => true,
            Omega::Harmonic { m } => m % 2 == 1,
            Omega::Custom { .. } => false,
        }
    }

    /// Whether the values are real.
    pub fn is_real(&self) -> bool {
        !matches!(self, Omega::Custom { .. })
    }
}

/// Kernel specification: dimension `n`, angular part `Omega`, and the degree
/// `d` of the modulation `|y|^(2d)`.
#[derive(Clone, Debug)]
pub struct KernelFamily<T: Real> {
    n: usize,
    d: u32,
    omega: Omega<T>,
    sphere_mean: T,
}

/// Sphere means must vanish to this accuracy.
pub const SPHERE_MEAN_TOL: f64 = 1e-8;

impl<T: Real> KernelFamily<T> {
    pub fn new(n: usize, d: u32, omega: Omega<T>) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("dimension must be at least one"));
        }
        if d < 1 {
            return Err(Error::invalid("degree d must be at least one"));
        }
        match &omega {
            Omega::Sign if n != 1 => return Err(Error::invalid("sign kernel needs n = 1")),
            Omega::Riesz { k } if *k >= n => {
                return Err(Error::invalid(format!("Riesz index {k} out of range for n = {n}")))
            }
            Omega::Harmonic { m } if n != 2 || *m == 0 => {
                return Err(Error::invalid("harmonic kernel needs n = 2 and m >= 1"))
            }
            _ => {}
        }
        let mean = match (&omega, n) {
            (_, 1..=3) => sphere_mean(&omega, n).norm(),
            // odd in x, so the mean vanishes by symmetry
            (Omega::Riesz { .. }, _) => T::zero(),
            _ => {
                return Err(Error::invalid(
                    "sphere-mean check is only available for n <= 3 with custom kernels",
                ))
            }
        };
        if mean.to_f64().unwrap() > SPHERE_MEAN_TOL {
            return Err(Error::invalid(format!(
                "Omega must have zero sphere mean, got {mean:e}"
            )));
        }
        Ok(Self {
            n,
            d,
            omega,
            sphere_mean: mean,
        })
    }

    /// `n = 1`, `K(x) = 1/x`.
    pub fn hilbert(d: u32) -> Self {
        Self::new(1, d, Omega::Sign).expect("valid built-in")
    }

    /// Riesz kernel `x_k/|x|^(n+1)`.
    pub fn riesz(n: usize, k: usize, d: u32) -> Result<Self> {
        Self::new(n, d, Omega::Riesz { k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn omega(&self) -> &Omega<T> {
        &self.omega
    }

    /// Sphere mean of `Omega` found at construction.
    pub fn sphere_mean(&self) -> T {
        self.sphere_mean
    }

    /// `K(x) = Omega(x/|x|)/|x|^n`; zero at the origin.
    pub fn kernel(&self, x: &[T]) -> Complex<T> {
        let r = norm(x);
        if r == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let w: Vec<T> = x.iter().map(|&v| v / r).collect();
        self.omega.on_sphere(&w) / r.powi(self.n as i32)
    }

    /// Radial weight of the piece `j`: `psi(|x| 2^-j)` or `phi(|x|/2)` for `j = 1`.
    pub fn radial_weight(&self, j: u32, r: T) -> T {
        if j <= 1 {
            phi_bump(r * lit(0.5))
        } else {
            psi_bump(r * lit::<T>(2.0).powi(-(j as i32)))
        }
    }

    /// `K_j(x)`; zero outside `|x| < 2^(j+1)` and at the origin.
    pub fn piece(&self, j: u32, x: &[T]) -> Complex<T> {
        assert!(j >= 1, "kernel pieces start at j = 1");
        let r = norm(x);
        if r == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let w = self.radial_weight(j, r);
        if w == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        self.kernel(x) * w
    }

    /// `K_j` at an integer point.
    pub fn piece_at(&self, j: u32, y: &[i64]) -> Complex<T> {
        let x: Vec<T> = y.iter().map(|&v| from_int(v as i128)).collect();
        self.piece(j, &x)
    }

    /// Half-width `2^(j+1)` of the lattice box containing `supp K_j`.
    pub fn support_radius(j: u32) -> i64 {
        1i64 << (j + 1)
    }

    /// `K_j` on the box `[-H, H]^n`, `H = 2^(j+1)`, row-major, last axis fastest.
    pub fn lattice_box(&self, j: u32, budget: u128) -> Result<(i64, Vec<Complex<T>>)> {
        let h = Self::support_radius(j);
        let side = (2 * h + 1) as u128;
        let count = side
            .checked_pow(self.n as u32)
            .ok_or_else(|| Error::Overflow("lattice box size".into()))?;
        check_budget("kernel lattice box", count, budget)?;
        let mut out = Vec::with_capacity(count as usize);
        let mut y = vec![-h; self.n];
        for _ in 0..count {
            out.push(self.piece_at(j, &y));
            for k in (0..self.n).rev() {
                y[k] += 1;
                if y[k] <= h {
                    break;
                }
                y[k] = -h;
            }
        }
        Ok((h, out))
    }

    /// `sum_y |K_j(y)|` over the lattice.
    pub fn lattice_l1(&self, j: u32, budget: u128) -> Result<T> {
        let (_, vals) = self.lattice_box(j, budget)?;
        Ok(vals.iter().map(|z| z.norm()).sum())
    }
}

/// Quadrature of `Omega` over the unit sphere, normalised to a mean.
pub fn sphere_mean<T: Real>(omega: &Omega<T>, n: usize) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    match n {
        1 => {
            acc = (omega.on_sphere(&[T::one()]) + omega.on_sphere(&[-T::one()])) * lit::<T>(0.5);
        }
        2 => {
            // periodic trapezoid rule, spectrally accurate for smooth Omega
            let m = 1024;
            for k in 0..m {
                let t = T::TAU() * from_int(k) / from_int(m);
                acc += omega.on_sphere(&[t.cos(), t.sin()]);
            }
            acc /= from_int::<T>(m);
        }
        3 => {
            let (zs, ws) = gauss_legendre::<T>(64);
            let m = 128;
            for (z, wz) in zs.iter().zip(&ws) {
                let rho = (T::one() - *z * *z).sqrt();
                for k in 0..m {
                    let t = T::TAU() * from_int(k) / from_int(m);
                    acc += omega.on_sphere(&[rho * t.cos(), rho * t.sin(), *z]) * *wz;
                }
            }
            // weights sum to 2, angle average over m
            acc /= from_int::<T>(m) * lit(2.0);
        }
        _ => panic!("sphere_mean supports n <= 3"),
    }
    acc
}

/// Constants `A0 = max 2^(jn) |K_j|` and `A1 = max 2^(j(n+1)) |grad K_j|`.
///
/// Samples lie at the same relative positions `x = 2^j u`, `1/2 <= |u| <= 2`,
/// for every `j`. For `j = 1` the piece is unbounded near the origin, so only
/// `|x| >= 1` is sampled.
pub fn verify_kernel_bounds<T: Real>(fam: &KernelFamily<T>, j_max: u32, sample_count: usize) -> (T, T) {
    let n = fam.n();
    let dirs = sample_directions::<T>(n);
    let mut a0 = T::zero();
    let mut a1 = T::zero();
    for j in 1..=j_max {
        let scale = lit::<T>(2.0).powi(j as i32);
        let h = scale * lit(1e-5);
        for i in 0..sample_count {
            let t = (from_int::<T>(i as i128) + lit(0.5)) / from_int(sample_count as i128);
            let r = lit::<T>(0.5) + lit::<T>(1.5) * t;
            for w in &dirs {
                let x: Vec<T> = w.iter().map(|&c| c * r * scale).collect();
                let v = fam.piece(j, &x).norm() * scale.powi(n as i32);
                a0 = a0.max(v);
                let mut g2 = T::zero();
                for k in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let dk = (fam.piece(j, &xp) - fam.piece(j, &xm)) / (h + h);
                    g2 += dk.norm_sqr();
                }
                a1 = a1.max(g2.sqrt() * scale.powi(n as i32 + 1));
            }
        }
    }
    (a0, a1)
}

fn sample_directions<T: Real>(n: usize) -> Vec<Vec<T>> {
    match n {
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => (0..32)
            .map(|k| {
                let t = T::TAU() * (from_int::<T>(k) + lit(0.5)) / from_int(32);
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // axis directions plus a golden-angle spiral in the first three axes
            let mut out = Vec::new();
            for k in 0..n {
                for s in [T::one(), -T::one()] {
                    let mut v = vec![T::zero(); n];
                    v[k] = s;
                    out.push(v);
                }
            }
            let m = 64;
            let golden = lit::<T>(std::f64::consts::PI * (3.0 - 5f64.sqrt()));
            for i in 0..m {
                let z = T::one() - (from_int::<T>(i) + lit(0.5)) * lit::<T>(2.0) / from_int(m);
                let rho = (T::one() - z * z).sqrt();
                let t = golden * from_int(i);
                let mut v = vec![T::zero(); n];
                v[0] = rho * t.cos();
                v[1] = rho * t.sin();
                v[2] = z;
                out.push(v);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_piece_values() {
        let k = KernelFamily::<f64>::hilbert(1);
        for j in 1..8u32 {
            let x = 2f64.powi(j as i32);
            let w = k.radial_weight(j, x);
            assert!((k.piece(j, &[x]).re - w / x).abs() < 1e-15);
            assert_eq!(k.piece(j, &[-x]).re, -k.piece(j, &[x]).re);
            assert_eq!(k.piece(j, &[2f64.powi(j as i32 + 1) + 1e-9]).norm(), 0.0);
        }
        assert_eq!(k.piece(1, &[0.0]).norm(), 0.0);
    }

    #[test]
    fn builtins_have_zero_mean() {
        assert!(KernelFamily::<f64>::riesz(2, 0, 1).is_ok());
        assert!(KernelFamily::<f64>::riesz(3, 2, 1).is_ok());
        assert!(KernelFamily::<f64>::new(2, 1, Omega::Harmonic { m: 2 }).is_ok());
        let ones = Omega::Custom {
            name: "one".into(),
            f: Arc::new(|_: &[f64]| Complex::new(1.0, 0.0)),
        };
        assert!(KernelFamily::<f64>::new(2, 1, ones).is_err());
        assert!(KernelFamily::<f64>::new(2, 1, Omega::Sign).is_err());
    }

    #[test]
    fn bounds_are_scale_invariant() {
        let k = KernelFamily::<f64>::hilbert(1);
        let (a4, b4) = verify_kernel_bounds(&k, 4, 200);
        let (a10, b10) = verify_kernel_bounds(&k, 10, 200);
        assert!(a4 > 0.0 && b4 > 0.0);
        assert!((a10 / a4 - 1.0).abs() < 0.05);
        assert!((b10 / b4 - 1.0).abs() < 0.05);
    }

    #[test]
    fn lattice_box_is_odd() {
        let k = KernelFamily::<f64>::hilbert(1);
        let (h, v) = k.lattice_box(4, 1 << 20).unwrap();
        assert_eq!(v.len() as i64, 2 * h + 1);
        for i in 0..v.len() {
            assert_eq!(v[i], -v[v.len() - 1 - i]);
        }
    }
}
