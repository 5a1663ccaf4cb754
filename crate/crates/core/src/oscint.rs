//! Oscillatory integrals
//! `Phi_{j,lambda}(xi) = int e(lambda |y|^(2d) + xi.y) K_j(y) dy`,
//! their truncations `Phi*` and partial sums `Phi^s`, and decay sweeps.
//!
//! The integral is computed in polar coordinates: with `y = r w`,
//! `Phi = int dr w_j(r)/r e(lambda r^(2d)) B(r)` where
//! `B(r) = int_S Omega(w) e(r xi.w) dsigma(w)` and `w_j` is the radial bump.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{check_budget, Error, Result};
use crate::kernels::KernelFamily;
use crate::quad::GaussRule;
use crate::rationals::ArcParams;
use crate::scalar::{e_turns, from_int, lit, norm, CompensatedSum, Real};

/// Quadrature controls for [`phi`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per wavelength of the local phase (at least 4).
    pub resolution: f64,
    /// Maximum number of panel halvings after the base level.
    pub max_refinements: u32,
    /// Target absolute error.
    pub abs_tol: f64,
    /// Gauss nodes per panel.
    pub order: usize,
    /// Largest number of integrand evaluations per level.
    pub node_budget: u128,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            resolution: 4.0,
            max_refinements: 6,
            abs_tol: 1e-11,
            order: 16,
            node_budget: 200_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(resolution: f64, max_refinements: u32, abs_tol: f64) -> Result<Self> {
        let s = Self {
            resolution,
            max_refinements,
            abs_tol,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution >= 4.0) {
            return Err(Error::invalid("quadrature resolution must be at least 4"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if self.order < 2 {
            return Err(Error::invalid("panel order must be at least 2"));
        }
        Ok(())
    }
}

/// A quadrature value with its two-level error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiValue<T: Real> {
    pub value: Complex<T>,
    pub error_estimate: T,
    /// Integrand evaluations on the finest level.
    pub nodes: u128,
}

/// Radial support of `K_j`.
fn radial_support<T: Real>(j: u32) -> (T, T) {
    let hi = lit::<T>(2.0).powi(j as i32 + 1);
    if j <= 1 {
        (T::zero(), hi)
    } else {
        (lit::<T>(2.0).powi(j as i32 - 1), hi)
    }
}

/// Radial panel breakpoints with widths tied to the local phase gradient.
fn radial_breaks<T: Real>(j: u32, d: u32, lambda: T, xi_norm: T, quad: &QuadratureSpec, level: u32) -> Vec<T> {
    let (lo, hi) = radial_support::<T>(j);
    let span = hi - lo;
    // the bump itself needs a few dozen panels regardless of oscillation
    let base = span / lit(24.0);
    let per_panel = lit::<T>(quad.order as f64 / quad.resolution);
    let two_d = from_int::<T>(2 * d as i128);
    let mut breaks = vec![lo];
    let mut r = lo;
    while r < hi {
        let probe = (r + base).min(hi);
        let freq = two_d * lambda.abs() * probe.powi(2 * d as i32 - 1) + xi_norm;
        let mut h = base;
        if freq > T::zero() {
            h = h.min(per_panel / freq);
        }
        r = (r + h).min(hi);
        breaks.push(r);
    }
    // uniform refinement by 2^level
    let parts = 1usize << level;
    let mut out = Vec::with_capacity((breaks.len() - 1) * parts + 1);
    out.push(breaks[0]);
    for w in breaks.windows(2) {
        for k in 1..=parts {
            let t = from_int::<T>(k as i128) / from_int(parts as i128);
            out.push(w[0] + (w[1] - w[0]) * t);
        }
    }
    out
}

/// Orthonormal frame whose last vector is parallel to `xi` (any frame if `xi = 0`).
fn frame<T: Real>(xi: &[T]) -> Vec<Vec<T>> {
    let n = xi.len();
    let r = norm(xi);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    let lead = if r > T::zero() {
        xi.iter().map(|&v| v / r).collect()
    } else {
        let mut e = vec![T::zero(); n];
        e[n - 1] = T::one();
        e
    };
    // Gram-Schmidt on the standard basis, skipping near-dependent vectors
    let mut cand: Vec<Vec<T>> = Vec::new();
    for k in 0..n {
        let mut e = vec![T::zero(); n];
        e[k] = T::one();
        cand.push(e);
    }
    let mut chosen: Vec<Vec<T>> = vec![lead.clone()];
    for e in cand {
        if chosen.len() == n {
            break;
        }
        let mut v = e;
        for c in &chosen {
            let dot: T = v.iter().zip(c).map(|(a, b)| *a * *b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * *ci;
            }
        }
        let nv = norm(&v);
        if nv > lit(1e-6) {
            chosen.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    basis.extend(chosen.into_iter().skip(1));
    basis.push(lead);
    basis
}

/// Spherical factor `B(r) = int_S Omega(w) e(r xi.w) dsigma(w)`.
struct SphereFactor<'a, T: Real> {
    fam: &'a KernelFamily<T>,
    xi_norm: T,
    basis: Vec<Vec<T>>,
    resolution: T,
    level: u32,
    rule: GaussRule<T>,
}

impl<'a, T: Real> SphereFactor<'a, T> {
    fn eval(&self, r: T) -> (Complex<T>, u128) {
        let om = self.fam.omega();
        match self.fam.n() {
            1 => {
                let t = r * self.xi_norm;
                let s = self.basis[0][0];
                // the frame's only vector is xi/|xi| (or +1)
                let v = om.on_sphere(&[s]) * e_turns(t) + om.on_sphere(&[-s]) * e_turns(-t);
                (v, 2)
            }
            2 => {
                let cycles = r * self.xi_norm;
                let m = angular_nodes(cycles, self.resolution, self.level);
                let mut acc = CompensatedSum::new();
                let (u, v) = (&self.basis[0], &self.basis[1]);
                for k in 0..m {
                    let t = T::TAU() * (from_int::<T>(k as i128) + lit(0.5)) / from_int(m as i128);
                    let (s, c) = t.sin_cos();
                    let w = [c * u[0] + s * v[0], c * u[1] + s * v[1]];
                    acc.add(om.on_sphere(&w) * e_turns(cycles * s));
                }
                (acc.value() * (T::TAU() / from_int(m as i128)), m as u128)
            }
            3 => {
                let cycles = r * self.xi_norm;
                let zp = ((cycles * lit(2.0) * self.resolution / from_int(self.rule.nodes.len() as i128))
                    .ceil()
                    .to_usize()
                    .unwrap_or(1)
                    .max(2))
                    << self.level;
                let m = angular_nodes(T::zero(), self.resolution, self.level);
                let (e1, e2, e3) = (&self.basis[0], &self.basis[1], &self.basis[2]);
                let mut acc = CompensatedSum::new();
                let mut count = 0u128;
                for p in 0..zp {
                    let a = -T::one() + lit::<T>(2.0) * from_int(p as i128) / from_int(zp as i128);
                    let b = -T::one() + lit::<T>(2.0) * from_int(p as i128 + 1) / from_int(zp as i128);
                    let v = self.rule.panel(a, b, &mut |z: T| {
                        let rho = (T::one() - z * z).max(T::zero()).sqrt();
                        let mut inner = Complex::new(T::zero(), T::zero());
                        for k in 0..m {
                            let t = T::TAU() * (from_int::<T>(k as i128) + lit(0.5)) / from_int(m as i128);
                            let (s, c) = t.sin_cos();
                            let w: Vec<T> = (0..3)
                                .map(|i| rho * c * e1[i] + rho * s * e2[i] + z * e3[i])
                                .collect();
                            inner += om.on_sphere(&w);
                        }
                        inner * (T::TAU() / from_int(m as i128)) * e_turns(cycles * z)
                    });
                    count += (m * self.rule.nodes.len()) as u128;
                    acc.add(v);
                }
                (acc.value(), count)
            }
            _ => unreachable!("dimension checked by caller"),
        }
    }
}

fn angular_nodes<T: Real>(cycles: T, resolution: T, level: u32) -> usize {
    let base = (cycles * resolution * lit(1.5)).ceil().to_usize().unwrap_or(0) + 64;
    base << level
}

/// One quadrature level of `Phi`.
fn phi_level<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    xi: &[T],
    quad: &QuadratureSpec,
    level: u32,
) -> Result<(Complex<T>, u128)> {
    let d = fam.d();
    let xi_norm = norm(xi);
    let breaks = radial_breaks(j, d, lambda, xi_norm, quad, level);
    let rule = GaussRule::<T>::new(quad.order);
    let sphere = SphereFactor {
        fam,
        xi_norm,
        basis: frame(xi),
        resolution: lit(quad.resolution),
        level,
        rule: GaussRule::new(quad.order),
    };
    let panels = (breaks.len() - 1) as u128;
    let est = panels * quad.order as u128 * if fam.n() == 1 { 2 } else { 64 << level };
    check_budget("oscillatory integral nodes", est, quad.node_budget)?;
    let mut nodes = 0u128;
    let two_d = 2 * d as i32;
    let v = rule.composite(&breaks, &mut |r: T| {
        if r <= T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let w = fam.radial_weight(j, r);
        if w == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let (b, c) = sphere.eval(r);
        nodes += c;
        b * e_turns(lambda * r.powi(two_d)) * (w / r)
    });
    check_budget("oscillatory integral nodes", nodes, quad.node_budget)?;
    Ok((v, nodes))
}

/// `Phi_{j,lambda}(xi)` with its refinement error estimate.
///
/// Fails with [`Error::QuadratureTolerance`] (carrying the best value and
/// estimate) when the tolerance is not met within the refinement limit.
pub fn phi_with_estimate<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    lambda: T,
    xi: &[T],
    quad: &QuadratureSpec,
) -> Result<PhiValue<T>> {
    quad.validate()?;
    if j < 1 {
        return Err(Error::invalid("j must be at least one"));
    }
    if xi.len() != fam.n() {
        return Err(Error::invalid("xi has the wrong dimension"));
    }
    if fam.n() > 3 {
        return Err(Error::invalid("oscillatory integrals are implemented for n <= 3"));
    }
    let tol = lit::<T>(quad.abs_tol);
    let (mut prev, _) = phi_level(fam, j, lambda, xi, quad, 0)?;
    let mut last_err = T::infinity();
    for level in 1..=quad.max_refinements {
        let (cur, nodes) = phi_level(fam, j, lambda, xi, quad, level)?;
        let err = (cur - prev).norm();
        if err <= tol {
            return Ok(PhiValue {
                value: cur,
                error_estimate: err,
                nodes,
            });
        }
        prev = cur;
        last_err = err;
    }
    Err(Error::QuadratureTolerance {
        value_re: prev.re.to_f64().unwrap(),
        value_im: prev.im.to_f64().unwrap(),
        estimate: last_err.to_f64().unwrap(),
        tolerance: quad.abs_tol,
    })
}

/// `Phi_{j,lambda}(xi)`.
pub fn phi<T: Real>(fam: &KernelFamily<T>, j: u32, lambda: T, xi: &[T], quad: &QuadratureSpec) -> Result<Complex<T>> {
    phi_with_estimate(fam, j, lambda, xi, quad).map(|p| p.value)
}

/// Whether `|nu| <= 2^(-2dj + eps1 j)` (closed condition).
pub fn in_phi_star_window(nu: f64, j: u32, d: u32, eps1: f64) -> bool {
    let j = j as f64;
    nu.abs() <= (-(2.0 * d as f64) * j + eps1 * j).exp2()
}

/// `Phi*_{j,nu}(xi) = Phi_{j,nu}(xi) 1_{|nu| <= 2^(-2dj+eps1 j)}`.
pub fn phi_star<T: Real>(
    fam: &KernelFamily<T>,
    j: u32,
    nu: T,
    xi: &[T],
    params: &ArcParams,
    quad: &QuadratureSpec,
) -> Result<Complex<T>> {
    if !in_phi_star_window(nu.to_f64().unwrap(), j, fam.d(), params.eps1) {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    phi(fam, j, nu, xi, quad)
}

/// Result of a truncated `Phi^s` sum.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiSum<T: Real> {
    pub value: Complex<T>,
    /// Scales `j` whose window contained `lambda`.
    pub scales: Vec<u32>,
    /// Bound on the omitted terms `j > J_max` from the decay estimate with
    /// constant `c_vdc`.
    pub tail_bound: f64,
}

/// Smallest `j` with `j >= s/eps1`.
pub fn first_scale(s: u32, eps1: f64) -> u32 {
    ((s as f64 / eps1) - 1e-9).ceil().max(1.0) as u32
}

/// `Phi^s_lambda(xi) = sum_{s/eps1 <= j <= J_max} Phi*_{j,lambda}(xi)`.
#[allow(clippy::too_many_arguments)]
pub fn phi_s<T: Real>(
    fam: &KernelFamily<T>,
    s: u32,
    lambda: T,
    xi: &[T],
    params: &ArcParams,
    j_max: u32,
    c_vdc: f64,
    quad: &QuadratureSpec,
) -> Result<PhiSum<T>> {
    let j0 = first_scale(s, params.eps1);
    if j_max < j0 {
        return Err(Error::invalid(format!("J_max = {j_max} is below the first scale {j0}")));
    }
    let d = fam.d();
    let lam = lambda.to_f64().unwrap();
    let xin = norm(xi).to_f64().unwrap();
    let mut acc = CompensatedSum::new();
    let mut scales = Vec::new();
    for j in j0..=j_max {
        if in_phi_star_window(lam, j, d, params.eps1) {
            acc.add(phi(fam, j, lambda, xi, quad)?);
            scales.push(j);
        }
    }
    // omitted terms, bounded by c (1 + 2^(2dj)|lambda| + 2^j |xi|)^(-1/(2d))
    let mut tail = 0.0;
    if !(lam == 0.0 && xin == 0.0) {
        let p = -1.0 / (2.0 * d as f64);
        let mut j = j_max + 1;
        loop {
            if !in_phi_star_window(lam, j, d, params.eps1) {
                break;
            }
            let jf = j as f64;
            let term = c_vdc * (1.0 + (2.0 * d as f64 * jf).exp2() * lam.abs() + jf.exp2() * xin).powf(p);
            tail += term;
            if lam == 0.0 && j > j_max + 64 {
                // geometric remainder of (2^j |xi|)^(-1/(2d))
                let ratio = (p).exp2();
                tail += term * ratio / (1.0 - ratio);
                break;
            }
            j += 1;
        }
    }
    Ok(PhiSum {
        value: acc.value(),
        scales,
        tail_bound: tail,
    })
}

/// Outcome of the van der Corput sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    /// Maximum of `|Phi| (1 + 2^(2dj)|lambda| + 2^j|xi|)^(1/(2d))` over all `j`.
    pub c_vdc: f64,
    /// The same maximum for each `j`.
    pub per_j: Vec<(u32, f64)>,
}

/// How grid points are interpreted in [`verify_phi_decay`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridScaling {
    /// `(lambda, xi)` used as given for every `j`.
    Absolute,
    /// `(L, X)` mapped to `lambda = L 2^(-2dj)`, `xi = X 2^-j`, so that each
    /// point has the same weight `1 + |L| + |X|` at every scale.
    ScaleRelative,
}

/// `C_vdc` over a finite grid of `(lambda, xi)`.
pub fn verify_phi_decay<T: Real>(
    fam: &KernelFamily<T>,
    js: &[u32],
    grid: &[(T, Vec<T>)],
    scaling: GridScaling,
    quad: &QuadratureSpec,
) -> Result<DecayReport> {
    let d = fam.d();
    let mut per_j = Vec::with_capacity(js.len());
    for &j in js {
        let big = lit::<T>(2.0).powi(j as i32);
        let big2d = big.powi(2 * d as i32);
        let vals: Vec<Result<f64>> = grid
            .par_iter()
            .map(|(l, x)| {
                let (lam, xi): (T, Vec<T>) = match scaling {
                    GridScaling::Absolute => (*l, x.clone()),
                    GridScaling::ScaleRelative => (*l / big2d, x.iter().map(|&v| v / big).collect()),
                };
                let v = phi(fam, j, lam, &xi, quad)?.norm();
                let w = T::one() + big2d * lam.abs() + big * norm(&xi);
                Ok((v * w.powf(T::one() / from_int(2 * d as i128))).to_f64().unwrap())
            })
            .collect();
        let mut m = 0.0f64;
        for v in vals {
            m = m.max(v?);
        }
        per_j.push((j, m));
    }
    let c_vdc = per_j.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(DecayReport { c_vdc, per_j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Omega;

    #[test]
    fn mean_zero_gives_zero_at_origin() {
        let q = QuadratureSpec::default();
        let h = KernelFamily::<f64>::hilbert(1);
        for j in 1..5 {
            assert!(phi(&h, j, 0.0, &[0.0], &q).unwrap().norm() < 1e-12);
        }
        let r = KernelFamily::<f64>::new(2, 1, Omega::Harmonic { m: 2 }).unwrap();
        assert!(phi(&r, 3, 0.0, &[0.0, 0.0], &q).unwrap().norm() < 1e-10);
    }

    #[test]
    fn odd_and_conjugate_symmetry() {
        let q = QuadratureSpec::default();
        let h = KernelFamily::<f64>::hilbert(1);
        let a = phi(&h, 4, 1e-3, &[0.17], &q).unwrap();
        let b = phi(&h, 4, 1e-3, &[-0.17], &q).unwrap();
        let c = phi(&h, 4, -1e-3, &[-0.17], &q).unwrap();
        assert!((a + b).norm() < 1e-10);
        assert!((c - a.conj()).norm() < 1e-10);
    }

    #[test]
    fn star_window_is_closed() {
        let w = (-2.0f64 * 5.0 + 0.25 * 5.0).exp2();
        assert!(in_phi_star_window(w, 5, 1, 0.25));
        assert!(!in_phi_star_window(w * 1.000001, 5, 1, 0.25));
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = frame(&[0.3f64, -0.4, 1.2]);
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = f[a].iter().zip(&f[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}
