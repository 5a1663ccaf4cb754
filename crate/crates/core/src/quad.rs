//! Gauss–Legendre rules and composite panel integration.

use num_complex::Complex;

use crate::scalar::{lit, CompensatedSum, Real};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre_f64(m);
    (x.into_iter().map(lit).collect(), w.into_iter().map(lit).collect())
}

fn gauss_legendre_f64(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "rule needs at least one node");
    let mut xs = vec![0.0; m];
    let mut ws = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_m
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[m - 1 - i] = x;
        ws[i] = w;
        ws[m - 1 - i] = w;
    }
    (xs, ws)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed Gauss rule reused across panels.
#[derive(Clone, Debug)]
pub struct GaussRule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn new(m: usize) -> Self {
        let (nodes, weights) = gauss_legendre(m);
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]` with one panel.
    pub fn panel<F: FnMut(T) -> Complex<T>>(&self, a: T, b: T, f: &mut F) -> Complex<T> {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * *x) * *w;
        }
        acc * half
    }

    /// Composite rule on the given breakpoints, accumulated in order.
    pub fn composite<F: FnMut(T) -> Complex<T>>(&self, breaks: &[T], f: &mut F) -> Complex<T> {
        let mut acc = CompensatedSum::new();
        for w in breaks.windows(2) {
            acc.add(self.panel(w[0], w[1], f));
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for m in [1usize, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre::<f64>(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * m) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-12, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_integrates_oscillation() {
        let rule = GaussRule::<f64>::new(16);
        let breaks: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0 * 10.0).collect();
        let v = rule.composite(&breaks, &mut |t| Complex::new((7.0 * t).cos(), 0.0));
        assert!((v.re - (70.0f64).sin() / 7.0).abs() < 1e-13);
    }
}
