use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::operators::convolve::{summed_kernel, PaddedConv, CONVOLUTION_BUDGET};
use crate::operators::{LambdaGrid, LatticeFunction};
use crate::scalar::{lit, Real};

/// Result of [`carleson_apply`].
#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonOutput<T: Real> {
    /// `Cf` stored as the real part of a lattice function.
    pub cf: LatticeFunction<T>,
    /// Index into `grid.points()` of the maximising `lambda` at each site
    /// (smallest index on ties).
    pub argmax: Vec<usize>,
    /// Bound on `sup_lambda - max_grid` at every site.
    pub grid_error_bound: f64,
}

/// `2 pi (2^(J+1))^(2d) sum_j sum_y |K_j(y)| ||f||_inf * gap`: a bound on how
/// far the grid maximum can fall below the supremum over all `lambda`, from
/// `|d/dlambda e(lambda |y|^(2d))| = 2 pi |y|^(2d)` on `|y| <= 2^(J+1)`.
pub fn grid_error_bound<T: Real>(fam: &KernelFamily<T>, big_j: u32, f_linf: f64, grid: &LambdaGrid) -> Result<f64> {
    let mut l1 = 0.0;
    for j in 1..=big_j {
        l1 += fam.lattice_l1(j, CONVOLUTION_BUDGET)?.to_f64().unwrap();
    }
    let reach = ((big_j + 1) as f64 * 2.0 * fam.d() as f64).exp2();
    Ok(std::f64::consts::TAU * reach * l1 * f_linf * grid.max_gap())
}

/// Per-site running maximum with its argument.
#[derive(Clone)]
struct MaxAcc<T: Real> {
    val: Vec<Vec<T>>,
    arg: Vec<Vec<usize>>,
}

impl<T: Real> MaxAcc<T> {
    fn new(trials: usize, sites: usize) -> Self {
        Self {
            val: vec![vec![-T::one(); sites]; trials],
            arg: vec![vec![usize::MAX; sites]; trials],
        }
    }

    fn offer(&mut self, t: usize, site: usize, v: T, i: usize) {
        let (cv, ci) = (self.val[t][site], self.arg[t][site]);
        if v > cv || (v == cv && i < ci) {
            self.val[t][site] = v;
            self.arg[t][site] = i;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for t in 0..self.val.len() {
            for s in 0..self.val[t].len() {
                self.offer(t, s, other.val[t][s], other.arg[t][s]);
            }
        }
        self
    }
}

/// `max_{lambda in grid} |sum_{j <= J} (e(lambda |.|^(2d)) K_j) * f_t|` for
/// several inputs on a common box. Each `lambda` costs one kernel transform
/// shared by all inputs; the reduction is an exact max, so the result does
/// not depend on the worker count.
fn maximal_many<T: Real>(
    fam: &KernelFamily<T>,
    big_j: u32,
    grid: &LambdaGrid,
    fs: &[LatticeFunction<T>],
) -> Result<(PaddedConv, MaxAcc<T>)> {
    let first = fs.first().ok_or_else(|| Error::invalid("no input functions"))?;
    if first.n() != fam.n() {
        return Err(Error::invalid("dimension mismatch"));
    }
    if fs.iter().any(|f| f.center() != first.center() || f.half_width() != first.half_width()) {
        return Err(Error::invalid("all inputs must share one support box"));
    }
    let kh = KernelFamily::<T>::support_radius(big_j);
    let plan = PaddedConv::new(first.center(), first.half_width(), kh)?;
    let spectra: Vec<Vec<Complex<T>>> = fs.iter().map(|f| plan.input_spectrum(f)).collect();
    let sites: usize = plan.out_half().iter().map(|&h| (2 * h + 1) as usize).product();
    let points = grid.points();
    let trials = fs.len();
    let acc = points
        .par_iter()
        .enumerate()
        .try_fold(
            || MaxAcc::new(trials, sites),
            |mut acc, (i, &lam)| -> Result<MaxAcc<T>> {
                let (_, k) = summed_kernel(fam, big_j, lit::<T>(lam))?;
                let ks = plan.kernel_spectrum(&k);
                for (t, sp) in spectra.iter().enumerate() {
                    let prod: Vec<Complex<T>> = sp.iter().zip(&ks).map(|(a, b)| a * b).collect();
                    let out = plan.finish(prod);
                    for (s, v) in out.iter().enumerate() {
                        acc.offer(t, s, v.norm(), i);
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(|| MaxAcc::new(trials, sites), |a, b| Ok(a.merge(b)))?;
    Ok((plan, acc))
}

/// The discretised Carleson maximal function
/// `Cf(x) = max_{lambda in grid} |sum_{1 <= j <= J} apply_mj(j, lambda, f)(x)|`.
pub fn carleson_apply<T: Real>(
    fam: &KernelFamily<T>,
    f: &LatticeFunction<T>,
    big_j: u32,
    grid: &LambdaGrid,
) -> Result<CarlesonOutput<T>> {
    if big_j < 1 {
        return Err(Error::invalid("J must be at least one"));
    }
    let (plan, acc) = maximal_many(fam, big_j, grid, std::slice::from_ref(f))?;
    let vals = acc.val[0].iter().map(|&v| Complex::new(v, T::zero())).collect();
    Ok(CarlesonOutput {
        cf: plan.wrap(vals),
        argmax: acc.arg[0].clone(),
        grid_error_bound: grid_error_bound(fam, big_j, f.linf_norm().to_f64().unwrap(), grid)?,
    })
}

/// Seeded random complex input on the cube of half-width `radius`, entries
/// uniform in `[-1, 1] + i[-1, 1]`. The stream depends only on `(seed, trial)`.
pub fn random_trial<T: Real>(n: usize, radius: i64, seed: u64, trial: u64) -> LatticeFunction<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let count = ((2 * radius + 1) as usize).pow(n as u32);
    let vals = (0..count)
        .map(|_| {
            let re: f64 = rng.gen_range(-1.0..=1.0);
            let im: f64 = rng.gen_range(-1.0..=1.0);
            Complex::new(lit(re), lit(im))
        })
        .collect();
    LatticeFunction::new(vec![0; n], vec![radius; n], vals).expect("consistent box")
}

/// Outcome of [`norm_ratio_stats`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormRatioStats {
    pub max_ratio: f64,
    /// `(trial, ||Cf||_2 / ||f||_2)`; trial 0 is the point mass at the origin.
    pub table: Vec<(usize, f64)>,
    /// Grid error bound for the largest `||f||_inf` among the trials.
    pub grid_error_bound: f64,
}

/// Ratios `||Cf||_2 / ||f||_2` over seeded random inputs.
pub fn norm_ratio_stats<T: Real>(
    fam: &KernelFamily<T>,
    big_j: u32,
    grid: &LambdaGrid,
    trials: usize,
    radius: i64,
    seed: u64,
) -> Result<NormRatioStats> {
    if trials < 1 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if radius < 0 {
        return Err(Error::invalid("support radius must be non-negative"));
    }
    let n = fam.n();
    let mut fs = Vec::with_capacity(trials);
    fs.push(LatticeFunction::delta(&vec![0; n]).reboxed(vec![0; n], vec![radius; n]));
    for t in 1..trials {
        fs.push(random_trial::<T>(n, radius, seed, t as u64));
    }
    let (_, acc) = maximal_many(fam, big_j, grid, &fs)?;
    let mut table = Vec::with_capacity(trials);
    let mut linf = 0.0f64;
    for (t, f) in fs.iter().enumerate() {
        let cf2: T = acc.val[t].iter().map(|v| *v * *v).sum::<T>().sqrt();
        table.push((t, (cf2 / f.l2_norm()).to_f64().unwrap()));
        linf = linf.max(f.linf_norm().to_f64().unwrap());
    }
    let max_ratio = table.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(NormRatioStats {
        max_ratio,
        table,
        grid_error_bound: grid_error_bound(fam, big_j, linf, grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_gives_kernel_modulus() {
        let k = KernelFamily::<f64>::hilbert(1);
        let grid = LambdaGrid::uniform(16).unwrap();
        let out = carleson_apply(&k, &LatticeFunction::delta(&[0]), 3, &grid).unwrap();
        for x in -16i64..=16 {
            let want: f64 = (1..=3).map(|j| k.piece_at(j, &[x]).re).sum::<f64>().abs();
            assert!((out.cf.get(&[x]).re - want).abs() < 1e-13);
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let a = random_trial::<f64>(1, 4, 7, 3);
        let b = random_trial::<f64>(1, 4, 7, 3);
        let c = random_trial::<f64>(1, 4, 7, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
