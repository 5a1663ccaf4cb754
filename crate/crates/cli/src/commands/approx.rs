use carleson_core::multipliers::approx_error;
use carleson_core::rationals::gcd;
use carleson_core::ArcPair;
use rand::Rng;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, Csv};

/// Approximation-error sweep over `j`, `q` and random admissible `(lambda, xi)`.
///
/// For each sample `delta` is drawn log-uniformly from `(2^-j, 1/2)`, then
/// `|lambda - a/q| <= delta 2^(-(2d-1)j)` and `|xi - b/q| <= delta` uniformly.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let fam = cfg.kernel()?;
    let quad = cfg.quad()?;
    let (n, d) = (fam.n(), fam.d());
    let (j_min, j_max): (u32, u32) = (cfg.get("approx_j_min")?, cfg.get("approx_j_max")?);
    let q_max: i64 = cfg.get("approx_q_max")?;
    let samples: usize = cfg.get("approx_samples")?;
    let mut rng = super::rng(cfg.seed()?, 1);
    let dir = cfg.out_dir();
    let mut csv = Csv::create(&dir, "approx.csv", &["j", "q", "delta", "err_abs", "bound_ratio"])?;
    let mut per_j = Csv::create(&dir, "approx_max.csv", &["j", "max_bound_ratio"])?;
    for j in j_min..=j_max {
        let mut best = 0.0f64;
        for q in 1..=q_max {
            if j < 2 || q as u128 > 1u128 << (j - 2) {
                continue;
            }
            let mut done = 0;
            while done < samples {
                let a = rng.gen_range(0..q);
                if gcd(a, q) != 1 {
                    continue;
                }
                let b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
                let delta = rng.gen_range(-(j as f64)..-1.0f64).exp2();
                let nu = delta * (-((2 * d - 1) as f64) * j as f64).exp2() * rng.gen_range(-1.0..1.0);
                let dir_eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let scale = delta / (n as f64).sqrt();
                let pair = ArcPair::new(a, &b, q)?;
                let lam = a as f64 / q as f64 + nu;
                let xi: Vec<f64> = b.iter().zip(&dir_eta).map(|(&bk, e)| bk as f64 / q as f64 + scale * e).collect();
                let r = approx_error(&fam, j, &pair, lam, &xi, &quad)?;
                best = best.max(r.bound_ratio);
                csv.row(&[j.to_string(), q.to_string(), float(r.delta), float(r.err.norm()), float(r.bound_ratio)])?;
                done += 1;
            }
        }
        per_j.row(&[j.to_string(), float(best)])?;
        println!("j {j} max_bound_ratio {}", float(best));
    }
    csv.finish()?;
    per_j.finish()
}
