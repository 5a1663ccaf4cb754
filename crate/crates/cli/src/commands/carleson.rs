use carleson_core::operators::norm_ratio_stats;
use carleson_core::LambdaGrid;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, write_json, Csv};

#[derive(Serialize)]
struct Summary {
    j: u32,
    compare_j: u32,
    lambda_grid: usize,
    trials: usize,
    support_radius: i64,
    max_ratio: f64,
    max_ratio_compare: f64,
    j_stabilization_delta: f64,
    grid_error_bound: f64,
    grid_error_bound_compare: f64,
    delta0_ratio: f64,
    delta0_reference: f64,
}

/// `||sum_{j <= J} K_j||_2` by direct summation.
fn kernel_sum_norm(fam: &carleson_core::KernelFamily64, big_j: u32) -> f64 {
    let n = fam.n();
    let h = 1i64 << (big_j + 1);
    let axis: Vec<i64> = (-h..=h).collect();
    let pts = carleson_core::rationals::cartesian(&vec![axis; n]);
    let mut acc = 0.0;
    for p in pts {
        let v: carleson_core::C64 = (1..=big_j).map(|j| fam.piece_at(j, &p)).sum();
        acc += v.norm_sqr();
    }
    acc.sqrt()
}

/// Norm ratios `||Cf||_2 / ||f||_2` at two maximal scales.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let fam = cfg.kernel()?;
    let (j, jc): (u32, u32) = (cfg.get("carleson_j")?, cfg.get("carleson_compare_j")?);
    let m: usize = cfg.get("carleson_m")?;
    let trials: usize = cfg.get("carleson_trials")?;
    let radius: i64 = cfg.get("carleson_radius")?;
    let seed = cfg.seed()?;
    let grid = LambdaGrid::uniform(m)?;
    let a = norm_ratio_stats(&fam, j, &grid, trials, radius, seed)?;
    let b = norm_ratio_stats(&fam, jc, &grid, trials, radius, seed)?;
    let dir = cfg.out_dir();
    let mut csv = Csv::create(&dir, "carleson.csv", &["big_j", "trial", "ratio"])?;
    for (jj, s) in [(j, &a), (jc, &b)] {
        for (t, r) in &s.table {
            csv.row(&[jj.to_string(), t.to_string(), float(*r)])?;
        }
    }
    csv.finish()?;
    let summary = Summary {
        j,
        compare_j: jc,
        lambda_grid: m,
        trials,
        support_radius: radius,
        max_ratio: a.max_ratio,
        max_ratio_compare: b.max_ratio,
        j_stabilization_delta: (b.max_ratio - a.max_ratio) / a.max_ratio,
        grid_error_bound: a.grid_error_bound,
        grid_error_bound_compare: b.grid_error_bound,
        delta0_ratio: a.table[0].1,
        delta0_reference: kernel_sum_norm(&fam, j),
    };
    write_json(&dir, "carleson.json", &summary)?;
    println!("max_ratio J={j} {} J={jc} {}", float(a.max_ratio), float(b.max_ratio));
    println!("j_stabilization_delta {}", float(summary.j_stabilization_delta));
    Ok(())
}
