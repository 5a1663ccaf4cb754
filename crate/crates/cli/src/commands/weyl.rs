use carleson_core::expsums::{fit_decay_exponent, verify_orthogonality};
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, write_json, Csv};

#[derive(Serialize)]
struct Summary {
    d: u32,
    n: usize,
    q_max: u64,
    delta_hat: f64,
    delta_affine: f64,
    orthogonality_q_max: u64,
    orthogonality_cases: u64,
    orthogonality_max_abs: f64,
    orthogonality_violations: usize,
}

/// Per-`q` maxima of `|S|`, the fitted decay exponent, and the orthogonality check.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let (d, n): (u32, usize) = (cfg.get("d")?, cfg.get("n")?);
    let q_max: u64 = cfg.get("weyl_q_max")?;
    let oq: u64 = cfg.get("ortho_q_max")?;
    let fit = fit_decay_exponent(q_max, d, n)?;
    let dir = cfg.out_dir();
    let mut csv = Csv::create(&dir, "weyl.csv", &["q", "max_abs_s"])?;
    for (q, m) in &fit.table {
        csv.row(&[q.to_string(), float(*m)])?;
    }
    csv.finish()?;
    let orth = verify_orthogonality(oq, d, n, 1e-9)?;
    let summary = Summary {
        d,
        n,
        q_max,
        delta_hat: fit.delta_hat,
        delta_affine: fit.delta_affine,
        orthogonality_q_max: oq,
        orthogonality_cases: orth.cases,
        orthogonality_max_abs: orth.max_abs,
        orthogonality_violations: orth.violations.len(),
    };
    write_json(&dir, "weyl_summary.json", &summary)?;
    println!("delta_hat {}", float(fit.delta_hat));
    println!("orthogonality {} cases, {} violations", orth.cases, orth.violations.len());
    if !orth.passed() {
        return Err(CliError::Verification(format!(
            "{} orthogonality violations",
            orth.violations.len()
        )));
    }
    Ok(())
}
