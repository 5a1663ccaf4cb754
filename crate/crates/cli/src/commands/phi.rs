use carleson_core::oscint::phi_with_estimate;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, Csv};

/// `Phi_{j,lambda}(xi)` on the scale-relative grid `lambda = L 2^(-2dj)`,
/// `xi = (X 2^-j, 0, ..., 0)`, with the van der Corput weight
/// `|Phi| (1 + |L| + |X|)^(1/(2d))` and its maximum per `j`.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let fam = cfg.kernel()?;
    let quad = cfg.quad()?;
    let (n, d) = (fam.n(), fam.d());
    let (j_min, j_max): (u32, u32) = (cfg.get("phi_j_min")?, cfg.get("phi_j_max")?);
    let (nl, nx): (usize, usize) = (cfg.get("phi_lambda_count")?, cfg.get("phi_xi_count")?);
    let (sl, sx): (f64, f64) = (cfg.get("phi_lambda_span")?, cfg.get("phi_xi_span")?);
    let axis = |k: usize, count: usize, span: f64| {
        if count <= 1 {
            0.0
        } else {
            -span + 2.0 * span * k as f64 / (count - 1) as f64
        }
    };
    let grid: Vec<(f64, f64)> = (0..nl)
        .flat_map(|i| (0..nx).map(move |k| (axis(i, nl, sl), axis(k, nx, sx))))
        .collect();
    let dir = cfg.out_dir();
    let mut header = vec!["j".to_string(), "lambda".into()];
    header.extend((0..n).map(|k| format!("xi{k}")));
    header.extend(["re", "im", "error_estimate", "weighted"].map(String::from));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::create(&dir, "phi.csv", &hdr)?;
    let mut summary = Csv::create(&dir, "phi_max.csv", &["j", "c_vdc"])?;
    for j in j_min..=j_max {
        let big = (j as f64).exp2();
        let big2d = big.powi(2 * d as i32);
        let rows: Vec<Result<(f64, Vec<f64>, carleson_core::oscint::PhiValue<f64>, f64), CliError>> = grid
            .par_iter()
            .map(|&(l, x)| {
                let lam = l / big2d;
                let mut xi = vec![0.0; n];
                xi[0] = x / big;
                let v = phi_with_estimate(&fam, j, lam, &xi, &quad)?;
                let w = v.value.norm() * (1.0 + l.abs() + x.abs()).powf(1.0 / (2 * d) as f64);
                Ok((lam, xi, v, w))
            })
            .collect();
        let mut best = 0.0f64;
        for r in rows {
            let (lam, xi, v, w) = r?;
            best = best.max(w);
            let mut cells = vec![j.to_string(), float(lam)];
            cells.extend(xi.iter().map(|&x| float(x)));
            cells.extend([float(v.value.re), float(v.value.im), float(v.error_estimate), float(w)]);
            csv.row(&cells)?;
        }
        summary.row(&[j.to_string(), float(best)])?;
        println!("j {j} c_vdc {}", float(best));
    }
    csv.finish()?;
    summary.finish()
}
