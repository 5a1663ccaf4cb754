use std::fs::File;
use std::io::BufWriter;

use carleson_core::multipliers::{e_decay_sweep, e_j, m_grid, DEFAULT_LATTICE_BUDGET};
use carleson_core::rationals::{in_mj, in_xj};
use carleson_core::CutoffSpec64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, write_json, Csv};

#[derive(Serialize)]
struct EDecaySummary {
    j_min: u32,
    j_max: u32,
    eps1: f64,
    gate_mj: bool,
    gamma_hat: f64,
    strictly_decreasing: bool,
}

/// Arc classification of `(lambda, xi)` on a uniform grid at scale `arcs_j`,
/// with `|E_{j,lambda}(xi)|`; optionally a sweep of `max |E|` over `j` and a
/// dump of the sampled multiplier grid.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let fam = cfg.kernel()?;
    let quad = cfg.quad()?;
    let params = cfg.arc_params()?;
    let n = fam.n();
    let j: u32 = cfg.get("arcs_j")?;
    let (nl, nx): (usize, usize) = (cfg.get("arcs_lambda_count")?, cfg.get("arcs_xi_count")?);
    let cut = CutoffSpec64::new(1, n)?;
    let points: Vec<(f64, f64)> = (0..nl)
        .flat_map(|i| (0..nx).map(move |k| (i as f64 / nl as f64, k as f64 / nx as f64)))
        .collect();
    let rows: Vec<Result<Vec<String>, CliError>> = points
        .par_iter()
        .map(|&(lam, x)| {
            let xi = vec![x; n];
            let xa = in_xj(lam, j, &params);
            let ma = in_mj(lam, &xi, j, &params);
            let e = e_j(&fam, j, lam, &xi, &params, &cut, &quad, DEFAULT_LATTICE_BUDGET)?;
            let mut cells = vec![j.to_string(), float(lam)];
            cells.extend(xi.iter().map(|&v| float(v)));
            cells.push(xa.map(|r| r.to_string()).unwrap_or_default());
            cells.push(ma.map(|p| p.q().to_string()).unwrap_or_default());
            cells.push(e.terms.to_string());
            cells.push(float(e.value.norm()));
            Ok(cells)
        })
        .collect();
    let dir = cfg.out_dir();
    let mut header = vec!["j".to_string(), "lambda".into()];
    header.extend((0..n).map(|k| format!("xi{k}")));
    header.extend(["xj_alpha", "mj_q", "l_terms", "e_abs"].map(String::from));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::create(&dir, "arcs.csv", &hdr)?;
    let mut in_x = 0usize;
    for r in rows {
        let cells = r?;
        if !cells[2 + n].is_empty() {
            in_x += 1;
        }
        csv.row(&cells)?;
    }
    csv.finish()?;
    println!("points {} in_xj {in_x}", points.len());

    if cfg.get::<bool>("arcs_e_sweep")? {
        let (j0, j1): (u32, u32) = (cfg.get("arcs_e_j_min")?, cfg.get("arcs_e_j_max")?);
        let js: Vec<u32> = (j0..=j1).collect();
        let gate: bool = cfg.get("arcs_e_gate_mj")?;
        let rep = e_decay_sweep(
            &fam,
            &js,
            &params,
            &cut,
            &quad,
            cfg.get("arcs_e_lambdas")?,
            cfg.get("arcs_e_xis")?,
            gate,
            cfg.seed()?,
        )?;
        let mut csv = Csv::create(&dir, "e_decay.csv", &["j", "samples", "max_e_abs"])?;
        for (jj, count, m) in &rep.per_j {
            csv.row(&[jj.to_string(), count.to_string(), float(*m)])?;
            println!("j {jj} max_e_abs {}", float(*m));
        }
        csv.finish()?;
        let summary = EDecaySummary {
            j_min: j0,
            j_max: j1,
            eps1: params.eps1,
            gate_mj: gate,
            gamma_hat: rep.gamma_hat,
            strictly_decreasing: rep.strictly_decreasing,
        };
        write_json(&dir, "e_decay.json", &summary)?;
        println!("gamma_hat {}", float(rep.gamma_hat));
    }

    let size: usize = cfg.get("grid_size")?;
    if size > 0 {
        let g = m_grid(&fam, cfg.get("grid_j")?, cfg.get::<f64>("grid_lambda")?, size, DEFAULT_LATTICE_BUDGET)?;
        g.write_binary(BufWriter::new(File::create(dir.join("m_grid.bin"))?))?;
        if size.pow(n as u32) <= 1 << 16 {
            g.write_csv(BufWriter::new(File::create(dir.join("m_grid.csv"))?))?;
        }
        println!("grid {size}^{n} written");
    }
    Ok(())
}
