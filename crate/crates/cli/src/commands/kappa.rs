use carleson_core::operators::kappa_forms_many;
use carleson_core::rationals::reduce;
use rayon::prelude::*;

use super::{ball_points, fractions};
use crate::config::Config;
use crate::error::CliError;
use crate::output::{float, Csv};

/// Both forms of `kappa` for every pair of reduced fractions with
/// denominators up to `kappa_q_max` and every `|w| <= kappa_w_max`.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let (d, n): (u32, usize) = (cfg.get("d")?, cfg.get("n")?);
    let fr = fractions(cfg.get("kappa_q_max")?);
    let ws = ball_points(n, cfg.get("kappa_w_max")?);
    let pairs: Vec<((i64, i64), (i64, i64))> = fr.iter().flat_map(|&x| fr.iter().map(move |&y| (x, y))).collect();
    let rows: Vec<Result<Vec<Vec<String>>, CliError>> = pairs
        .par_iter()
        .map(|&((a, q), (a2, q2))| {
            let ks = kappa_forms_many::<f64>(reduce(a, q)?, reduce(a2, q2)?, &ws, d, n)?;
            let mut out = Vec::with_capacity(ws.len());
            for (w, k) in ws.iter().zip(ks) {
                let mut cells = vec![a.to_string(), q.to_string(), a2.to_string(), q2.to_string()];
                cells.extend(w.iter().map(|v| v.to_string()));
                cells.extend([
                    float(k.beta_form.re),
                    float(k.beta_form.im),
                    float(k.closed_form.re),
                    float(k.closed_form.im),
                    float(k.discrepancy),
                ]);
                out.push(cells);
            }
            Ok(out)
        })
        .collect();
    let mut header = vec!["a".to_string(), "q".into(), "a_prime".into(), "q_prime".into()];
    header.extend((0..n).map(|k| format!("w{k}")));
    header.extend(["beta_re", "beta_im", "closed_re", "closed_im", "discrepancy"].map(String::from));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::create(&cfg.out_dir(), "kappa.csv", &hdr)?;
    let mut count = 0usize;
    let mut worst = 0.0f64;
    for r in rows {
        for cells in r? {
            worst = worst.max(cells.last().unwrap().parse().unwrap_or(f64::INFINITY));
            csv.row(&cells)?;
            count += 1;
        }
    }
    csv.finish()?;
    println!("kappa evaluations {count} max_discrepancy {}", float(worst));
    Ok(())
}
