use carleson_core::expsums::{fit_decay_exponent, verify_orthogonality};
use carleson_core::multipliers::{script_l, script_l_sharp, CutoffSpec};
use carleson_core::operators::{kappa_forms, rm_bound};
use carleson_core::oscint::{phi, verify_phi_decay, GridScaling};
use carleson_core::rationals::{gcd, gcd_all, reduce, xj_candidates};
use carleson_core::{ArcParams, C64, KernelFamily64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ball_points, fractions};
use crate::config::Config;
use crate::error::CliError;
use crate::output::Csv;

pub const SUITES: &[&str] = &[
    "orthogonality",
    "partition",
    "phi",
    "disjointness",
    "factorization",
    "kappa",
    "rm",
    "decay",
];

type Outcome = Result<(bool, String), CliError>;

fn orthogonality(cfg: &Config) -> Outcome {
    let (d, n): (u32, usize) = (cfg.get("d")?, cfg.get("n")?);
    let q_max = cfg.get::<u64>("ortho_q_max")?.min(if n == 1 { 50 } else { 20 });
    let r = verify_orthogonality(q_max, d, n, 1e-9)?;
    Ok((r.passed(), format!("{} cases, max |S| {:e}", r.cases, r.max_abs)))
}

fn partition(fam: &KernelFamily64) -> Outcome {
    let big = 14u32;
    let mut worst = 0.0f64;
    for i in 0..4000 {
        let r = 1.0 + i as f64 * ((big - 1) as f64).exp2() / 4000.0;
        let s: f64 = (1..=big).map(|j| fam.radial_weight(j, r)).sum();
        worst = worst.max((s - 1.0).abs());
    }
    Ok((worst <= 1e-13, format!("max |sum_j psi_j - 1| {worst:e}")))
}

fn phi_symmetry(cfg: &Config, fam: &KernelFamily64, rng: &mut ChaCha8Rng) -> Outcome {
    if fam.n() > 3 {
        return Ok((true, "skipped for n > 3".into()));
    }
    let quad = cfg.quad()?;
    let parity = if fam.omega().is_odd() { -1.0 } else { 1.0 };
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let j = rng.gen_range(2..7u32);
        let lam = rng.gen_range(-1.0..1.0) * (-2.0 * fam.d() as f64 * j as f64).exp2() * 8.0;
        let xi: Vec<f64> = (0..fam.n()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let a = phi(fam, j, lam, &xi, &quad)?;
        let b = phi(fam, j, lam, &neg, &quad)?;
        worst = worst.max((b - a * parity).norm());
        if fam.omega().is_real() {
            let c = phi(fam, j, -lam, &neg, &quad)?;
            worst = worst.max((c - a.conj()).norm());
        }
    }
    Ok((worst <= 1e-9, format!("max symmetry defect {worst:e}")))
}

/// Random `(alpha, beta)` with `beta in B_s(alpha)`, and `xi` inside the
/// `chi_s` support around `beta`.
fn sample_arc(rng: &mut ChaCha8Rng, s: u32, n: usize) -> ((i64, i64), Vec<f64>) {
    let (lo, hi) = (1i64 << (s - 1), 1i64 << s);
    loop {
        let q = rng.gen_range(lo..hi);
        let divs: Vec<i64> = (1..=q).filter(|v| q % v == 0).collect();
        let q0 = divs[rng.gen_range(0..divs.len())];
        let a0 = rng.gen_range(0..q0);
        if gcd(a0, q0) != 1 {
            continue;
        }
        let b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        if gcd_all(b.iter().copied().chain([q / q0])) != 1 {
            continue;
        }
        let rad = 0.5 * (-10.0 * s as f64).exp2();
        let xi = b
            .iter()
            .map(|&bk| bk as f64 / q as f64 + rad * rng.gen_range(-1.0..1.0) / (n as f64).sqrt())
            .collect();
        return ((a0, q0), xi);
    }
}

fn disjointness(cfg: &Config, rng: &mut ChaCha8Rng) -> Outcome {
    let n: usize = cfg.get("n")?;
    let params = ArcParams::rescaled(0.25, 0.5, cfg.get("d")?, n)?;
    let mut worst = 0usize;
    for _ in 0..2000 {
        let j = rng.gen_range(4..14u32);
        worst = worst.max(xj_candidates(rng.gen_range(0.0..1.0), j, &params).len());
    }
    let one = |_: &[f64]| C64::new(1.0, 0.0);
    for s in 1..=3 {
        let cut = CutoffSpec::new(s, n)?;
        for _ in 0..500 {
            let (_, xi) = sample_arc(rng, s, n);
            worst = worst.max(script_l_sharp(s, &one, &xi, &cut)?.terms);
        }
    }
    Ok((worst <= 1, format!("largest candidate count {worst}")))
}

fn factorization(cfg: &Config, rng: &mut ChaCha8Rng) -> Outcome {
    let (d, n): (u32, usize) = (cfg.get("d")?, cfg.get("n")?);
    let fault: bool = cfg.get("inject_fault")?;
    let one = |_: &[f64]| C64::new(1.0, 0.0);
    let mut worst = 0.0f64;
    for s in 1..=3 {
        let cut = if fault {
            // chi~ now vanishes on part of supp chi
            CutoffSpec::with_radii_unchecked(s, n, ((n as f64).sqrt() / 4.0, 0.5), (0.125, 0.25))
        } else {
            CutoffSpec::new(s, n)?
        };
        for t in 0..300 {
            let ((a0, q0), xi) = sample_arc(rng, s, n);
            let freq: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0f64).round()).collect();
            let amp = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let trig = move |x: &[f64]| {
                let ph: f64 = x.iter().zip(&freq).map(|(a, b)| a * b).sum::<f64>() * 1.0e3;
                amp * C64::from_polar(1.0, std::f64::consts::TAU * ph) + C64::new(0.5, 0.0)
            };
            let xi = if t % 5 == 0 { (0..n).map(|_| rng.gen_range(0.0..1.0)).collect() } else { xi };
            let alpha = reduce(a0, q0)?;
            let lhs = script_l(s, &alpha, &trig, &xi, &cut, d)?.value;
            let rhs = script_l(s, &alpha, &one, &xi, &cut, d)?.value * script_l_sharp(s, &trig, &xi, &cut)?.value;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok((worst <= 1e-10, format!("max residual {worst:e}")))
}

fn kappa(cfg: &Config) -> Outcome {
    let (d, n): (u32, usize) = (cfg.get("d")?, cfg.get("n")?);
    let fr = fractions(if n == 1 { 8 } else { 4 });
    let ws = ball_points(n, 8);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for &(a, q) in &fr {
        for &(a2, q2) in &fr {
            for w in &ws {
                match kappa_forms::<f64>(reduce(a, q)?, reduce(a2, q2)?, w, d, n) {
                    Ok(k) => worst = worst.max(k.discrepancy),
                    Err(carleson_core::Error::Mismatch { discrepancy, .. }) => worst = worst.max(discrepancy),
                    Err(e) => return Err(e.into()),
                }
                count += 1;
            }
        }
    }
    Ok((worst <= 1e-9, format!("{count} evaluations, max discrepancy {worst:e}")))
}

fn rm(rng: &mut ChaCha8Rng) -> Outcome {
    let mut ok = true;
    for s in 0..=8u32 {
        for _ in 0..1000 {
            let a: Vec<C64> = (0..(1usize << s) + 1)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let (l, r) = rm_bound(&a, rng.gen_range(0..a.len()))?;
            ok &= l <= r * (1.0 + 1e-12);
        }
    }
    let h = |v: [f64; 3]| rm_bound(&v.map(|x| C64::new(x, 0.0)), 0);
    let (_, r1) = h([0.0, 1.0, 2.0])?;
    let (_, r2) = h([0.0, 1.0, 0.0])?;
    ok &= (r1 - 2f64.sqrt() * (2f64.sqrt() + 2.0)).abs() <= 1e-12 && (r2 - 2.0).abs() <= 1e-12;
    Ok((ok, format!("hand cases {r1:.12} {r2:.12}")))
}

fn decay(cfg: &Config, fam: &KernelFamily64) -> Outcome {
    let fit = fit_decay_exponent(64, 1, 1)?;
    let mut ok = fit.delta_hat >= 0.4;
    let mut msg = format!("delta_hat {:.4}", fit.delta_hat);
    if fam.n() <= 3 {
        let grid: Vec<(f64, Vec<f64>)> = (0..10)
            .flat_map(|i| (0..10).map(move |k| (-20.0 + 4.4 * i as f64, (-18.0 + 4.0 * k as f64))))
            .map(|(l, x)| {
                let mut xi = vec![0.0; fam.n()];
                xi[0] = x;
                (l, xi)
            })
            .collect();
        let r = verify_phi_decay(fam, &[4, 5, 6], &grid, GridScaling::ScaleRelative, &cfg.quad()?)?;
        let lo = r.per_j.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        ok &= r.c_vdc.is_finite() && r.c_vdc < 2.0 * lo;
        msg.push_str(&format!(", C_vdc {:.4}", r.c_vdc));
    }
    Ok((ok, msg))
}

/// Runs the selected invariant suites; fails if any of them fails.
pub fn run(cfg: &Config) -> Result<(), CliError> {
    let sel = cfg.str("suite");
    let chosen: Vec<&str> = if sel == "all" {
        SUITES.to_vec()
    } else {
        let v: Vec<&str> = sel.split(',').map(str::trim).collect();
        if let Some(bad) = v.iter().find(|s| !SUITES.contains(s)) {
            return Err(CliError::Config(format!("unknown suite `{bad}`")));
        }
        v
    };
    let fam = cfg.kernel()?;
    let seed = cfg.seed()?;
    let mut csv = Csv::create(&cfg.out_dir(), "verify.csv", &["suite", "passed", "detail"])?;
    let mut failed = Vec::new();
    for (i, name) in SUITES.iter().enumerate() {
        if !chosen.contains(name) {
            continue;
        }
        let mut rng = super::rng(seed, 100 + i as u64);
        let (pass, detail) = match *name {
            "orthogonality" => orthogonality(cfg),
            "partition" => partition(&fam),
            "phi" => phi_symmetry(cfg, &fam, &mut rng),
            "disjointness" => disjointness(cfg, &mut rng),
            "factorization" => factorization(cfg, &mut rng),
            "kappa" => kappa(cfg),
            "rm" => rm(&mut rng),
            _ => decay(cfg, &fam),
        }?;
        println!("suite {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        csv.row(&[name.to_string(), pass.to_string(), format!("\"{detail}\"")])?;
        if !pass {
            failed.push(*name);
        }
    }
    csv.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("suites failed: {}", failed.join(", "))))
    }
}
