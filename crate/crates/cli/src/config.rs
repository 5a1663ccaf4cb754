//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use carleson_core::kernels::Omega;
use carleson_core::oscint::QuadratureSpec;
use carleson_core::{ArcParams, KernelFamily64};

use crate::error::CliError;

/// Every recognised key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("kernel", "hilbert"),
    ("kernel_index", "1"),
    ("d", "1"),
    ("n", "1"),
    ("eps1", "0.015625"),
    ("eps2", "0.03125"),
    ("rescaled", "false"),
    ("seed", "0"),
    ("workers", "0"),
    ("out", "."),
    ("quad_resolution", "4"),
    ("quad_max_refinements", "6"),
    ("quad_abs_tol", "1e-11"),
    ("weyl_q_max", "64"),
    ("ortho_q_max", "30"),
    ("approx_j_min", "6"),
    ("approx_j_max", "11"),
    ("approx_q_max", "8"),
    ("approx_samples", "200"),
    ("phi_j_min", "4"),
    ("phi_j_max", "8"),
    ("phi_lambda_count", "40"),
    ("phi_xi_count", "25"),
    ("phi_lambda_span", "40"),
    ("phi_xi_span", "36"),
    ("arcs_j", "8"),
    ("arcs_lambda_count", "64"),
    ("arcs_xi_count", "16"),
    ("arcs_e_sweep", "false"),
    ("arcs_e_j_min", "6"),
    ("arcs_e_j_max", "11"),
    ("arcs_e_lambdas", "40"),
    ("arcs_e_xis", "25"),
    ("arcs_e_gate_mj", "false"),
    ("grid_size", "0"),
    ("grid_j", "4"),
    ("grid_lambda", "0"),
    ("carleson_j", "6"),
    ("carleson_compare_j", "8"),
    ("carleson_m", "4096"),
    ("carleson_trials", "50"),
    ("carleson_radius", "64"),
    ("kappa_q_max", "6"),
    ("kappa_w_max", "6"),
    ("suite", "all"),
    ("inject_fault", "false"),
];

/// Validated configuration: defaults, then the file, then flag overrides.
#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn parse_lines(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// `--key value`, `--key=value`, or a bare `--flag` meaning `true`.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let body = a
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("unexpected argument `{a}`")))?;
        if let Some((k, v)) = body.split_once('=') {
            out.push((k.replace('-', "_"), v.to_string()));
            i += 1;
        } else if i + 1 < args.len() && !args[i + 1].starts_with("--") {
            out.push((body.replace('-', "_"), args[i + 1].clone()));
            i += 2;
        } else {
            out.push((body.replace('-', "_"), "true".into()));
            i += 1;
        }
    }
    Ok(out)
}

impl Config {
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut set = |k: String, v: String| -> Result<(), CliError> {
            if !values.contains_key(&k) {
                return Err(CliError::Config(format!("unknown key `{k}`")));
            }
            values.insert(k, v);
            Ok(())
        };
        if let Some(p) = file {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            for (k, v) in parse_lines(&text, &p.display().to_string())? {
                set(k, v)?;
            }
        }
        for (k, v) in overrides {
            set(k.clone(), v.clone())?;
        }
        let cfg = Self { values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| CliError::Config(format!("unknown key `{key}`")))?;
        raw.parse()
            .map_err(|_| CliError::Config(format!("invalid value `{raw}` for `{key}`")))
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.str("out"))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.get("seed")
    }

    pub fn kernel(&self) -> Result<KernelFamily64, CliError> {
        let (n, d): (usize, u32) = (self.get("n")?, self.get("d")?);
        let idx: usize = self.get("kernel_index")?;
        let fam = match self.str("kernel") {
            "hilbert" if n == 1 => Ok(KernelFamily64::hilbert(d)),
            "hilbert" => return Err(CliError::Config("the hilbert kernel needs n = 1".into())),
            "riesz" => KernelFamily64::riesz(n, idx, d),
            "harmonic" => KernelFamily64::new(n, d, Omega::Harmonic { m: idx as u32 }),
            other => return Err(CliError::Config(format!("unknown kernel `{other}`"))),
        };
        fam.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn arc_params(&self) -> Result<ArcParams, CliError> {
        let (e1, e2): (f64, f64) = (self.get("eps1")?, self.get("eps2")?);
        let (d, n) = (self.get("d")?, self.get("n")?);
        let p = if self.get::<bool>("rescaled")? {
            ArcParams::rescaled(e1, e2, d, n)
        } else {
            ArcParams::new(e1, e2, d, n)
        };
        p.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn quad(&self) -> Result<QuadratureSpec, CliError> {
        QuadratureSpec::new(
            self.get("quad_resolution")?,
            self.get("quad_max_refinements")?,
            self.get("quad_abs_tol")?,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Type-checks every key and the cross-key constraints.
    fn validate(&self) -> Result<(), CliError> {
        for key in [
            "kernel_index", "n", "workers", "weyl_q_max", "ortho_q_max", "approx_samples",
            "phi_lambda_count", "phi_xi_count", "arcs_lambda_count", "arcs_xi_count", "arcs_e_lambdas", "arcs_e_xis", "grid_size",
            "carleson_m", "carleson_trials",
        ] {
            self.get::<usize>(key)?;
        }
        for key in [
            "d", "quad_max_refinements", "approx_j_min", "approx_j_max", "phi_j_min", "phi_j_max",
            "arcs_j", "arcs_e_j_min", "arcs_e_j_max", "grid_j", "carleson_j", "carleson_compare_j",
        ] {
            self.get::<u32>(key)?;
        }
        for key in [
            "eps1", "eps2", "quad_resolution", "quad_abs_tol", "phi_lambda_span", "phi_xi_span", "grid_lambda",
        ] {
            self.get::<f64>(key)?;
        }
        for key in ["approx_q_max", "kappa_q_max", "kappa_w_max", "carleson_radius"] {
            self.get::<i64>(key)?;
        }
        self.get::<u64>("seed")?;
        self.get::<bool>("rescaled")?;
        self.get::<bool>("inject_fault")?;
        self.get::<bool>("arcs_e_sweep")?;
        self.get::<bool>("arcs_e_gate_mj")?;
        self.kernel()?;
        self.arc_params()?;
        self.quad()?;
        if self.get::<i64>("approx_q_max")? < 1 || self.get::<i64>("kappa_q_max")? < 1 {
            return Err(CliError::Config("denominator limits must be positive".into()));
        }
        if self.get::<i64>("carleson_radius")? < 0 || self.get::<i64>("kappa_w_max")? < 0 {
            return Err(CliError::Config("radii must be non-negative".into()));
        }
        if self.get::<u32>("carleson_j")? < 1 || self.get::<u32>("carleson_compare_j")? < 1 {
            return Err(CliError::Config("Carleson scales must be at least one".into()));
        }
        if self.get::<usize>("carleson_trials")? < 1 || self.get::<usize>("carleson_m")? < 1 {
            return Err(CliError::Config("need at least one trial and one lambda".into()));
        }
        let size: usize = self.get("grid_size")?;
        let min = 1usize << (self.get::<u32>("grid_j")?.min(40) + 3);
        if size != 0 && (!size.is_power_of_two() || size < min) {
            return Err(CliError::Config(format!(
                "grid_size must be 0 or a power of two at least 2^(grid_j+3) = {min}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_comments() {
        let lines = parse_lines("# header\nd = 2 # trailing\n\n n=1\n", "t").unwrap();
        assert_eq!(lines, vec![("d".into(), "2".into()), ("n".into(), "1".into())]);
        let o = parse_overrides(&["--q-max=3".into(), "--inject-fault".into(), "--seed".into(), "9".into()]).unwrap();
        assert_eq!(o[0], ("q_max".into(), "3".into()));
        assert_eq!(o[1], ("inject_fault".into(), "true".into()));
        assert_eq!(o[2], ("seed".into(), "9".into()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::load(None, &[("bogus".into(), "1".into())]).is_err());
        assert!(Config::load(None, &[("d".into(), "x".into())]).is_err());
        let c = Config::load(None, &[("d".into(), "2".into())]).unwrap();
        assert_eq!(c.get::<u32>("d").unwrap(), 2);
    }
}
