use std::io::{BufRead, Read, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::multipliers::{fmt_f64, read_header, read_payload, write_header, write_payload};
use crate::scalar::{lit, Real};

/// A finitely supported function on `Z^n`, stored on the box
/// `prod [center_k - half_k, center_k + half_k]`, row-major, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction<T: Real> {
    center: Vec<i64>,
    half: Vec<i64>,
    values: Vec<Complex<T>>,
}

impl<T: Real> LatticeFunction<T> {
    pub fn new(center: Vec<i64>, half: Vec<i64>, values: Vec<Complex<T>>) -> Result<Self> {
        if center.is_empty() || center.len() != half.len() {
            return Err(Error::invalid("center and half-width must have the same positive length"));
        }
        if half.iter().any(|&h| h < 0) {
            return Err(Error::invalid("half-widths must be non-negative"));
        }
        let count: u128 = half.iter().map(|&h| (2 * h + 1) as u128).product();
        if count != values.len() as u128 {
            return Err(Error::invalid(format!(
                "box holds {count} points but {} values were given",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("values must be finite"));
        }
        Ok(Self { center, half, values })
    }

    pub fn zeros(center: Vec<i64>, half: Vec<i64>) -> Self {
        let count: usize = half.iter().map(|&h| (2 * h + 1) as usize).product();
        Self {
            center,
            half,
            values: vec![Complex::new(T::zero(), T::zero()); count],
        }
    }

    /// The point mass at `at`.
    pub fn delta(at: &[i64]) -> Self {
        let n = at.len();
        Self {
            center: at.to_vec(),
            half: vec![0; n],
            values: vec![Complex::new(T::one(), T::zero())],
        }
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    pub fn half_width(&self) -> &[i64] {
        &self.half
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    /// Side lengths of the box.
    pub fn dims(&self) -> Vec<usize> {
        self.half.iter().map(|&h| (2 * h + 1) as usize).collect()
    }

    /// Lowest corner of the box.
    pub fn origin(&self) -> Vec<i64> {
        self.center.iter().zip(&self.half).map(|(c, h)| c - h).collect()
    }

    fn index_of(&self, x: &[i64]) -> Option<usize> {
        let mut f = 0usize;
        for k in 0..self.n() {
            let off = x[k] - (self.center[k] - self.half[k]);
            let side = 2 * self.half[k] + 1;
            if off < 0 || off >= side {
                return None;
            }
            f = f * side as usize + off as usize;
        }
        Some(f)
    }

    /// Value at `x` (zero outside the box).
    pub fn get(&self, x: &[i64]) -> Complex<T> {
        self.index_of(x)
            .map(|f| self.values[f])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Coordinates of the `f`-th stored point.
    pub fn point(&self, mut f: usize) -> Vec<i64> {
        let n = self.n();
        let mut x = vec![0i64; n];
        for k in (0..n).rev() {
            let side = (2 * self.half[k] + 1) as usize;
            x[k] = (f % side) as i64 + self.center[k] - self.half[k];
            f /= side;
        }
        x
    }

    pub fn l2_norm(&self) -> T {
        self.values.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn l1_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).sum()
    }

    pub fn linf_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// `f(. - shift)`.
    pub fn translate(&self, shift: &[i64]) -> Self {
        Self {
            center: self.center.iter().zip(shift).map(|(c, s)| c + s).collect(),
            half: self.half.clone(),
            values: self.values.clone(),
        }
    }

    /// Restriction to (or zero-extension onto) another box.
    pub fn reboxed(&self, center: Vec<i64>, half: Vec<i64>) -> Self {
        let mut out = Self::zeros(center, half);
        for f in 0..out.values.len() {
            let x = out.point(f);
            out.values[f] = self.get(&x);
        }
        out
    }

    /// Pointwise sum on the smallest box containing both supports.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::invalid("dimension mismatch"));
        }
        let (mut center, mut half) = (Vec::new(), Vec::new());
        for k in 0..self.n() {
            let lo = (self.center[k] - self.half[k]).min(other.center[k] - other.half[k]);
            let hi = (self.center[k] + self.half[k]).max(other.center[k] + other.half[k]);
            // keep an odd side by growing the upper end if needed
            let hi = if (hi - lo) % 2 == 1 { hi + 1 } else { hi };
            center.push((lo + hi) / 2);
            half.push((hi - lo) / 2);
        }
        let mut out = Self::zeros(center, half);
        for f in 0..out.values.len() {
            let x = out.point(f);
            out.values[f] = self.get(&x) + other.get(&x);
        }
        Ok(out)
    }

    /// CSV with columns `x0..x{n-1}, re, im`, one row per stored point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut head: Vec<String> = (0..self.n()).map(|k| format!("x{k}")).collect();
        head.push("re".into());
        head.push("im".into());
        writeln!(w, "{}", head.join(","))?;
        for (f, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.point(f).iter().map(|x| x.to_string()).collect();
            row.push(fmt_f64(v.re.to_f64().unwrap()));
            row.push(fmt_f64(v.im.to_f64().unwrap()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV layout of [`write_csv`]; missing points are zero.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV".into()))??;
        let cols: Vec<&str> = head.split(',').map(str::trim).collect();
        if cols.len() < 3 || cols[cols.len() - 2] != "re" || cols[cols.len() - 1] != "im" {
            return Err(Error::Format("CSV header must end with re,im".into()));
        }
        let n = cols.len() - 2;
        let mut pts: Vec<(Vec<i64>, Complex<T>)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n + 2 {
                return Err(Error::Format(format!("row {} has {} fields", lineno + 2, fields.len())));
            }
            let bad = |e: String| Error::Format(format!("row {}: {e}", lineno + 2));
            let x = fields[..n]
                .iter()
                .map(|s| s.parse::<i64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let re: f64 = fields[n].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            let im: f64 = fields[n + 1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            pts.push((x, Complex::new(lit(re), lit(im))));
        }
        if pts.is_empty() {
            return Err(Error::Format("CSV has no data rows".into()));
        }
        let mut lo = pts[0].0.clone();
        let mut hi = pts[0].0.clone();
        for (x, _) in &pts {
            for k in 0..n {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        let mut center = Vec::new();
        let mut half = Vec::new();
        for k in 0..n {
            let h = if (hi[k] - lo[k]) % 2 == 1 { hi[k] + 1 } else { hi[k] };
            center.push((lo[k] + h) / 2);
            half.push((h - lo[k]) / 2);
        }
        let mut out = Self::zeros(center, half);
        for (x, v) in pts {
            let f = out.index_of(&x).expect("point inside bounding box");
            out.values[f] = v;
        }
        Ok(out)
    }

    /// Writes the flat binary layout shared with multiplier grids. The box
    /// must be a cube of side `N` centred at the origin; `j` and `lambda` are
    /// written as zero.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let h = self.half[0];
        if self.center.iter().any(|&c| c != 0) || self.half.iter().any(|&v| v != h) {
            return Err(Error::Format(
                "binary layout needs a cube centred at the origin".into(),
            ));
        }
        write_header(&mut w, self.n() as u64, (2 * h + 1) as u64, 0, 0.0)?;
        write_payload(&mut w, &self.values)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let (n, side, _, _) = read_header(&mut r)?;
        if side % 2 == 0 {
            return Err(Error::Format("lattice function side must be odd".into()));
        }
        let count = (side as u128)
            .checked_pow(n as u32)
            .filter(|c| *c <= 1 << 32)
            .ok_or_else(|| Error::Format("oversized lattice function".into()))?;
        let values = read_payload(&mut r, count as usize)?;
        let h = (side / 2) as i64;
        Self::new(vec![0; n as usize], vec![h; n as usize], values)
    }
}

/// The parameter grid `lambda_i = i/M`, `i in [M]`, optionally refined by
/// extra points near rationals with small denominators.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaGrid {
    m: usize,
    extra: Vec<f64>,
}

impl LambdaGrid {
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("grid size M must be at least one"));
        }
        Ok(Self { m, extra: Vec::new() })
    }

    /// Adds `2 count` points at distances `k width / count` (`1 <= k <= count`)
    /// on both sides of every `a/q` with `q <= q_max`, reduced into `[0, 1)`.
    pub fn refined_near_rationals(mut self, q_max: u64, width: f64, count: usize) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid("refinement width must be positive"));
        }
        let farey = crate::rationals::farey_set(q_max)?;
        for r in farey {
            for k in 1..=count {
                let off = width * k as f64 / count as f64;
                for t in [r.to_f64() - off, r.to_f64() + off] {
                    self.extra.push(t.rem_euclid(1.0));
                }
            }
        }
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Largest distance from any `lambda` to the grid, an upper bound.
    pub fn max_gap(&self) -> f64 {
        0.5 / self.m as f64
    }

    /// All grid points, uniform points first, then extras in insertion order.
    pub fn points(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.m).map(|i| i as f64 / self.m as f64).collect();
        out.extend(&self.extra);
        out
    }
}
