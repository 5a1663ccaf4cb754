//! Exact rational arithmetic and the Diophantine sets used by the arc
//! decomposition: Farey sets, the neighbourhoods `X_j` of small-denominator
//! rationals, the rational pairs `R_s`, the major arcs, Dirichlet
//! approximation, and a few divisor-theoretic helpers.
//!
//! Integers are `i64`/`u64`; intermediate products use `i128`/`u128` and any
//! overflow is reported rather than silently widened.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{check_budget, Error, Result};

/// Greatest common divisor of two integers (always non-negative).
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Greatest common divisor of a list of integers; `gcd() = 0`.
pub fn gcd_all<I: IntoIterator<Item = i64>>(xs: I) -> i64 {
    xs.into_iter().fold(0, gcd)
}

/// Least common multiple, with overflow reported.
pub fn lcm(a: u128, b: u128) -> Result<u128> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    let (mut x, mut y) = (a, b);
    while y != 0 {
        let t = x % y;
        x = y;
        y = t;
    }
    (a / x)
        .checked_mul(b)
        .ok_or_else(|| Error::Overflow(format!("lcm({a}, {b})")))
}

/// A fraction `num/den` in lowest terms with `den >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReducedRational {
    num: i64,
    den: i64,
}

impl ReducedRational {
    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The representative of `self mod 1` in `[0, 1)`.
    pub fn fract(&self) -> Self {
        Self {
            num: self.num.rem_euclid(self.den),
            den: self.den,
        }
    }

    /// `|x - num/den|` evaluated as `|x den - num| / den` with a fused
    /// multiply-add, which keeps full relative accuracy near the rational.
    pub fn distance_from(&self, x: f64) -> f64 {
        let d = x.mul_add(self.den as f64, -(self.num as f64));
        d.abs() / self.den as f64
    }
}

impl PartialOrd for ReducedRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReducedRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.num as i128 * other.den as i128;
        let r = other.num as i128 * self.den as i128;
        l.cmp(&r)
    }
}

impl fmt::Display for ReducedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Brings `num/den` to lowest terms with a positive denominator.
pub fn reduce(num: i64, den: i64) -> Result<ReducedRational> {
    if den == 0 {
        return Err(Error::invalid("zero denominator"));
    }
    let g = gcd(num, den);
    let (mut n, mut d) = (num / g, den / g);
    if d < 0 {
        n = n
            .checked_neg()
            .ok_or_else(|| Error::Overflow("negating numerator".into()))?;
        d = -d;
    }
    Ok(ReducedRational { num: n, den: d })
}

/// A rational pair `(a/q, b/q)` with `gcd(a, b_1, .., b_n, q) = 1`, stored in
/// the canonical form `a, b_k in [0, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcPair {
    q: i64,
    a: i64,
    b: Vec<i64>,
}

impl ArcPair {
    /// Builds the canonical representative, rejecting pairs whose joint gcd
    /// with `q` is not one.
    pub fn new(a: i64, b: &[i64], q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::invalid(format!("denominator {q} must be positive")));
        }
        if b.is_empty() {
            return Err(Error::invalid("dimension must be at least one"));
        }
        let a = a.rem_euclid(q);
        let b: Vec<i64> = b.iter().map(|x| x.rem_euclid(q)).collect();
        if gcd_all(std::iter::once(a).chain(b.iter().copied()).chain([q])) != 1 {
            return Err(Error::invalid(format!(
                "gcd(a, b, q) != 1 for a={a}, b={b:?}, q={q}"
            )));
        }
        Ok(Self { q, a, b })
    }

    /// The trivial pair `(0, 0)` with `q = 1` in dimension `n`.
    pub fn origin(n: usize) -> Self {
        Self {
            q: 1,
            a: 0,
            b: vec![0; n],
        }
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// `alpha = a/q` in lowest terms.
    pub fn alpha(&self) -> ReducedRational {
        reduce(self.a, self.q).expect("q >= 1")
    }

    /// The coordinates of `beta = b/q` in lowest terms.
    pub fn beta(&self) -> Vec<ReducedRational> {
        self.b
            .iter()
            .map(|&b| reduce(b, self.q).expect("q >= 1"))
            .collect()
    }

    /// Whether `gcd(a, q) = 1`, i.e. `alpha` has exact denominator `q`.
    pub fn alpha_is_reduced(&self) -> bool {
        gcd(self.a, self.q) == 1
    }

    /// The dyadic block `s` with `2^(s-1) <= q < 2^s`.
    pub fn scale(&self) -> u32 {
        64 - (self.q as u64).leading_zeros()
    }
}

impl fmt::Display for ArcPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {:?}; {})", self.a, self.b, self.q)
    }
}

/// Parameters of the arc decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcParams {
    pub eps1: f64,
    pub eps2: f64,
    pub d: u32,
    pub n: usize,
}

impl Default for ArcParams {
    fn default() -> Self {
        Self {
            eps1: 2f64.powi(-6),
            eps2: 2f64.powi(-5),
            d: 1,
            n: 1,
        }
    }
}

/// Slack used when flooring `j * eps`, so that e.g. `6 * (1/6)` floors to one.
const FLOOR_SLACK: f64 = 1e-9;

impl ArcParams {
    /// Parameters in the asymptotic regime: `0 < eps1 < 2^-5`, `eps1 < eps2`.
    pub fn new(eps1: f64, eps2: f64, d: u32, n: usize) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 < 2f64.powi(-5)) {
            return Err(Error::invalid(format!("eps1 = {eps1} must lie in (0, 2^-5)")));
        }
        Self::rescaled(eps1, eps2, d, n)
    }

    /// Parameters for desk-scale experiments, where `j * eps1` must reach one
    /// at small `j`: only `0 < eps1 < eps2 <= 1` is required.
    pub fn rescaled(eps1: f64, eps2: f64, d: u32, n: usize) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 < eps2 && eps2 <= 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < eps1 < eps2 <= 1, got eps1 = {eps1}, eps2 = {eps2}"
            )));
        }
        if d < 1 {
            return Err(Error::invalid("degree d must be at least one"));
        }
        if n < 1 {
            return Err(Error::invalid("dimension n must be at least one"));
        }
        Ok(Self { eps1, eps2, d, n })
    }

    /// Whether `eps1` lies in the range where the analytic estimates apply.
    pub fn is_asymptotic(&self) -> bool {
        self.eps1 < 2f64.powi(-5)
    }

    /// `floor(j * eps1)`: the largest `s` entering `L_j`, and the exponent of
    /// the exclusive denominator bound of `A_j`.
    pub fn xj_scale(&self, j: u32) -> u32 {
        (j as f64 * self.eps1 + FLOOR_SLACK).floor().max(0.0) as u32
    }

    /// `floor(j * eps2)`: the largest `s` entering the major arcs.
    pub fn mj_scale(&self, j: u32) -> u32 {
        (j as f64 * self.eps2 + FLOOR_SLACK).floor().max(0.0) as u32
    }

    /// Half-width `2^(-2dj + eps1 j)` of the intervals forming `X_j`.
    pub fn xj_radius(&self, j: u32) -> f64 {
        let j = j as f64;
        (-(2.0 * self.d as f64) * j + self.eps1 * j).exp2()
    }

    /// Half-widths of the major arc boxes: `(2^(-2dj+eps2 j), 2^(-j+eps2 j))`.
    pub fn mj_radii(&self, j: u32) -> (f64, f64) {
        let j = j as f64;
        (
            (-(2.0 * self.d as f64) * j + self.eps2 * j).exp2(),
            (-j + self.eps2 * j).exp2(),
        )
    }
}

/// Euler's totient.
pub fn euler_phi(q: u64) -> u64 {
    let mut n = q;
    let mut result = q;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Jordan's totient `J_k(q) = #{x in [q]^k : gcd(x, q) = 1}`.
pub fn jordan_totient(k: u32, q: u64) -> Result<u128> {
    let mut n = q;
    let mut num: u128 = (q as u128)
        .checked_pow(k)
        .ok_or_else(|| Error::Overflow(format!("{q}^{k}")))?;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            let pk = (p as u128).pow(k);
            num = num / pk * (pk - 1);
        }
        p += 1;
    }
    if n > 1 {
        let pk = (n as u128)
            .checked_pow(k)
            .ok_or_else(|| Error::Overflow(format!("{n}^{k}")))?;
        num = num / pk * (pk - 1);
    }
    Ok(num)
}

/// Number of positive divisors of `q`.
pub fn divisor_count(q: u64) -> u64 {
    assert!(q >= 1, "divisor_count needs q >= 1");
    let mut n = q;
    let mut count = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        count *= e + 1;
        p += 1;
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// `Q_s = lcm([2^(s-1), 2^s] ∩ Z)`.
pub fn lcm_range(s: u32) -> Result<u128> {
    if s == 0 {
        return Err(Error::invalid("s must be at least one"));
    }
    if s > 126 {
        return Err(Error::Overflow(format!("2^{s} does not fit")));
    }
    let lo = 1u128 << (s - 1);
    let hi = 1u128 << s;
    let mut acc = 1u128;
    let mut k = lo;
    while k <= hi {
        acc = lcm(acc, k).map_err(|_| Error::Overflow(format!("Q_s for s = {s}")))?;
        k += 1;
    }
    Ok(acc)
}

/// Largest Farey set materialised in memory.
pub const FAREY_LIMIT: u128 = 50_000_000;

/// All reduced `a/q` with `0 <= a < q <= q_max`, ascending.
pub fn farey_set(q_max: u64) -> Result<Vec<ReducedRational>> {
    if q_max < 1 {
        return Err(Error::invalid("Q must be at least one"));
    }
    // |F_Q| ~ 3 Q^2 / pi^2 < Q^2 / 3 for the budget check.
    check_budget("Farey set", (q_max as u128).pow(2) / 3, FAREY_LIMIT)?;
    let q = q_max as i64;
    let mut out = Vec::new();
    let (mut a, mut b, mut c, mut d) = (0i64, 1i64, 1i64, q);
    out.push(ReducedRational { num: 0, den: 1 });
    while c < d {
        // c/d < 1 is the next Farey neighbour.
        out.push(ReducedRational { num: c, den: d });
        let k = (q + b) / d;
        let (na, nb, nc, nd) = (c, d, k * c - a, k * d - b);
        a = na;
        b = nb;
        c = nc;
        d = nd;
    }
    Ok(out)
}

/// Dirichlet approximation: the reduced `a/q` with `1 <= q <= q_max` and
/// `|x - a/q| <= 1/(q q_max)` having the smallest `q` (ties by distance).
///
/// The smallest such `q` is a best approximation of the second kind, hence a
/// continued-fraction denominator, so the convergents are scanned in order.
pub fn dirichlet_approx(x: f64, q_max: u64) -> Result<ReducedRational> {
    if q_max < 1 {
        return Err(Error::invalid("Q must be at least one"));
    }
    if !x.is_finite() {
        return Err(Error::invalid("x must be finite"));
    }
    let bound = 1.0 / q_max as f64;
    let qualifies = |a: i64, q: i64| x.mul_add(q as f64, -(a as f64)).abs() <= bound;

    let (mut h1, mut h2) = (1i128, 0i128);
    let (mut k1, mut k2) = (0i128, 1i128);
    let mut r = x;
    for _ in 0..128 {
        let a = r.floor();
        let ai = a as i128;
        let h = ai * h1 + h2;
        let k = ai * k1 + k2;
        if k > q_max as i128 {
            break;
        }
        if let (Ok(hh), Ok(kk)) = (i64::try_from(h), i64::try_from(k)) {
            if qualifies(hh, kk) {
                return reduce(hh, kk);
            }
        }
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        let f = r - a;
        if f <= 0.0 {
            break;
        }
        r = 1.0 / f;
        if !r.is_finite() {
            break;
        }
    }
    // Rounding in the floating-point expansion can skip a convergent; fall
    // back to a scan, which is exact.
    dirichlet_scan(x, q_max)
}

fn dirichlet_scan(x: f64, q_max: u64) -> Result<ReducedRational> {
    let bound = 1.0 / q_max as f64;
    for q in 1..=q_max as i64 {
        let a = (x * q as f64).round() as i64;
        let mut best: Option<(f64, i64)> = None;
        for cand in [a - 1, a, a + 1] {
            let dist = x.mul_add(q as f64, -(cand as f64)).abs();
            if dist <= bound && best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, cand));
            }
        }
        if let Some((_, a)) = best {
            return reduce(a, q);
        }
    }
    Err(Error::Verification(format!(
        "no Dirichlet approximation found for x = {x}, Q = {q_max}"
    )))
}

/// Integers `a` with `|x - a/q| <= radius`, using an exact final test.
pub(crate) fn window_numerators(x: f64, radius: f64, q: i64) -> impl Iterator<Item = i64> {
    let qf = q as f64;
    let lo = ((x - radius) * qf).floor() as i64 - 1;
    let hi = ((x + radius) * qf).ceil() as i64 + 1;
    (lo..=hi).filter(move |&a| x.mul_add(qf, -(a as f64)).abs() <= radius * qf)
}

/// Exhaustive scan limit for denominators in the `X_j` search.
const XJ_SCAN_LIMIT: u64 = 1 << 20;

/// Every `alpha in A_j` with `|lambda - alpha| <= 2^(-2dj + eps1 j)`.
///
/// `A_j` is the set of reduced rationals with denominator in
/// `[1, 2^floor(j eps1))`; it is empty when `floor(j eps1) = 0`.
pub fn xj_candidates(lambda: f64, j: u32, params: &ArcParams) -> Vec<ReducedRational> {
    let scale = params.xj_scale(j);
    if scale == 0 {
        return Vec::new();
    }
    let radius = params.xj_radius(j);
    let q_excl = if scale >= 63 { u64::MAX } else { 1u64 << scale };
    let mut out = Vec::new();
    if q_excl <= XJ_SCAN_LIMIT {
        for q in 1..q_excl as i64 {
            for a in window_numerators(lambda, radius, q) {
                if gcd(a, q) == 1 {
                    out.push(ReducedRational { num: a, den: q });
                }
            }
        }
    } else {
        // radius < 1/(2 q^2) throughout, so every qualifying rational is a
        // convergent of lambda (Legendre).
        for c in convergents(lambda, q_excl - 1) {
            if c.distance_from(lambda) <= radius {
                out.push(c);
            }
        }
    }
    out.sort_by(|x, y| {
        x.distance_from(lambda)
            .total_cmp(&y.distance_from(lambda))
            .then(x.den.cmp(&y.den))
    });
    out.dedup();
    out
}

/// The element of `A_j` witnessing `lambda in X_j`, if any.
pub fn in_xj(lambda: f64, j: u32, params: &ArcParams) -> Option<ReducedRational> {
    if j < 1 {
        return None;
    }
    xj_candidates(lambda, j, params).into_iter().next()
}

/// Continued-fraction convergents of `x` with denominators up to `q_max`.
pub fn convergents(x: f64, q_max: u64) -> Vec<ReducedRational> {
    let mut out = Vec::new();
    let (mut h1, mut h2) = (1i128, 0i128);
    let (mut k1, mut k2) = (0i128, 1i128);
    let mut r = x;
    for _ in 0..128 {
        let a = r.floor();
        let h = a as i128 * h1 + h2;
        let k = a as i128 * k1 + k2;
        if k > q_max as i128 {
            break;
        }
        if let (Ok(hh), Ok(kk)) = (i64::try_from(h), i64::try_from(k)) {
            out.push(ReducedRational { num: hh, den: kk });
        } else {
            break;
        }
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        let f = r - a;
        if f <= 0.0 {
            break;
        }
        r = 1.0 / f;
        if !r.is_finite() {
            break;
        }
    }
    out
}

/// Pairs `(alpha, beta)` in `R_s` for some `1 <= s <= eps2 j` with
/// `|lambda - alpha| <= 2^(-2dj+eps2 j)` and `|xi - beta| <= 2^(-j+eps2 j)`.
///
/// Returned as `(a, b, q)` triples whose rationals are the actual nearby
/// points (not reduced modulo one), sorted by `q` then by distance.
pub fn mj_candidates(lambda: f64, xi: &[f64], j: u32, params: &ArcParams) -> Vec<(i64, Vec<i64>, i64)> {
    let scale = params.mj_scale(j);
    if scale == 0 || xi.len() != params.n {
        return Vec::new();
    }
    let (wl, wx) = params.mj_radii(j);
    let q_excl: i64 = if scale >= 62 { i64::MAX } else { 1i64 << scale };
    let mut out = Vec::new();
    let mut q = 1;
    while q < q_excl {
        let a_list: Vec<i64> = window_numerators(lambda, wl, q).collect();
        if !a_list.is_empty() {
            let per_axis: Vec<Vec<i64>> = xi
                .iter()
                .map(|&x| window_numerators(x, wx, q).collect())
                .collect();
            if per_axis.iter().all(|v| !v.is_empty()) {
                for b in cartesian(&per_axis) {
                    let dist2: f64 = xi
                        .iter()
                        .zip(&b)
                        .map(|(&x, &bk)| {
                            let d = x.mul_add(q as f64, -(bk as f64)) / q as f64;
                            d * d
                        })
                        .sum();
                    if dist2.sqrt() > wx {
                        continue;
                    }
                    for &a in &a_list {
                        let g = gcd_all(std::iter::once(a).chain(b.iter().copied()).chain([q]));
                        if g == 1 {
                            out.push((a, b.clone(), q));
                        }
                    }
                }
            }
        }
        q += 1;
    }
    out
}

/// The major arc `M_j(alpha, beta)` containing `(lambda, xi)`, if any, as a
/// canonical pair (modulo one).
pub fn in_mj(lambda: f64, xi: &[f64], j: u32, params: &ArcParams) -> Option<ArcPair> {
    if j < 1 {
        return None;
    }
    let cands = mj_candidates(lambda, xi, j, params);
    cands
        .into_iter()
        .next()
        .map(|(a, b, q)| ArcPair::new(a, &b, q).expect("candidate has joint gcd one"))
}

/// Cartesian product of integer lists, lexicographic in the first axis.
pub fn cartesian(lists: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(lists.len())];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for &x in list {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Largest `R_s` that [`enumerate_rs`] will materialise.
pub const RS_LIMIT: u128 = 20_000_000;

/// All canonical `(a, b, q)` with `q in [2^(s-1), 2^s)` and joint gcd one.
pub fn enumerate_rs(s: u32, n: usize) -> Result<Vec<ArcPair>> {
    if s < 1 {
        return Err(Error::invalid("s must be at least one"));
    }
    if n < 1 {
        return Err(Error::invalid("n must be at least one"));
    }
    if s > 40 {
        return Err(Error::Overflow(format!("2^{s} denominators")));
    }
    let lo = 1u64 << (s - 1);
    let hi = 1u64 << s;
    let mut total: u128 = 0;
    for q in lo..hi {
        total = total.saturating_add(jordan_totient(n as u32 + 1, q).unwrap_or(u128::MAX));
    }
    check_budget("R_s enumeration", total, RS_LIMIT)?;
    let mut out = Vec::with_capacity(total as usize);
    for q in lo as i64..hi as i64 {
        let mut idx = vec![0i64; n + 1];
        loop {
            let g = gcd_all(idx.iter().copied().chain([q]));
            if g == 1 {
                out.push(ArcPair {
                    q,
                    a: idx[0],
                    b: idx[1..].to_vec(),
                });
            }
            // odometer increment, last coordinate fastest
            let mut k = n;
            loop {
                idx[k] += 1;
                if idx[k] < q {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    break;
                }
                k -= 1;
            }
            if idx.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    Ok(out)
}
