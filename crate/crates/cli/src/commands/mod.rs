pub mod approx;
pub mod arcs;
pub mod carleson;
pub mod kappa;
pub mod phi;
pub mod verify;
pub mod weyl;

use carleson_core::rationals::gcd;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one named random stream of a run.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Reduced `a/q` in `[0, 1)` with `q <= q_max`, ordered by `(q, a)`.
pub fn fractions(q_max: i64) -> Vec<(i64, i64)> {
    (1..=q_max)
        .flat_map(|q| (0..q).filter(move |&a| gcd(a, q) == 1).map(move |a| (a, q)))
        .collect()
}

/// Integer vectors with Euclidean norm at most `r`, lexicographic.
pub fn ball_points(n: usize, r: i64) -> Vec<Vec<i64>> {
    let axis: Vec<i64> = (-r..=r).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    out.retain(|p| p.iter().map(|v| v * v).sum::<i64>() <= r * r);
    out
}
