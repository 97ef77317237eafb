//! Seeded random streams and the seed-splitting scheme used to give every
//! trial its own independent generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of indices.
///
/// Each path component is folded in with one splitmix64 round, so
/// `split_seed(m, &[a, b])` differs from `split_seed(m, &[b, a])`.
pub fn split_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |h, &k| {
        splitmix64(h ^ splitmix64(k.wrapping_add(1)))
    })
}

pub const SEED_SCHEME: &str = "splitmix64 fold over (master_seed, path indices)";

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| standard_normal(rng)).collect()
}

/// Symmetric p-stable variate, `p ∈ [1, 2]`.
///
/// `p = 1` is the exact Cauchy `tan(π(u − ½))`; other exponents use the
/// Chambers–Mallows–Stuck transform.
pub fn p_stable(rng: &mut impl Rng, p: f64) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    if p == 1.0 {
        return (std::f64::consts::PI * u).tan();
    }
    let theta = std::f64::consts::PI * u;
    let w: f64 = Exp1.sample(rng);
    let a = p;
    (a * theta).sin() / theta.cos().powf(1.0 / a)
        * (((1.0 - a) * theta).cos() / w).powf((1.0 - a) / a)
}
