//! Seeded point sets for sweeps over an annulus.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{lit, Scalar};

/// `count` points in ℝ²ⁿ with uniformly distributed directions and radii
/// uniform in `[r_lo, r_hi]`. Deterministic in `seed`.
pub fn annulus_points<T: Scalar>(n: usize, count: usize, seed: u64, r_lo: f64, r_hi: f64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
            let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r = rng.random_range(r_lo..=r_hi);
            dir.iter().map(|x| lit(x / len * r)).collect()
        })
        .collect()
}

/// Unit vector in ℝ²ⁿ from a seeded generator.
pub fn random_direction<T: Scalar>(rng: &mut ChaCha8Rng, d: usize) -> Vec<T> {
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    dir.iter().map(|x| lit(x / len)).collect()
}

/// Point at radius `r` along a seeded random direction.
pub fn point_at_radius<T: Scalar>(n: usize, r: f64, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_direction::<T>(&mut rng, 2 * n).into_iter().map(|x| x * lit(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = annulus_points::<f64>(3, 10, 7, 0.5, 2.0);
        let b = annulus_points::<f64>(3, 10, 7, 0.5, 2.0);
        assert_eq!(a, b);
        for p in &a {
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&r));
        }
    }
}
