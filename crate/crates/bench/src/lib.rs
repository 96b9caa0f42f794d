//! Shared fixtures for the kernel benchmarks.

use qstrat_core::measure::WeightedPointMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` atoms uniform in [-1, 1]^n with weights in [0.5, 1.5).
pub fn cloud(n: usize, count: usize, seed: u64) -> WeightedPointMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * count).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.5..1.5)).collect();
    WeightedPointMeasure::new(n, coords, weights).expect("valid cloud")
}

/// Points on the unit circle in the first two coordinates of R^n.
pub fn circle(n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / count as f64;
            let mut p = vec![0.0; n];
            p[0] = t.cos();
            p[1] = t.sin();
            p
        })
        .collect()
}
