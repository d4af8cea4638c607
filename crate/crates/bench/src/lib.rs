//! Fixtures shared by the benchmarks.

use amolab_core::{Frequency, ModelParams};

pub fn golden(lambda: f64, theta: f64) -> ModelParams {
    ModelParams::new(lambda, Frequency::golden(), theta).expect("valid parameters")
}

/// Deterministic phases spread over the circle.
pub fn phases(count: usize) -> Vec<f64> {
    let g = 0.618_033_988_749_894_9;
    (0..count).map(|i| (i as f64 * g).fract()).collect()
}
