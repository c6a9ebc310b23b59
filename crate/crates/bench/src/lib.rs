//! Shared fixtures for the criterion benchmarks.

use rsma_core::channel::gen_rayleigh;
use rsma_core::ChannelSet;

/// Rayleigh MISO set with `k` single-antenna users at unit variance.
pub fn miso(seed: u64, m: usize, k: usize) -> ChannelSet {
    gen_rayleigh(seed, m, &vec![1; k], &vec![1.0; k]).expect("valid fixture")
}

/// Uniform-power 1-layer RS precoders along the first `k + 1` coordinate axes
/// (cycled), for rate-evaluation benchmarks.
pub fn axis_precoders(m: usize, k: usize, power: f64) -> rsma_core::PrecoderSet {
    use rsma_core::linalg::{c, CMat};
    let each = (power / (k + 1) as f64).sqrt();
    let ps = (0..=k)
        .map(|s| {
            let mut p = CMat::zeros(m, 1);
            p[(s % m, 0)] = c(each, 0.0);
            p
        })
        .collect();
    rsma_core::PrecoderSet::new(ps, power).expect("valid fixture")
}
