//! Synthetic Gaussian-blob classification data.
//!
//! Lets the full pipeline and test suite run without any downloaded files:
//! one Gaussian centroid per class inside the unit cube, examples are the
//! centroid plus isotropic noise, clamped to `[0, 1]`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};

/// Noise scale at which the default blobs are cleanly separable.
pub const DEFAULT_NOISE: f64 = 0.08;

/// Generates `n` examples over `classes` Gaussian blobs in `d` dimensions
/// with the default noise scale. Class counts are as balanced as integer
/// division allows; deterministic in `seed`.
pub fn gen_synthetic(n: usize, d: usize, classes: usize, seed: u64) -> Result<Dataset> {
    gen_synthetic_with_noise(n, d, classes, DEFAULT_NOISE, seed)
}

/// [`gen_synthetic`] with an explicit per-coordinate noise deviation.
pub fn gen_synthetic_with_noise(
    n: usize,
    d: usize,
    classes: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 || d == 0 || classes == 0 {
        return Err(Error::domain(
            "synthetic dataset dimensions must be positive".to_string(),
        ));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::domain(format!("invalid noise scale {noise}")));
    }

    let mut rng = derive_rng(seed, &[stream::SYNTHETIC]);
    let mut centroids = Array2::zeros((classes, d));
    for c in centroids.iter_mut() {
        *c = rng.random_range(0.2..0.8);
    }

    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("finite parameters");
    let mut inputs = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % classes;
        labels.push(label);
        for j in 0..d {
            let v: f64 = centroids[[label, j]] + normal.sample(&mut rng);
            inputs[[i, j]] = v.clamp(0.0, 1.0);
        }
    }
    Dataset::new(inputs, labels, classes)
}
