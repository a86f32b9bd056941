#![allow(dead_code)]

pub mod oracles;

use nalgebra::DMatrix;
use snefy_ldl::{floor_normalize, Dims, FeatureVector, LdlDataset, SeededRng, SnefyModel};

/// Random model with W1 drawn from `[w1_lo, w1_hi)` and the other blocks
/// scaled up from the default initialization so the density is far from
/// uniform.
pub fn random_model(dims: Dims, seed: u64, w1_lo: f64, w1_hi: f64) -> SnefyModel {
    let mut rng = SeededRng::new(seed);
    let mut model = SnefyModel::init_random(dims, &mut rng).unwrap();
    model.v *= 10.0;
    model.w2 *= 5.0;
    model.b *= 5.0;
    model.feature_map.weight *= 5.0;
    model.feature_map.bias *= 5.0;
    model.w1 = DMatrix::from_fn(dims.n, dims.l, |_, _| w1_lo + (w1_hi - w1_lo) * rng.uniform());
    model
}

pub fn random_batch(d: usize, l: usize, n: usize, seed: u64) -> LdlDataset {
    let mut rng = SeededRng::new(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        features.push(FeatureVector::new((0..d).map(|_| 2.0 * rng.uniform() - 1.0).collect()).unwrap());
        let raw: Vec<f64> = (0..l).map(|_| 0.05 + rng.uniform()).collect();
        labels.push(floor_normalize(&raw, 1e-6).unwrap());
    }
    LdlDataset::with_default_names(features, labels).unwrap()
}
