//! Synthetic data generators with known conditional distributions.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::{Dims, SnefyModel};
use crate::rng::SeededRng;
use crate::simplex::{floor_normalize, FeatureVector, LabelDistribution, EPS_FLOOR};

/// One draw from Dirichlet(alpha) via normalized Gamma variates.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut SeededRng) -> Result<LabelDistribution> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .map(|g| g.sample(rng))
                .map_err(|e| Error::Config(format!("invalid Dirichlet parameter {a}: {e}")))
        })
        .collect::<Result<_>>()?;
    if draws.iter().sum::<f64>() > 0.0 {
        floor_normalize(&draws, EPS_FLOOR)
    } else {
        // every shape so small that all gammas underflowed: pick the largest
        // shape's vertex, then floor it
        let mut raw = vec![0.0; alpha.len()];
        let top = alpha.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
        raw[top] = 1.0;
        floor_normalize(&raw, EPS_FLOOR)
    }
}

/// Exact sampler for models whose readout Gram matrix VᵀV is elementwise
/// nonnegative (for instance V ≥ 0).
///
/// The density is then a mixture over row pairs (i, j) with weights
/// `(VᵀV)_ij K_ij / Z` of Dirichlet(1 + w1i + w1j) components.
pub struct MixtureSampler<'a> {
    prep: Prepared<'a>,
}

impl<'a> MixtureSampler<'a> {
    pub fn new(model: &'a SnefyModel) -> Result<Self> {
        let prep = Prepared::new(model)?;
        if prep.gram.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("mixture sampling needs an elementwise nonnegative VᵀV".into()));
        }
        Ok(Self { prep })
    }

    pub fn sample(&self, x: &FeatureVector, rng: &mut SeededRng) -> Result<LabelDistribution> {
        let cond = self.prep.condition(x)?;
        let target = rng.uniform() * cond.weighted_total;
        let n = cond.weighted.nrows();
        let mut acc = 0.0;
        let mut pick = (n - 1, n - 1);
        'outer: for j in 0..n {
            for i in 0..n {
                acc += cond.weighted[(i, j)];
                if acc >= target {
                    pick = (i, j);
                    break 'outer;
                }
            }
        }
        let w1 = &self.prep.model.w1;
        let alpha: Vec<f64> = (0..w1.ncols()).map(|c| 1.0 + w1[(pick.0, c)] + w1[(pick.1, c)]).collect();
        sample_dirichlet(&alpha, rng)
    }
}

/// A teacher model with V ≥ 0 and W1 entries in [0, 3), so its conditional
/// densities are multimodal and sampleable by [`MixtureSampler`].
pub fn teacher_model(dims: Dims, seed: u64) -> Result<SnefyModel> {
    let mut rng = SeededRng::new(seed);
    let mut model = SnefyModel::init_random(dims, &mut rng)?;
    model.v = DMatrix::from_fn(dims.m, dims.n, |_, _| rng.uniform());
    model.w1 = DMatrix::from_fn(dims.n, dims.l, |_, _| 3.0 * rng.uniform());
    model.w2 *= 10.0;
    model.feature_map.weight *= 10.0;
    model.feature_map.bias *= 5.0;
    Ok(model)
}

fn gaussian_features(d: usize, rng: &mut SeededRng) -> FeatureVector {
    FeatureVector::new((0..d).map(|_| StandardNormal.sample(rng)).collect()).expect("finite gaussian draws")
}

/// `count` samples with x ~ N(0, I) and ℓ ~ p(ℓ | x) under `teacher`.
pub fn sample_from_model(teacher: &SnefyModel, count: usize, rng: &mut SeededRng) -> Result<LdlDataset> {
    let sampler = MixtureSampler::new(teacher)?;
    let d = teacher.dims().d;
    let mut features = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let x = gaussian_features(d, rng);
        labels.push(sampler.sample(&x, rng)?);
        features.push(x);
    }
    LdlDataset::with_default_names(features, labels)
}

/// Two-region data with d = 2 and L = 3. Where the first feature is
/// positive, labels are Dirichlet(1, 1, 1) (maximal spread); elsewhere they
/// are tightly concentrated around a point that moves with the second
/// feature. Returns the data and the high-spread indicator per row.
pub fn heteroscedastic(count: usize, rng: &mut SeededRng) -> Result<(LdlDataset, Vec<bool>)> {
    let mut features = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut spread = Vec::with_capacity(count);
    for _ in 0..count {
        let x0 = 2.0 * rng.uniform() - 1.0;
        let x1 = 2.0 * rng.uniform() - 1.0;
        let wide = x0 > 0.0;
        let alpha = if wide {
            vec![1.0, 1.0, 1.0]
        } else {
            let center = [0.6 + 0.2 * x1, 0.3 - 0.2 * x1, 0.1];
            center.iter().map(|c| 60.0 * c).collect()
        };
        labels.push(sample_dirichlet(&alpha, rng)?);
        features.push(FeatureVector::new(vec![x0, x1])?);
        spread.push(wide);
    }
    Ok((LdlDataset::with_default_names(features, labels)?, spread))
}
