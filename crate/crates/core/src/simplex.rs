//! Points on the probability simplex and the feature vectors they are
//! conditioned on.

use std::ops::Deref;

use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Floor applied to label entries on ingestion so that log ℓ stays finite.
pub const EPS_FLOOR: f64 = 1e-6;

/// Allowed deviation of Σℓ from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A point on the (L-1)-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Validates nonnegativity and unit sum; does not renormalize.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Dimension(format!(
                "a label distribution needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {i} = {v}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Uniform distribution over `len` labels.
    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// True when every entry is strictly positive, so log ℓ is finite.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }
}

impl Deref for LabelDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A raw feature vector x ∈ ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature {i} is not finite ({v})")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Maps a nonnegative vector to the simplex interior.
///
/// The input is first scaled to unit sum, then every entry is lifted as
/// `(v_i + ε) / Σ_j (v_j + ε)`, so each output entry is at least
/// `ε / (1 + Lε)`. Input that already sums to 1 with every entry at or above
/// that floor is returned unchanged, which makes the map idempotent.
pub fn floor_normalize(raw: &[f64], eps_floor: f64) -> Result<LabelDistribution> {
    if raw.len() < 2 {
        return Err(Error::Dimension(format!(
            "a label distribution needs at least 2 entries, got {}",
            raw.len()
        )));
    }
    if let Some((i, v)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {i} = {v} is negative or not finite")));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidDistribution("all entries are zero".into()));
    }
    let len = raw.len() as f64;
    let lower = eps_floor / (1.0 + len * eps_floor);
    if (sum - 1.0).abs() <= 1e-12 && raw.iter().all(|&v| v >= lower * (1.0 - 1e-9)) {
        return Ok(LabelDistribution(raw.to_vec()));
    }
    let lifted: Vec<f64> = raw.iter().map(|&v| v / sum + eps_floor).collect();
    let total: f64 = lifted.iter().sum();
    Ok(LabelDistribution(lifted.into_iter().map(|v| v / total).collect()))
}

/// One draw from the uniform distribution on the (L-1)-simplex, i.e.
/// Dirichlet(1, ..., 1), by normalizing L standard exponentials.
///
/// Its density with respect to Lebesgue measure on the simplex is (L-1)!.
pub fn sample_uniform_simplex(len: usize, rng: &mut SeededRng) -> Result<LabelDistribution> {
    if len < 2 {
        return Err(Error::Dimension(format!("simplex sampling needs L >= 2, got {len}")));
    }
    let mut values: Vec<f64> = Vec::with_capacity(len);
    loop {
        values.clear();
        values.extend((0..len).map(|_| {
            let e: f64 = Exp1.sample(rng);
            e
        }));
        let sum: f64 = values.iter().sum();
        // A zero exponential would put the sample on the boundary.
        if sum > 0.0 && values.iter().all(|&v| v > 0.0) {
            values.iter_mut().for_each(|v| *v /= sum);
            return Ok(LabelDistribution(values));
        }
    }
}

/// ln((L-1)!), the log density of the uniform simplex distribution.
pub fn ln_uniform_simplex_density(len: usize) -> f64 {
    (1..len).map(|k| (k as f64).ln()).sum()
}
