//! Closed-form conditional moments and Chebyshev intervals.
//!
//! Multiplying the kernel integrand by ℓ_r (or ℓ_r², ℓ_r ℓ_s) shifts one
//! Dirichlet exponent, so each moment is a `VᵀV ∘ K`-weighted average of a
//! rational function of W1:
//!
//! ```text
//! F^r_ij   = a_r / S
//! G^r_ij   = a_r (a_r + 1) / (S (S + 1))
//! H^rs_ij  = a_r a_s / (S (S + 1))
//! ```
//!
//! with `a_l = 1 + w1il + w1jl` and `S = Σ_l a_l`.

use nalgebra::{DMatrix, DVector};

use crate::density::{Conditional, Prepared};
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::simplex::FeatureVector;

/// Variances in `[-VARIANCE_CLAMP, 0)` are rounded up to 0.
pub const VARIANCE_CLAMP: f64 = 1e-10;

/// Conditional mean, variance and covariance of every label.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

fn pair_sums(w1: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let l = w1.ncols();
    l as f64 + (0..l).map(|c| w1[(i, c)] + w1[(j, c)]).sum::<f64>()
}

/// F^{y_r}: entry (i,j) is `(1 + w1ir + w1jr) / (L + Σ_l(w1il + w1jl))`.
pub fn f_matrix(w1: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let n = w1.nrows();
    DMatrix::from_fn(n, n, |i, j| (1.0 + w1[(i, r)] + w1[(j, r)]) / pair_sums(w1, i, j))
}

/// G^{y_r}: the second-moment analogue of [`f_matrix`].
pub fn g_matrix(w1: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let n = w1.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let a = 1.0 + w1[(i, r)] + w1[(j, r)];
        let s = pair_sums(w1, i, j);
        a * (a + 1.0) / (s * (s + 1.0))
    })
}

/// H^{y_r,y_s}: the cross-moment matrix for two distinct labels.
pub fn h_matrix(w1: &DMatrix<f64>, r: usize, s: usize) -> DMatrix<f64> {
    let n = w1.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let ar = 1.0 + w1[(i, r)] + w1[(j, r)];
        let as_ = 1.0 + w1[(i, s)] + w1[(j, s)];
        let sum = pair_sums(w1, i, j);
        ar * as_ / (sum * (sum + 1.0))
    })
}

fn check_label(model: &SnefyModel, r: usize) -> Result<()> {
    let l = model.dims().l;
    if r >= l {
        return Err(Error::Dimension(format!("label index {r} out of range for {l} labels")));
    }
    Ok(())
}

fn clamp_variance(v: f64, r: usize) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numeric(format!("variance of label {r} is {v:e}")))
    }
}

impl Prepared<'_> {
    pub fn mean(&self, cond: &Conditional) -> DVector<f64> {
        let l = self.model.dims().l;
        DVector::from_fn(l, |r, _| cond.weighted_average(&f_matrix(&self.model.w1, r)))
    }

    pub fn variance(&self, cond: &Conditional, mean: &DVector<f64>) -> Result<DVector<f64>> {
        let l = self.model.dims().l;
        let mut out = DVector::zeros(l);
        for r in 0..l {
            let second = cond.weighted_average(&g_matrix(&self.model.w1, r));
            out[r] = clamp_variance(second - mean[r] * mean[r], r)?;
        }
        Ok(out)
    }

    pub fn moments(&self, cond: &Conditional) -> Result<MomentReport> {
        let l = self.model.dims().l;
        let mean = self.mean(cond);
        let variance = self.variance(cond, &mean)?;
        let mut covariance = DMatrix::from_diagonal(&variance);
        for r in 0..l {
            for s in (r + 1)..l {
                let c = cond.weighted_average(&h_matrix(&self.model.w1, r, s)) - mean[r] * mean[s];
                covariance[(r, s)] = c;
                covariance[(s, r)] = c;
            }
        }
        Ok(MomentReport {
            mean,
            variance,
            covariance,
        })
    }
}

/// E[ℓ | x].
pub fn conditional_mean(model: &SnefyModel, x: &FeatureVector) -> Result<DVector<f64>> {
    let prep = Prepared::new(model)?;
    let cond = prep.condition(x)?;
    Ok(prep.mean(&cond))
}

/// Var[ℓ_r | x] for every label.
pub fn conditional_variance(model: &SnefyModel, x: &FeatureVector) -> Result<DVector<f64>> {
    let prep = Prepared::new(model)?;
    let cond = prep.condition(x)?;
    let mean = prep.mean(&cond);
    prep.variance(&cond, &mean)
}

/// Cov[ℓ | x] with the variances on the diagonal.
pub fn conditional_covariance(model: &SnefyModel, x: &FeatureVector) -> Result<DMatrix<f64>> {
    Ok(conditional_moments(model, x)?.covariance)
}

pub fn conditional_moments(model: &SnefyModel, x: &FeatureVector) -> Result<MomentReport> {
    let prep = Prepared::new(model)?;
    let cond = prep.condition(x)?;
    prep.moments(&cond)
}

/// Conditional mean of a single label.
pub fn conditional_mean_of(model: &SnefyModel, x: &FeatureVector, r: usize) -> Result<f64> {
    check_label(model, r)?;
    Ok(conditional_mean(model, x)?[r])
}

/// Chebyshev multiplier for a confidence level: k = 1/√(1 − level).
pub fn level_to_k(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(format!("level must lie in (0, 1), got {level}")));
    }
    Ok(1.0 / (1.0 - level).sqrt())
}

/// `mean ± k·√variance` without clipping.
pub fn chebyshev_interval_raw(mean: f64, variance: f64, k: f64) -> Result<(f64, f64)> {
    if !(k > 1.0) {
        return Err(Error::InvalidLevel(format!("Chebyshev multiplier must exceed 1, got {k}")));
    }
    if !(variance >= 0.0) {
        return Err(Error::Numeric(format!("variance must be nonnegative, got {variance}")));
    }
    let half = k * variance.sqrt();
    Ok((mean - half, mean + half))
}

/// `mean ± k·√variance` intersected with [0, 1].
pub fn chebyshev_interval(mean: f64, variance: f64, k: f64) -> Result<(f64, f64)> {
    let (lo, hi) = chebyshev_interval_raw(mean, variance, k)?;
    Ok((lo.max(0.0), hi.min(1.0)))
}
