//! Conditional log-density of a label distribution given features.
//!
//! The density is taken with respect to Lebesgue measure on the simplex.
//! It differs from a density against the uniform simplex distribution by a
//! factor of (L-1)!.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{checked_log, hidden_logits, log_squared_norm_parts, GammaTable, KernelMatrix};
use crate::model::SnefyModel;
use crate::rng::SeededRng;
use crate::simplex::{ln_uniform_simplex_density, sample_uniform_simplex, FeatureVector, LabelDistribution};

/// Parameter-only quantities shared by every x: the Γ table and VᵀV.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub model: &'a SnefyModel,
    pub gamma: GammaTable,
    pub gram: DMatrix<f64>,
}

impl<'a> Prepared<'a> {
    pub fn new(model: &'a SnefyModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            gamma: GammaTable::new(&model.w1)?,
            gram: model.v.transpose() * &model.v,
        })
    }

    /// Everything about the conditional density at `x` that does not depend on ℓ.
    pub fn condition(&self, x: &FeatureVector) -> Result<Conditional> {
        let n = self.model.dims().n;
        let pre = self.model.feature_map.pre_activation(x);
        let t2 = pre.map(|v| v.max(0.0));
        let proj = &self.model.w2 * &t2 + &self.model.b;
        if proj.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("feature map produced a non-finite projection".into()));
        }
        let kernel = self.gamma.kernel(&proj)?;
        // Σ_ij (VᵀV)_ij K_ij / exp(log_scale)
        let mut weighted = DMatrix::zeros(n, n);
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let w = self.gram[(i, j)] * kernel.scaled()[(i, j)];
                weighted[(i, j)] = w;
                total += w;
            }
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ModelDegenerate(format!("normalizer vec(VᵀV)ᵀvec(K) = {total:e} is not positive")));
        }
        Ok(Conditional {
            pre,
            t2,
            proj,
            log_normalizer: kernel.log_scale() + total.ln(),
            kernel,
            weighted,
            weighted_total: total,
        })
    }

    /// Log-density at ℓ for a prepared condition.
    pub fn log_density(&self, cond: &Conditional, ell: &LabelDistribution) -> Result<f64> {
        let log_ell = checked_log(ell, self.model.dims().l)?;
        Ok(self.log_density_from_log(cond, &log_ell))
    }

    pub(crate) fn log_density_from_log(&self, cond: &Conditional, log_ell: &[f64]) -> f64 {
        let z = hidden_logits(self.model, log_ell, &cond.proj);
        let (log_num, ..) = log_squared_norm_parts(&self.model.v, &z);
        log_num - cond.log_normalizer
    }
}

/// Per-x quantities: feature map values, projection, kernel and normalizer.
#[derive(Debug, Clone)]
pub struct Conditional {
    pub pre: DVector<f64>,
    pub t2: DVector<f64>,
    pub proj: DVector<f64>,
    pub kernel: KernelMatrix,
    /// `(VᵀV) ∘ K / exp(log_scale)`.
    pub weighted: DMatrix<f64>,
    /// Sum of `weighted`.
    pub weighted_total: f64,
    /// `ln vec(VᵀV)ᵀvec(K(x))`.
    pub log_normalizer: f64,
}

impl Conditional {
    /// `vec(VᵀV)ᵀ vec(K ∘ A) / vec(VᵀV)ᵀ vec(K)` for an n×n matrix `A`.
    pub fn weighted_average(&self, a: &DMatrix<f64>) -> f64 {
        self.weighted.iter().zip(a.iter()).map(|(w, v)| w * v).sum::<f64>() / self.weighted_total
    }
}

/// ln p(ℓ | x). Returns −∞ when the numerator is exactly zero.
pub fn log_density(model: &SnefyModel, ell: &LabelDistribution, x: &FeatureVector) -> Result<f64> {
    let prep = Prepared::new(model)?;
    let cond = prep.condition(x)?;
    prep.log_density(&cond, ell)
}

/// Importance-sampling estimate of ∫ p(ℓ|x) dℓ with the uniform simplex
/// proposal. Expected value 1.
pub fn normalization_check(model: &SnefyModel, x: &FeatureVector, n_samples: usize, rng: &mut SeededRng) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Config("normalization check needs at least one sample".into()));
    }
    let prep = Prepared::new(model)?;
    let cond = prep.condition(x)?;
    let l = model.dims().l;
    let ln_q = ln_uniform_simplex_density(l);
    let mut acc = 0.0;
    for _ in 0..n_samples {
        let ell = sample_uniform_simplex(l, rng)?;
        acc += (prep.log_density(&cond, &ell)? - ln_q).exp();
    }
    Ok(acc / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::unnormalized_squared_norm;
    use crate::model::Dims;
    use crate::simplex::floor_normalize;

    fn random_model(n: usize, l: usize, seed: u64) -> SnefyModel {
        let dims = Dims { d: 2, d2: 3, n, m: 3, l };
        let mut rng = SeededRng::new(seed);
        let mut model = SnefyModel::init_random(dims, &mut rng).unwrap();
        model.v *= 10.0;
        model.w1 = DMatrix::from_fn(n, l, |_, _| -0.2 + 1.5 * rng.uniform());
        model.w2 *= 5.0;
        model.b *= 5.0;
        model
    }

    fn dirichlet31() -> SnefyModel {
        let mut model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 1, m: 1, l: 2 }).unwrap();
        model.w1[(0, 0)] = 1.0;
        model
    }

    #[test]
    fn uniform_model_has_constant_density() {
        let model = SnefyModel::uniform(Dims { d: 2, d2: 2, n: 3, m: 2, l: 3 }).unwrap();
        let x = FeatureVector::new(vec![1.0, 2.0]).unwrap();
        for raw in [[0.2, 0.3, 0.5], [0.9, 0.05, 0.05]] {
            let ell = floor_normalize(&raw, 1e-6).unwrap();
            assert!((log_density(&model, &ell, &x).unwrap() - 2f64.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_three_one_density() {
        // 3ℓ² at ℓ = 1/2
        let ell = LabelDistribution::new(vec![0.5, 0.5]).unwrap();
        let x = FeatureVector::new(vec![0.0]).unwrap();
        assert!((log_density(&dirichlet31(), &ell, &x).unwrap() - 0.75f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn readout_scale_cancels() {
        let model = random_model(3, 3, 2);
        let ell = floor_normalize(&[0.3, 0.3, 0.4], 1e-6).unwrap();
        let x = FeatureVector::new(vec![0.4, -0.9]).unwrap();
        let base = log_density(&model, &ell, &x).unwrap();
        for c in [-2.0, 0.01, 7.5] {
            let mut scaled = model.clone();
            scaled.v *= c;
            assert!((log_density(&scaled, &ell, &x).unwrap() - base).abs() < 1e-10);
        }
    }

    #[test]
    fn two_row_mixture_matches_forward_pass() {
        let mut model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 2, m: 2, l: 2 }).unwrap();
        model.v = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        model.w1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let x = FeatureVector::new(vec![0.0]).unwrap();
        let ell = LabelDistribution::new(vec![0.3, 0.7]).unwrap();
        // numerator ℓ1² + 4ℓ2; normalizer ∫ ℓ1² + 4ℓ2 = 1/3 + 4·(1/2)
        let want = (0.3f64 * 0.3 + 4.0 * 0.7) / (1.0 / 3.0 + 2.0);
        let num = unnormalized_squared_norm(&model, &ell, &x).unwrap();
        assert!((num - (0.09 + 2.8)).abs() < 1e-12);
        assert!((log_density(&model, &ell, &x).unwrap() - want.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_readout_is_degenerate() {
        let mut model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 2, m: 1, l: 2 }).unwrap();
        model.v.fill(0.0);
        let ell = LabelDistribution::uniform(2);
        let x = FeatureVector::new(vec![0.0]).unwrap();
        assert!(matches!(log_density(&model, &ell, &x), Err(Error::ModelDegenerate(_))));
    }

    #[test]
    fn cancelling_readout_gives_negative_infinity() {
        // f(ℓ) = ℓ1 − ℓ2 vanishes at the midpoint only
        let mut model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 2, m: 1, l: 2 }).unwrap();
        model.v = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        model.w1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let x = FeatureVector::new(vec![0.0]).unwrap();
        let ell = LabelDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(log_density(&model, &ell, &x).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn label_permutation_equivariance() {
        let model = random_model(3, 3, 5);
        let x = FeatureVector::new(vec![-0.2, 0.8]).unwrap();
        let ell = floor_normalize(&[0.1, 0.2, 0.7], 1e-6).unwrap();
        let perm = [2, 0, 1];
        let mut permuted = model.clone();
        for (new_col, &old_col) in perm.iter().enumerate() {
            permuted.w1.set_column(new_col, &model.w1.column(old_col));
        }
        let ell_p = LabelDistribution::new(perm.iter().map(|&c| ell[c]).collect()).unwrap();
        let a = log_density(&model, &ell, &x).unwrap();
        let b = log_density(&permuted, &ell_p, &x).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn uniform_normalization_is_exact() {
        let model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 2, m: 1, l: 3 }).unwrap();
        let x = FeatureVector::new(vec![0.5]).unwrap();
        let est = normalization_check(&model, &x, 1000, &mut SeededRng::new(1)).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_model_normalizes() {
        let model = random_model(2, 3, 7);
        let x = FeatureVector::new(vec![0.1, 0.2]).unwrap();
        let est = normalization_check(&model, &x, 200_000, &mut SeededRng::new(3)).unwrap();
        assert!((est - 1.0).abs() < 0.02, "estimate {est}");
    }

    #[test]
    fn single_sample_check_is_deterministic() {
        let model = random_model(2, 3, 8);
        let x = FeatureVector::new(vec![0.1, 0.2]).unwrap();
        let a = normalization_check(&model, &x, 1, &mut SeededRng::new(99)).unwrap();
        let b = normalization_check(&model, &x, 1, &mut SeededRng::new(99)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(normalization_check(&model, &x, 0, &mut SeededRng::new(99)).is_err());
    }
}
