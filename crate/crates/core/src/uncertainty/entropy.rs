use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::rng::SeededRng;
use crate::simplex::{ln_uniform_simplex_density, sample_uniform_simplex, FeatureVector};
use crate::special::{digamma, ln_gamma};

pub const DEFAULT_N_ITER: usize = 1000;

/// Importance-sampling estimate of −∫ p(ℓ|x) log p(ℓ|x) dℓ with a uniform
/// simplex proposal of density (L−1)!.
pub fn entropy_estimate(model: &SnefyModel, x: &FeatureVector, n_iter: usize, rng: &mut SeededRng) -> Result<f64> {
    let prep = Prepared::new(model)?;
    entropy_estimate_prepared(&prep, x, n_iter, rng)
}

/// [`entropy_estimate`] reusing parameter-only precomputation.
pub fn entropy_estimate_prepared(prep: &Prepared<'_>, x: &FeatureVector, n_iter: usize, rng: &mut SeededRng) -> Result<f64> {
    if n_iter == 0 {
        return Err(Error::Config("entropy estimation needs n_iter >= 1".into()));
    }
    let cond = prep.condition(x)?;
    let l = prep.model.dims().l;
    let ln_q = ln_uniform_simplex_density(l);
    let mut acc = 0.0;
    for _ in 0..n_iter {
        let ell = sample_uniform_simplex(l, rng)?;
        let lp = prep.log_density(&cond, &ell)?;
        // p log p → 0 as p → 0
        if lp.is_finite() {
            acc += (lp - ln_q).exp() * lp;
        }
    }
    Ok(-acc / n_iter as f64)
}

/// Closed-form differential entropy of Dirichlet(α):
/// ln B(α) + (α₀ − L) ψ(α₀) − Σ_j (α_j − 1) ψ(α_j).
pub fn dirichlet_entropy(alpha: &[f64]) -> Result<f64> {
    if alpha.len() < 2 || alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Config(format!("Dirichlet parameters must be positive and finite, got {alpha:?}")));
    }
    let a0: f64 = alpha.iter().sum();
    let ln_b: f64 = alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(a0);
    let tail: f64 = alpha.iter().map(|&a| (a - 1.0) * digamma(a)).sum();
    Ok(ln_b + (a0 - alpha.len() as f64) * digamma(a0) - tail)
}
