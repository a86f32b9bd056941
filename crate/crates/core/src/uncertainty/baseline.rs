use super::conformal::{ConformalCalibrator, IntervalModel};
use super::entropy::dirichlet_entropy;
use crate::dataset::LdlDataset;
use crate::error::{Error, Result};
use crate::simplex::{FeatureVector, LabelDistribution};
use crate::special::ln_gamma;
use crate::training::MaxEntModel;

// ln 0.1, ln 1e4
const LOG_TAU_RANGE: (f64, f64) = (-std::f64::consts::LN_10, 4.0 * std::f64::consts::LN_10);
const GOLDEN_ITERS: usize = 80;

/// Dirichlet(τ·p̂(x)) around a point predictor's output.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBaseline {
    pub predictor: MaxEntModel,
    /// Concentration α₀ = τ.
    pub tau: f64,
}

impl DirichletBaseline {
    pub fn alpha(&self, x: &FeatureVector) -> Vec<f64> {
        self.predictor.predict(x).iter().map(|p| self.tau * p).collect()
    }

    /// Closed-form differential entropy at `x`.
    pub fn entropy(&self, x: &FeatureVector) -> Result<f64> {
        dirichlet_entropy(&self.alpha(x))
    }
}

impl IntervalModel for DirichletBaseline {
    fn label_dim(&self) -> usize {
        self.predictor.offset.len()
    }

    fn mean_variance(&self, x: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.predictor.predict(x);
        let var = p.iter().map(|&v| v * (1.0 - v) / (self.tau + 1.0)).collect();
        Ok((p.into_inner(), var))
    }
}

/// ln Dirichlet(ℓ; α).
pub fn dirichlet_log_pdf(alpha: &[f64], ell: &LabelDistribution) -> f64 {
    let a0: f64 = alpha.iter().sum();
    let body: f64 = alpha.iter().zip(ell.iter()).map(|(&a, &l)| (a - 1.0) * l.ln() - ln_gamma(a)).sum();
    ln_gamma(a0) + body
}

fn log_likelihood(preds: &[LabelDistribution], data: &LdlDataset, log_tau: f64) -> f64 {
    let tau = log_tau.exp();
    preds
        .iter()
        .zip(data.labels())
        .map(|(p, ell)| dirichlet_log_pdf(&p.iter().map(|v| tau * v).collect::<Vec<_>>(), ell))
        .sum()
}

/// Maximum-likelihood concentration over `train` by golden-section search
/// on ln τ ∈ [ln 0.1, ln 10⁴]. Falls back to τ = L when the likelihood is
/// not finite.
pub fn fit_concentration(predictor: &MaxEntModel, train: &LdlDataset) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::Config("concentration fit needs a nonempty training set".into()));
    }
    let preds: Vec<LabelDistribution> = train.features().iter().map(|x| predictor.predict(x)).collect();
    let f = |t: f64| log_likelihood(&preds, train, t);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = LOG_TAU_RANGE;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut finite = fc.is_finite() && fd.is_finite();
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        finite &= fc.is_finite() && fd.is_finite();
    }
    if !finite {
        let fallback = train.label_dim() as f64;
        log::warn!("Dirichlet concentration search hit a non-finite likelihood; using tau = {fallback}");
        return Ok(fallback);
    }
    Ok((0.5 * (a + b)).exp())
}

/// Fits τ on `train`, then calibrates the Dirichlet intervals on `calib`.
pub fn dirichlet_baseline_calibrate(
    point_predictor: &MaxEntModel,
    train: &LdlDataset,
    calib: &LdlDataset,
    level: f64,
) -> Result<(DirichletBaseline, ConformalCalibrator)> {
    let tau = fit_concentration(point_predictor, train)?;
    let baseline = DirichletBaseline { predictor: point_predictor.clone(), tau };
    let cal = ConformalCalibrator::fit(&baseline, calib, level)?;
    Ok((baseline, cal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::synthetic::sample_dirichlet;
    use nalgebra::DVector;

    fn constant_predictor(p: &[f64]) -> MaxEntModel {
        let mut m = MaxEntModel::zeros(1, p.len());
        m.offset = DVector::from_iterator(p.len(), p.iter().map(|v| v.ln()));
        m
    }

    #[test]
    fn variance_examples() {
        let x = FeatureVector::new(vec![0.0]).unwrap();
        let b = DirichletBaseline { predictor: constant_predictor(&[0.75, 0.25]), tau: 4.0 };
        let (mean, var) = b.mean_variance(&x).unwrap();
        assert!((mean[0] - 0.75).abs() < 1e-14);
        assert!((var[0] - 0.0375).abs() < 1e-14);
        let b = DirichletBaseline { predictor: constant_predictor(&[0.5, 0.5]), tau: 2.0 };
        assert!((b.mean_variance(&x).unwrap().1[0] - 1.0 / 12.0).abs() < 1e-15);
        let b = DirichletBaseline { predictor: constant_predictor(&[0.5, 0.5]), tau: 1e12 };
        assert!(b.mean_variance(&x).unwrap().1[0] < 1e-12);
    }

    #[test]
    fn log_pdf_matches_beta() {
        let ell = LabelDistribution::new(vec![0.3, 0.7]).unwrap();
        // Beta(3,1): 3x²
        assert!((dirichlet_log_pdf(&[3.0, 1.0], &ell) - (3.0 * 0.09f64).ln()).abs() < 1e-13);
    }

    #[test]
    fn recovers_concentration() {
        let mut rng = SeededRng::new(9);
        let p = [0.5, 0.3, 0.2];
        let tau = 20.0;
        let alpha: Vec<f64> = p.iter().map(|v| tau * v).collect();
        let features: Vec<_> = (0..4000).map(|_| FeatureVector::new(vec![0.0]).unwrap()).collect();
        let labels = (0..4000).map(|_| sample_dirichlet(&alpha, &mut rng).unwrap()).collect();
        let data = LdlDataset::with_default_names(features, labels).unwrap();
        let fit = fit_concentration(&constant_predictor(&p), &data).unwrap();
        assert!((fit / tau - 1.0).abs() < 0.1, "{fit}");
    }
}
