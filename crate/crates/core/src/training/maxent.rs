//! Softmax-of-linear point predictor trained by KL divergence.

use nalgebra::{DMatrix, DVector};

use super::optim::Optimizer;
use super::TrainConfig;
use crate::dataset::LdlDataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::simplex::{FeatureVector, LabelDistribution};

/// `p(y_l | x) = softmax_l(θ_l·x + c_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    /// L×d weights.
    pub theta: DMatrix<f64>,
    /// L offsets.
    pub offset: DVector<f64>,
}

fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let max = logits.max();
    let e = logits.map(|v| (v - max).exp());
    let s = e.sum();
    e / s
}

impl MaxEntModel {
    pub fn zeros(d: usize, l: usize) -> Self {
        Self {
            theta: DMatrix::zeros(l, d),
            offset: DVector::zeros(l),
        }
    }

    fn probabilities(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        softmax(&(&self.theta * xv + &self.offset))
    }

    pub fn predict(&self, x: &FeatureVector) -> LabelDistribution {
        let p = self.probabilities(x);
        // renormalize so the sum is 1 up to rounding
        let s = p.sum();
        LabelDistribution::new(p.iter().map(|v| v / s).collect()).expect("softmax output lies on the simplex")
    }

    /// Mean KL(ℓ ‖ p(·|x)) over `data`, with 0·log 0 = 0.
    pub fn kl_loss(&self, data: &LdlDataset) -> f64 {
        let total: f64 = data
            .iter()
            .map(|(x, ell)| {
                let p = self.probabilities(x);
                ell.iter()
                    .zip(p.iter())
                    .filter(|(t, _)| **t > 0.0)
                    .map(|(t, q)| t * (t / q).ln())
                    .sum::<f64>()
            })
            .sum();
        total / data.len() as f64
    }

    /// Gradient of [`MaxEntModel::kl_loss`]: `(p − ℓ) xᵀ` and `p − ℓ`, averaged.
    pub fn kl_grad(&self, data: &LdlDataset) -> (DMatrix<f64>, DVector<f64>) {
        let mut g_theta = DMatrix::zeros(self.theta.nrows(), self.theta.ncols());
        let mut g_offset = DVector::zeros(self.offset.len());
        for (x, ell) in data.iter() {
            let p = self.probabilities(x);
            let resid = p - DVector::from_column_slice(ell);
            g_theta += &resid * DVector::from_column_slice(x).transpose();
            g_offset += resid;
        }
        let scale = 1.0 / data.len() as f64;
        (g_theta * scale, g_offset * scale)
    }
}

/// Fits a [`MaxEntModel`] from zero initialization with the optimizer,
/// learning rate, batch size and epoch count of `cfg`.
pub fn train_maxent_baseline(data: &LdlDataset, cfg: &TrainConfig) -> Result<MaxEntModel> {
    cfg.validate()?;
    let mut model = MaxEntModel::zeros(data.feature_dim(), data.label_dim());
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &[model.theta.len(), model.offset.len()]);
    let master = SeededRng::new(cfg.seed);
    let mut bad_streak = 0;
    for epoch in 0..cfg.epochs {
        let mut rng = master.stream(1 + epoch as u64);
        let order = rng.permutation(data.len());
        for idx in order.chunks(cfg.batch_size) {
            let batch = data.subset(idx)?;
            let (g_theta, g_offset) = model.kl_grad(&batch);
            if g_theta.iter().chain(g_offset.iter()).any(|v| !v.is_finite()) {
                bad_streak += 1;
                if bad_streak >= super::MAX_NON_FINITE_BATCHES {
                    return Err(Error::Divergence {
                        batches: bad_streak,
                        learning_rate: cfg.learning_rate,
                    });
                }
                continue;
            }
            bad_streak = 0;
            opt.begin_step();
            opt.update_block(0, model.theta.as_mut_slice(), g_theta.as_slice());
            opt.update_block(1, model.offset.as_mut_slice(), g_offset.as_slice());
        }
    }
    Ok(model)
}
