//! Maximum-likelihood fitting by mini-batch gradient descent.

mod gradient;
mod maxent;
mod optim;

pub use gradient::{gradient_check, grad_nll, nll, nll_and_grad, relative_error, GradientCheck, ModelGradient};
pub use maxent::{train_maxent_baseline, MaxEntModel};
pub use optim::{Optimizer, OptimizerKind};

use crate::dataset::LdlDataset;
use crate::error::{Error, Result};
use crate::model::{Dims, ParamBlock, SnefyModel, DEFAULT_EPS_CLIP};
use crate::rng::SeededRng;

/// Consecutive non-finite batches tolerated before training aborts.
pub const MAX_NON_FINITE_BATCHES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub eps_clip: f64,
    /// Hidden width n.
    pub hidden: usize,
    /// Readout rows m.
    pub readout: usize,
    /// Feature map width D2; `None` means equal to `hidden`.
    pub feature_width: Option<usize>,
    /// Finite-difference check on every `grad_check_stride`-th coordinate
    /// of the first batch; 0 disables it.
    pub grad_check_stride: usize,
}

impl Default for TrainConfig {
    /// Active learning and ensemble settings: batch size 16.
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::AdaptiveMoment,
            seed: 0,
            eps_clip: DEFAULT_EPS_CLIP,
            hidden: 64,
            readout: 32,
            feature_width: None,
            grad_check_stride: 0,
        }
    }
}

impl TrainConfig {
    /// Conformal prediction settings: batch size 64.
    pub fn conformal() -> Self {
        Self {
            batch_size: 64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.eps_clip > 0.0 && self.eps_clip < 0.5) {
            return Err(Error::Config(format!("clip margin must lie in (0, 0.5), got {}", self.eps_clip)));
        }
        Ok(())
    }

    pub fn dims_for(&self, data: &LdlDataset) -> Dims {
        Dims {
            d: data.feature_dim(),
            d2: self.feature_width.unwrap_or(self.hidden),
            n: self.hidden,
            m: self.readout,
            l: data.label_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Sample-weighted mean batch NLL of each epoch.
    pub epoch_nll: Vec<f64>,
    /// NLL on the whole training set before the first update.
    pub initial_nll: f64,
    /// NLL on the whole training set after the last update.
    pub final_nll: f64,
    pub grad_check: Option<GradientCheck>,
}

/// Applies one optimizer step to every parameter block, then clips W1.
fn apply_update(model: &mut SnefyModel, grad: &ModelGradient, opt: &mut Optimizer, eps_clip: f64) {
    opt.begin_step();
    for (k, block) in ParamBlock::ALL.iter().enumerate() {
        opt.update_block(k, model.block_mut(*block), grad.block(*block));
    }
    model.clip_w1(eps_clip);
}

/// Batches of one epoch: a seeded permutation cut into `batch_size` chunks,
/// keeping the trailing partial chunk.
fn epoch_batches(n: usize, batch_size: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
    rng.permutation(n).chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// Trains a freshly initialized model on `data`.
pub fn train(data: &LdlDataset, cfg: &TrainConfig) -> Result<(SnefyModel, TrainReport)> {
    cfg.validate()?;
    let master = SeededRng::new(cfg.seed);
    let model = SnefyModel::init_random(cfg.dims_for(data), &mut master.stream(0))?;
    train_from(model, data, cfg)
}

/// Continues training from `model`.
pub fn train_from(mut model: SnefyModel, data: &LdlDataset, cfg: &TrainConfig) -> Result<(SnefyModel, TrainReport)> {
    cfg.validate()?;
    model.validate()?;
    if model.dims().d != data.feature_dim() || model.dims().l != data.label_dim() {
        return Err(Error::Dimension(format!(
            "model expects d={}, L={} but data has d={}, L={}",
            model.dims().d,
            model.dims().l,
            data.feature_dim(),
            data.label_dim()
        )));
    }
    let master = SeededRng::new(cfg.seed);
    let sizes: Vec<usize> = ParamBlock::ALL.iter().map(|&b| model.block(b).len()).collect();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &sizes);
    let initial_nll = nll(&model, data)?;

    let mut grad_check = None;
    let mut epoch_nll = Vec::with_capacity(cfg.epochs);
    let mut bad_streak = 0;
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = master.stream(1 + epoch as u64);
        let mut loss_sum = 0.0;
        let mut counted = 0usize;
        for idx in epoch_batches(data.len(), cfg.batch_size, &mut shuffle_rng) {
            let batch = data.subset(&idx)?;
            if grad_check.is_none() && cfg.grad_check_stride > 0 {
                grad_check = Some(gradient_check(&model, &batch, 1e-5, cfg.grad_check_stride, 1e-6)?);
            }
            let step = match nll_and_grad(&model, &batch) {
                Ok((loss, grad)) if loss.is_finite() && grad.first_non_finite().is_none() => Some((loss, grad)),
                Ok(_) | Err(Error::Numeric(_) | Error::ModelDegenerate(_)) => None,
                Err(e) => return Err(e),
            };
            let Some((loss, grad)) = step else {
                bad_streak += 1;
                log::warn!("epoch {epoch}: skipping batch with non-finite loss ({bad_streak} in a row)");
                if bad_streak >= MAX_NON_FINITE_BATCHES {
                    return Err(Error::Divergence {
                        batches: bad_streak,
                        learning_rate: cfg.learning_rate,
                    });
                }
                continue;
            };
            bad_streak = 0;
            loss_sum += loss * idx.len() as f64;
            counted += idx.len();
            apply_update(&mut model, &grad, &mut opt, cfg.eps_clip);
        }
        epoch_nll.push(if counted > 0 { loss_sum / counted as f64 } else { f64::NAN });
        log::debug!("epoch {epoch}: mean batch nll {:.6}", epoch_nll[epoch]);
    }
    let final_nll = match nll(&model, data) {
        Ok(v) if v.is_finite() => v,
        Ok(_) | Err(Error::Numeric(_) | Error::ModelDegenerate(_)) => {
            return Err(Error::Divergence {
                batches: bad_streak,
                learning_rate: cfg.learning_rate,
            })
        }
        Err(e) => return Err(e),
    };
    Ok((
        model,
        TrainReport {
            epoch_nll,
            initial_nll,
            final_nll,
            grad_check,
        },
    ))
}
