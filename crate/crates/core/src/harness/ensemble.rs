use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::{evaluate, MetricReport};
use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::rng::SeededRng;
use crate::simplex::{FeatureVector, LabelDistribution};
use crate::training::{train, train_maxent_baseline, MaxEntModel, TrainConfig};

pub const DEFAULT_N_BASE: usize = 25;
pub const DEFAULT_N_SAMPLE: usize = 50;

const SUBSAMPLE_STREAM: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// Uniform weights.
    Average,
    /// Weights proportional to the SNEFY density of each prediction.
    Weighted,
}

impl fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleMode::Average => "average",
            EnsembleMode::Weighted => "weighted",
        })
    }
}

impl FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(EnsembleMode::Average),
            "weighted" => Ok(EnsembleMode::Weighted),
            _ => Err(Error::Config(format!("unknown ensemble mode {s:?}; expected average or weighted"))),
        }
    }
}

/// `p_i / Σ_j p_j` from log densities, computed stably. Uniform weights,
/// with a warning, when no density is positive and finite.
pub fn ensemble_weights(log_densities: &[f64]) -> Vec<f64> {
    let n = log_densities.len();
    let max = log_densities.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        if max == f64::NEG_INFINITY {
            log::warn!("all ensemble densities are zero; falling back to uniform weights");
        } else {
            log::warn!("an ensemble density is infinite; falling back to uniform weights");
        }
        return vec![1.0 / n as f64; n];
    }
    let raw: Vec<f64> = log_densities.iter().map(|&v| if v.is_nan() { 0.0 } else { (v - max).exp() }).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

fn combine(preds: &[LabelDistribution], weights: &[f64]) -> Result<LabelDistribution> {
    let l = preds[0].len();
    let mut out = vec![0.0; l];
    for (p, &w) in preds.iter().zip(weights) {
        out.iter_mut().zip(p.iter()).for_each(|(o, v)| *o += w * v);
    }
    LabelDistribution::new(out)
}

fn check_preds(preds: &[LabelDistribution]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Config("ensemble needs at least one base prediction".into()));
    }
    if preds.iter().any(|p| p.len() != preds[0].len()) {
        return Err(Error::Dimension("base predictions have different label counts".into()));
    }
    Ok(())
}

/// Density-weighted combination; returns the prediction and its weights.
pub fn weighted_combine(preds: &[LabelDistribution], log_densities: &[f64]) -> Result<(LabelDistribution, Vec<f64>)> {
    check_preds(preds)?;
    if preds.len() != log_densities.len() {
        return Err(Error::Dimension("one log density per base prediction is required".into()));
    }
    let w = ensemble_weights(log_densities);
    Ok((combine(preds, &w)?, w))
}

fn predict_with(
    base_preds: &[LabelDistribution],
    prep: &Prepared<'_>,
    x: &FeatureVector,
    mode: EnsembleMode,
) -> Result<(LabelDistribution, Vec<f64>)> {
    check_preds(base_preds)?;
    match mode {
        EnsembleMode::Average => {
            let w = vec![1.0 / base_preds.len() as f64; base_preds.len()];
            Ok((combine(base_preds, &w)?, w))
        }
        EnsembleMode::Weighted => {
            let cond = prep.condition(x)?;
            let lds: Vec<f64> = base_preds.iter().map(|p| prep.log_density(&cond, p)).collect::<Result<_>>()?;
            weighted_combine(base_preds, &lds)
        }
    }
}

/// Combines base-learner predictions at `x`.
pub fn ensemble_predict(
    base_preds: &[LabelDistribution],
    model: &SnefyModel,
    x: &FeatureVector,
    mode: EnsembleMode,
) -> Result<LabelDistribution> {
    Ok(predict_with(base_preds, &Prepared::new(model)?, x, mode)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggingOutcome {
    pub average: MetricReport,
    pub weighted: MetricReport,
    /// Weighted-mode weights per test sample.
    pub weights: Vec<Vec<f64>>,
}

/// Trains `n_base` max-entropy learners on subsamples of `n_sample` rows
/// drawn without replacement, one SNEFY model on all of `train_set`, and
/// evaluates both combination modes on `test`.
pub fn bagging_experiment(
    train_set: &LdlDataset,
    test: &LdlDataset,
    n_base: usize,
    n_sample: usize,
    cfg: &TrainConfig,
) -> Result<BaggingOutcome> {
    if n_base == 0 || n_sample == 0 {
        return Err(Error::Config("bagging needs n_base >= 1 and n_sample >= 1".into()));
    }
    if n_sample > train_set.len() {
        return Err(Error::Config(format!("subsample of {n_sample} exceeds training set of {}", train_set.len())));
    }
    let master = SeededRng::new(cfg.seed);
    let learners: Vec<MaxEntModel> = (0..n_base)
        .into_par_iter()
        .map(|i| {
            let idx = master.stream(SUBSAMPLE_STREAM + i as u64).permutation(train_set.len())[..n_sample].to_vec();
            let base_cfg = TrainConfig { seed: cfg.seed.wrapping_add(1 + i as u64), ..cfg.clone() };
            train_maxent_baseline(&train_set.subset(&idx)?, &base_cfg)
        })
        .collect::<Result<_>>()?;
    let (snefy, _) = train(train_set, cfg)?;
    let prep = Prepared::new(&snefy)?;
    let rows: Vec<(LabelDistribution, LabelDistribution, Vec<f64>)> = test
        .features()
        .par_iter()
        .map(|x| {
            let preds: Vec<LabelDistribution> = learners.iter().map(|m| m.predict(x)).collect();
            let (avg, _) = predict_with(&preds, &prep, x, EnsembleMode::Average)?;
            let (wtd, w) = predict_with(&preds, &prep, x, EnsembleMode::Weighted)?;
            Ok((avg, wtd, w))
        })
        .collect::<Result<_>>()?;
    let avg: Vec<LabelDistribution> = rows.iter().map(|r| r.0.clone()).collect();
    let wtd: Vec<LabelDistribution> = rows.iter().map(|r| r.1.clone()).collect();
    Ok(BaggingOutcome {
        average: evaluate(test.labels(), &avg)?,
        weighted: evaluate(test.labels(), &wtd)?,
        weights: rows.into_iter().map(|r| r.2).collect(),
    })
}
