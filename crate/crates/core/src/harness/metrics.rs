use rayon::prelude::*;

use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::simplex::{LabelDistribution, EPS_FLOOR};

/// The six LDL measures, for one pair or averaged over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub cheby: f64,
    pub clark: f64,
    pub canb: f64,
    pub kl: f64,
    pub cos: f64,
    pub inter: f64,
}

impl MetricReport {
    pub const COLUMNS: [&'static str; 6] = ["cheby", "clark", "canb", "kl", "cos", "inter"];

    pub fn values(&self) -> [f64; 6] {
        [self.cheby, self.clark, self.canb, self.kl, self.cos, self.inter]
    }
}

/// Distance and similarity measures between a true and a predicted label
/// distribution. 0/0 terms in Clark and Canberra count as 0. KL replaces
/// zero predictions by the floor and drops zero-truth terms.
pub fn ldl_metrics(truth: &LabelDistribution, pred: &LabelDistribution) -> MetricReport {
    assert_eq!(truth.len(), pred.len(), "label distributions of different widths");
    let mut r = MetricReport::default();
    let (mut clark2, mut dot, mut nt, mut np) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &p) in truth.iter().zip(pred.iter()) {
        let diff = (t - p).abs();
        let sum = t + p;
        r.cheby = r.cheby.max(diff);
        if sum > 0.0 {
            clark2 += (diff / sum).powi(2);
            r.canb += diff / sum;
        }
        if t > 0.0 {
            let q = if p > 0.0 { p } else { EPS_FLOOR };
            r.kl += t * (t / q).ln();
        }
        dot += t * p;
        nt += t * t;
        np += p * p;
        r.inter += t.min(p);
    }
    r.clark = clark2.sqrt();
    // rounding can push a near-zero divergence below 0
    r.kl = r.kl.max(0.0);
    r.cos = dot / (nt * np).sqrt();
    r
}

/// Mean of [`ldl_metrics`] over paired samples.
pub fn evaluate(truth: &[LabelDistribution], pred: &[LabelDistribution]) -> Result<MetricReport> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(Error::Dimension(format!(
            "evaluation needs equal nonempty sets, got {} truths and {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut acc = [0.0; 6];
    for (t, p) in truth.iter().zip(pred) {
        for (a, v) in acc.iter_mut().zip(ldl_metrics(t, p).values()) {
            *a += v;
        }
    }
    let n = truth.len() as f64;
    Ok(MetricReport {
        cheby: acc[0] / n,
        clark: acc[1] / n,
        canb: acc[2] / n,
        kl: acc[3] / n,
        cos: acc[4] / n,
        inter: acc[5] / n,
    })
}

/// Conditional mean of a prepared model as a label distribution.
pub(crate) fn prepared_mean(prep: &Prepared<'_>, x: &crate::simplex::FeatureVector) -> Result<LabelDistribution> {
    let cond = prep.condition(x)?;
    let mean = prep.mean(&cond);
    let clipped: Vec<f64> = mean.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    LabelDistribution::new(clipped.iter().map(|v| v / s).collect())
}

/// Point prediction E[ℓ | x].
pub fn predict_mean(model: &SnefyModel, x: &crate::simplex::FeatureVector) -> Result<LabelDistribution> {
    prepared_mean(&Prepared::new(model)?, x)
}

/// Metrics of the conditional-mean predictor on `test`.
pub fn evaluate_snefy(model: &SnefyModel, test: &LdlDataset) -> Result<MetricReport> {
    let prep = Prepared::new(model)?;
    let preds: Vec<LabelDistribution> =
        test.features().par_iter().map(|x| prepared_mean(&prep, x)).collect::<Result<_>>()?;
    evaluate(test.labels(), &preds)
}
