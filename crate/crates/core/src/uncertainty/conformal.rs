use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::moments::level_to_k;
use crate::simplex::FeatureVector;

/// Closed interval `(lo, hi)` ⊆ [0, 1].
pub type Interval = (f64, f64);

/// Anything that yields a per-label conditional mean and variance.
pub trait IntervalModel: Sync {
    fn label_dim(&self) -> usize;
    /// Per-label `(mean, variance)` at `x`.
    fn mean_variance(&self, x: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl IntervalModel for Prepared<'_> {
    fn label_dim(&self) -> usize {
        self.model.dims().l
    }

    fn mean_variance(&self, x: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)> {
        let cond = self.condition(x)?;
        let mean = self.mean(&cond);
        let var = self.variance(&cond, &mean)?;
        Ok((mean.iter().copied().collect(), var.iter().copied().collect()))
    }
}

/// `|truth − mean| / (k √var)`. Zero variance scores 0 on an exact hit and
/// +∞ otherwise.
pub fn calibration_score(truth: f64, mean: f64, variance: f64, k: f64) -> f64 {
    let resid = (truth - mean).abs();
    let scale = k * variance.max(0.0).sqrt();
    if scale > 0.0 {
        resid / scale
    } else if resid == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn scores_matrix<M: IntervalModel + ?Sized>(model: &M, calib: &LdlDataset, k: f64) -> Result<DMatrix<f64>> {
    if !(k > 1.0) {
        return Err(Error::InvalidLevel(format!("Chebyshev multiplier must exceed 1, got {k}")));
    }
    if calib.label_dim() != model.label_dim() {
        return Err(Error::Dimension(format!(
            "calibration labels have width {}, model expects {}",
            calib.label_dim(),
            model.label_dim()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..calib.len())
        .into_par_iter()
        .map(|i| {
            let (mean, var) = model.mean_variance(calib.feature(i))?;
            Ok(calib.label(i).iter().enumerate().map(|(r, &t)| calibration_score(t, mean[r], var[r], k)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(calib.len(), calib.label_dim(), |i, r| rows[i][r]))
}

/// N_cal×L matrix of calibration scores for a SNEFY model.
pub fn calibration_scores(model: &SnefyModel, calib: &LdlDataset, k: f64) -> Result<DMatrix<f64>> {
    scores_matrix(&Prepared::new(model)?, calib, k)
}

/// The ⌈level·(N+1)⌉-th smallest score, or +∞ when that rank exceeds N.
pub fn conformal_quantile(scores: &[f64], level: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Config("conformal quantile of an empty score set".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(format!("level must lie in (0, 1), got {level}")));
    }
    if scores.iter().any(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::Numeric("calibration scores must be nonnegative numbers".into()));
    }
    let n = scores.len();
    // tolerance keeps exact products such as 0.9·100 from rounding up
    let rank = (level * (n + 1) as f64 - 1e-9).ceil().max(1.0) as usize;
    if rank > n {
        return Ok(f64::INFINITY);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}

/// `mean ± k·q·√var` intersected with [0, 1]; q = +∞ gives [0, 1].
pub fn interval_from(mean: f64, variance: f64, k: f64, q: f64) -> Interval {
    if q.is_infinite() {
        return (0.0, 1.0);
    }
    let half = k * q * variance.max(0.0).sqrt();
    ((mean - half).max(0.0), (mean + half).min(1.0))
}

/// Fitted per-label conformal quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalCalibrator {
    pub level: f64,
    /// `1/√(1 − level)`.
    pub k: f64,
    /// One quantile per label, possibly +∞.
    pub quantiles: Vec<f64>,
}

impl ConformalCalibrator {
    /// Scores the calibration set and takes the per-label conformal quantile.
    pub fn fit<M: IntervalModel + ?Sized>(model: &M, calib: &LdlDataset, level: f64) -> Result<Self> {
        let k = level_to_k(level)?;
        let scores = scores_matrix(model, calib, k)?;
        Self::from_scores(&scores, level)
    }

    pub fn from_scores(scores: &DMatrix<f64>, level: f64) -> Result<Self> {
        let k = level_to_k(level)?;
        let quantiles = scores
            .column_iter()
            .map(|c| conformal_quantile(&c.iter().copied().collect::<Vec<_>>(), level))
            .collect::<Result<_>>()?;
        Ok(Self { level, k, quantiles })
    }

    pub fn interval(&self, mean: f64, variance: f64, r: usize) -> Interval {
        interval_from(mean, variance, self.k, self.quantiles[r])
    }
}

/// Calibrated interval for label `r` at `x`.
pub fn calibrated_interval(model: &SnefyModel, x: &FeatureVector, r: usize, cal: &ConformalCalibrator) -> Result<Interval> {
    if r >= cal.quantiles.len() {
        return Err(Error::Dimension(format!("label index {r} out of range for {} labels", cal.quantiles.len())));
    }
    let prep = Prepared::new(model)?;
    let (mean, var) = prep.mean_variance(x)?;
    Ok(cal.interval(mean[r], var[r], r))
}

/// Calibrated intervals for every test sample (outer) and label (inner).
pub fn predict_intervals<M: IntervalModel + ?Sized>(
    model: &M,
    cal: &ConformalCalibrator,
    features: &[FeatureVector],
) -> Result<Vec<Vec<Interval>>> {
    features
        .par_iter()
        .map(|x| {
            let (mean, var) = model.mean_variance(x)?;
            Ok((0..mean.len()).map(|r| cal.interval(mean[r], var[r], r)).collect())
        })
        .collect()
}

fn check_intervals(test: &LdlDataset, intervals: &[Vec<Interval>], r: usize) -> Result<()> {
    if test.is_empty() {
        return Err(Error::Config("coverage needs a nonempty test set".into()));
    }
    if intervals.len() != test.len() || intervals.iter().any(|row| row.len() <= r) || r >= test.label_dim() {
        return Err(Error::Dimension("intervals do not match the test set".into()));
    }
    Ok(())
}

fn covers(iv: Interval, t: f64) -> bool {
    iv.0 <= t && t <= iv.1
}

/// Fraction of test samples whose label `r` lies in its interval.
pub fn coverage(test: &LdlDataset, intervals: &[Vec<Interval>], r: usize) -> Result<f64> {
    check_intervals(test, intervals, r)?;
    let hit = (0..test.len()).filter(|&i| covers(intervals[i][r], test.label(i)[r])).count();
    Ok(hit as f64 / test.len() as f64)
}

/// Minimum coverage of label `r` over `bin_size` equal-width bins of the
/// first feature's observed range. Empty bins are skipped and boundary
/// values fall in the lower bin.
pub fn fsc(test: &LdlDataset, intervals: &[Vec<Interval>], bin_size: usize, r: usize) -> Result<f64> {
    check_intervals(test, intervals, r)?;
    if bin_size == 0 {
        return Err(Error::Config("bin size must be at least 1".into()));
    }
    if test.feature_dim() == 0 {
        return Err(Error::Dimension("binning needs at least one feature".into()));
    }
    let first: Vec<f64> = test.features().iter().map(|x| x[0]).collect();
    let lo = first.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bin_size as f64;
    let mut hits = vec![0usize; bin_size];
    let mut counts = vec![0usize; bin_size];
    for (i, &v) in first.iter().enumerate() {
        let bin = if width > 0.0 {
            (((v - lo) / width).ceil() as isize - 1).clamp(0, bin_size as isize - 1) as usize
        } else {
            0
        };
        counts[bin] += 1;
        if covers(intervals[i][r], test.label(i)[r]) {
            hits[bin] += 1;
        }
    }
    Ok(counts
        .iter()
        .zip(&hits)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &h)| h as f64 / c as f64)
        .fold(f64::INFINITY, f64::min))
}

/// One FSC value for a (label, bin size) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FscRow {
    pub label: String,
    pub label_index: usize,
    pub bin_size: usize,
    pub fsc: f64,
}

/// FSC rows ordered by label then bin size, plus overall per-label coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalReport {
    pub rows: Vec<FscRow>,
    pub coverage: Vec<f64>,
}

pub fn conformal_report(test: &LdlDataset, intervals: &[Vec<Interval>], bin_sizes: &[usize]) -> Result<ConformalReport> {
    let mut rows = Vec::with_capacity(test.label_dim() * bin_sizes.len());
    let mut cov = Vec::with_capacity(test.label_dim());
    for (r, name) in test.label_names().iter().enumerate() {
        cov.push(coverage(test, intervals, r)?);
        for &b in bin_sizes {
            rows.push(FscRow { label: name.clone(), label_index: r, bin_size: b, fsc: fsc(test, intervals, b, r)? });
        }
    }
    Ok(ConformalReport { rows, coverage: cov })
}
