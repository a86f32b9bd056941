use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::{evaluate_snefy, MetricReport};
use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::rng::SeededRng;
use crate::simplex::FeatureVector;
use crate::training::{train, train_maxent_baseline, TrainConfig};
use crate::uncertainty::{entropy_estimate_prepared, fit_concentration, DirichletBaseline, DEFAULT_N_ITER};

pub const DEFAULT_N_INITIAL: usize = 400;
pub const DEFAULT_N_QUERY: usize = 100;
pub const KMEANS_ITERS: usize = 20;

const POOL_STREAM: u64 = 100;
const SELECT_STREAM: u64 = 101;

/// Indices of the `k` largest scores, descending; ties go to the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("acquisition scores contain NaN".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps lower indices first among equal scores
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx.truncate(k);
    Ok(idx)
}

/// The `n_query` pool points with the largest estimated differential
/// entropy. Point `i` draws its importance samples from `rng.stream(i)`.
pub fn active_select(
    model: &SnefyModel,
    unlabeled: &[FeatureVector],
    n_query: usize,
    n_iter: usize,
    rng: &SeededRng,
) -> Result<Vec<usize>> {
    if unlabeled.is_empty() {
        return Err(Error::Config("active selection from an empty pool".into()));
    }
    if n_query > unlabeled.len() {
        return Err(Error::Config(format!("cannot query {n_query} points from a pool of {}", unlabeled.len())));
    }
    let prep = Prepared::new(model)?;
    let scores: Vec<f64> = unlabeled
        .par_iter()
        .enumerate()
        .map(|(i, x)| entropy_estimate_prepared(&prep, x, n_iter, &mut rng.stream(i as u64)))
        .collect::<Result<_>>()?;
    top_k_indices(&scores, n_query)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(points: &[FeatureVector], c: &[f64], skip: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if skip[i] {
            continue;
        }
        let d = sq_dist(p, c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Lloyd's k-means with `iters` rounds initialized at `k` distinct random
/// points, then the nearest not-yet-chosen point to each centroid.
pub fn kmeans_select(points: &[FeatureVector], k: usize, iters: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if k > points.len() {
        return Err(Error::Config(format!("cannot pick {k} centroids from {} points", points.len())));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let d = points[0].len();
    let mut centroids: Vec<Vec<f64>> = rng.permutation(points.len())[..k].iter().map(|&i| points[i].to_vec()).collect();
    for _ in 0..iters {
        let assign: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(&centroids, p))
            .collect();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p.iter()).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            // an empty cluster keeps its previous centroid
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let mut taken = vec![false; points.len()];
    let mut out = Vec::with_capacity(k);
    for c in &centroids {
        let i = nearest(points, c, &taken).expect("k <= number of points");
        taken[i] = true;
        out.push(i);
    }
    Ok(out)
}

fn nearest_centroid(centroids: &[Vec<f64>], p: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, v) in centroids.iter().enumerate() {
        let d = sq_dist(p, v);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

/// Acquisition rule for one active-learning round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Largest importance-sampled SNEFY differential entropy.
    SnefyEntropy,
    /// Largest closed-form entropy of a Dirichlet around a max-entropy fit.
    DirichletEntropy,
    Random,
    /// Points nearest to k-means centroids.
    Kmeans,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::SnefyEntropy, Strategy::DirichletEntropy, Strategy::Random, Strategy::Kmeans];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SnefyEntropy => "snefy-entropy",
            Strategy::DirichletEntropy => "dirichlet-entropy",
            Strategy::Random => "random",
            Strategy::Kmeans => "kmeans",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}; expected one of snefy-entropy, dirichlet-entropy, random, kmeans")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveConfig {
    pub initial_size: usize,
    pub n_query: usize,
    /// Importance samples per pool point for SNEFY entropy.
    pub n_iter: usize,
    pub strategy: Strategy,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        Self {
            initial_size: DEFAULT_N_INITIAL,
            n_query: DEFAULT_N_QUERY,
            n_iter: DEFAULT_N_ITER,
            strategy: Strategy::SnefyEntropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveOutcome {
    /// Test metrics of the model trained on the initial pool.
    pub initial: MetricReport,
    /// Test metrics after retraining on the augmented pool.
    pub report: MetricReport,
    /// Queried rows of the training pool, in selection order.
    pub queried: Vec<usize>,
}

/// Trains on a seeded initial subset of `pool`, queries by `active.strategy`
/// among the rest, retrains on the union and evaluates the conditional mean
/// on `test`. Every strategy retrains the same SNEFY model so only the
/// acquisition differs.
pub fn active_learning_round(
    pool: &LdlDataset,
    test: &LdlDataset,
    active: &ActiveConfig,
    cfg: &TrainConfig,
) -> Result<ActiveOutcome> {
    if pool.len() < active.initial_size + active.n_query {
        return Err(Error::Config(format!(
            "pool of {} is smaller than initial size {} plus {} queries",
            pool.len(),
            active.initial_size,
            active.n_query
        )));
    }
    if active.initial_size == 0 {
        return Err(Error::Config("initial pool must be nonempty".into()));
    }
    let master = SeededRng::new(cfg.seed);
    let order = master.stream(POOL_STREAM).permutation(pool.len());
    let (init_idx, rest_idx) = order.split_at(active.initial_size);
    let initial_data = pool.subset(init_idx)?;
    let (model, _) = train(&initial_data, cfg)?;
    let initial = evaluate_snefy(&model, test)?;
    if active.n_query == 0 {
        return Ok(ActiveOutcome { initial, report: initial, queried: Vec::new() });
    }
    let unlabeled: Vec<FeatureVector> = rest_idx.iter().map(|&i| pool.feature(i).clone()).collect();
    let mut select_rng = master.stream(SELECT_STREAM);
    let picks = match active.strategy {
        Strategy::SnefyEntropy => active_select(&model, &unlabeled, active.n_query, active.n_iter, &select_rng)?,
        Strategy::DirichletEntropy => {
            let predictor = train_maxent_baseline(&initial_data, cfg)?;
            let tau = fit_concentration(&predictor, &initial_data)?;
            let baseline = DirichletBaseline { predictor, tau };
            let scores: Vec<f64> = unlabeled.par_iter().map(|x| baseline.entropy(x)).collect::<Result<_>>()?;
            top_k_indices(&scores, active.n_query)?
        }
        Strategy::Random => select_rng.permutation(unlabeled.len())[..active.n_query].to_vec(),
        Strategy::Kmeans => kmeans_select(&unlabeled, active.n_query, KMEANS_ITERS, &mut select_rng)?,
    };
    let queried: Vec<usize> = picks.iter().map(|&j| rest_idx[j]).collect();
    let augmented = initial_data.concat(&pool.subset(&queried)?)?;
    let (retrained, _) = train(&augmented, cfg)?;
    Ok(ActiveOutcome { initial, report: evaluate_snefy(&retrained, test)?, queried })
}
