use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::simplex::{FeatureVector, LabelDistribution};

/// Paired features and label distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlDataset {
    features: Vec<FeatureVector>,
    labels: Vec<LabelDistribution>,
    label_names: Vec<String>,
}

impl LdlDataset {
    pub fn new(
        features: Vec<FeatureVector>,
        labels: Vec<LabelDistribution>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Dimension("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} label rows",
                features.len(),
                labels.len()
            )));
        }
        let d = features[0].len();
        let l = label_names.len();
        if let Some(i) = features.iter().position(|f| f.len() != d) {
            return Err(Error::Dimension(format!("row {i} has {} features, expected {d}", features[i].len())));
        }
        if let Some(i) = labels.iter().position(|f| f.len() != l) {
            return Err(Error::Dimension(format!("row {i} has {} labels, expected {l}", labels[i].len())));
        }
        Ok(Self {
            features,
            labels,
            label_names,
        })
    }

    /// Dataset with labels named `l0..l{L-1}`.
    pub fn with_default_names(features: Vec<FeatureVector>, labels: Vec<LabelDistribution>) -> Result<Self> {
        let l = labels.first().map_or(0, |ld| ld.len());
        Self::new(features, labels, (0..l).map(|i| format!("l{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn label_dim(&self) -> usize {
        self.label_names.len()
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn labels(&self) -> &[LabelDistribution] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature(&self, i: usize) -> &FeatureVector {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> &LabelDistribution {
        &self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FeatureVector, &LabelDistribution)> {
        self.features.iter().zip(self.labels.iter())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Dimension("empty subset".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Dimension(format!("row {i} out of bounds for {} rows", self.len())));
        }
        Ok(Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            label_names: self.label_names.clone(),
        })
    }

    /// Appends the rows of `other`.
    pub fn concat(&self, other: &LdlDataset) -> Result<Self> {
        if other.feature_dim() != self.feature_dim() || other.label_dim() != self.label_dim() {
            return Err(Error::Dimension("datasets have different shapes".into()));
        }
        let mut out = self.clone();
        out.features.extend(other.features.iter().cloned());
        out.labels.extend(other.labels.iter().cloned());
        Ok(out)
    }

    /// Shuffled split into consecutive parts with the given ratios.
    ///
    /// Ratios are normalized; part sizes are floored and the last part takes
    /// the remainder. Every part must end up nonempty.
    pub fn split(&self, ratios: &[f64], rng: &mut SeededRng) -> Result<Vec<Self>> {
        let parts = split_indices(self.len(), ratios, rng)?;
        parts.iter().map(|idx| self.subset(idx)).collect()
    }
}

/// Index form of [`LdlDataset::split`].
pub fn split_indices(n: usize, ratios: &[f64], rng: &mut SeededRng) -> Result<Vec<Vec<usize>>> {
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Config(format!("split ratios must be positive, got {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    let perm = rng.permutation(n);
    let mut out = Vec::with_capacity(ratios.len());
    let mut start = 0;
    for (k, r) in ratios.iter().enumerate() {
        let end = if k + 1 == ratios.len() {
            n
        } else {
            (start + ((r / total) * n as f64).floor() as usize).min(n)
        };
        if end <= start {
            return Err(Error::Config(format!("split part {k} is empty for {n} rows")));
        }
        out.push(perm[start..end].to_vec());
        start = end;
    }
    Ok(out)
}
