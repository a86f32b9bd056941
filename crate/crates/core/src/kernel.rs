//! Closed-form simplex integral of the pairwise exp-kernel and the
//! normalizer matrix built from it.
//!
//! With t1(ℓ) = log ℓ and σ = exp, the integrand for hidden rows i and j is
//! `exp(p_i + p_j) · Π_l ℓ_l^(w1il + w1jl)`, a Dirichlet integral:
//!
//! ```text
//! K_ij(x) = exp(p_i + p_j) · Π_l Γ(1 + w1il + w1jl) / Γ(L + Σ_l (w1il + w1jl))
//! ```
//!
//! where `p = W2·t2(x) + b`. The Γ part depends on W1 alone and is cached in
//! a [`GammaTable`]; everything is kept in the log domain.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::SnefyModel;
use crate::simplex::{FeatureVector, LabelDistribution};
use crate::special::ln_gamma;

/// Arguments of Γ at or below this value are accepted but logged.
pub const NEAR_BOUNDARY: f64 = 1e-8;

fn log_gamma_ratio(w1i: &[f64], w1j: &[f64], rows: Option<(usize, usize)>) -> Result<f64> {
    let len = w1i.len();
    let mut acc = 0.0;
    let mut total = len as f64;
    for (label, (a, b)) in w1i.iter().zip(w1j).enumerate() {
        let arg = 1.0 + (a + b);
        if !(arg > 0.0) {
            return Err(Error::KernelDomain { rows, label, value: arg });
        }
        if arg <= NEAR_BOUNDARY {
            log::warn!("kernel argument 1 + w1i[{label}] + w1j[{label}] = {arg:e} is at the integrability boundary");
        }
        acc += ln_gamma(arg);
        total += a + b;
    }
    Ok(acc - ln_gamma(total))
}

/// Log of one kernel entry, given the two W1 rows and the two precomputed
/// projections `w2ᵀt2(x) + b`.
pub fn log_kernel_entry(w1i: &[f64], w1j: &[f64], proj_i: f64, proj_j: f64) -> Result<f64> {
    if w1i.len() != w1j.len() {
        return Err(Error::Dimension(format!("W1 rows have lengths {} and {}", w1i.len(), w1j.len())));
    }
    Ok(proj_i + proj_j + log_gamma_ratio(w1i, w1j, None)?)
}

/// `ln Π_l Γ(1 + w1il + w1jl) − ln Γ(L + Σ_l(w1il + w1jl))` for every row pair.
#[derive(Debug, Clone)]
pub struct GammaTable {
    log_c: DMatrix<f64>,
}

impl GammaTable {
    pub fn new(w1: &DMatrix<f64>) -> Result<Self> {
        let n = w1.nrows();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| w1.row(i).iter().copied().collect()).collect();
        let mut log_c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = log_gamma_ratio(&rows[i], &rows[j], Some((i, j)))?;
                log_c[(i, j)] = v;
                log_c[(j, i)] = v;
            }
        }
        Ok(Self { log_c })
    }

    pub fn log_c(&self) -> &DMatrix<f64> {
        &self.log_c
    }

    /// Assembles K(x) from the projection vector.
    pub fn kernel(&self, proj: &DVector<f64>) -> Result<KernelMatrix> {
        let n = self.log_c.nrows();
        let log_entries = DMatrix::from_fn(n, n, |i, j| proj[i] + proj[j] + self.log_c[(i, j)]);
        KernelMatrix::from_log(log_entries)
    }
}

/// The n×n normalizer matrix stored as `scaled = exp(log K − log_scale)`,
/// with `log_scale` the largest log entry.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    log_entries: DMatrix<f64>,
    log_scale: f64,
    scaled: DMatrix<f64>,
}

impl KernelMatrix {
    fn from_log(log_entries: DMatrix<f64>) -> Result<Self> {
        let log_scale = log_entries.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !log_scale.is_finite() || log_entries.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric(format!("kernel log entries are not finite (max {log_scale})")));
        }
        let scaled = log_entries.map(|v| (v - log_scale).exp());
        Ok(Self {
            log_entries,
            log_scale,
            scaled,
        })
    }

    pub fn dim(&self) -> usize {
        self.scaled.nrows()
    }

    pub fn log_entries(&self) -> &DMatrix<f64> {
        &self.log_entries
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Entries divided by `exp(log_scale)`; the largest is exactly 1.
    pub fn scaled(&self) -> &DMatrix<f64> {
        &self.scaled
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.log_entries[(i, j)].exp()
    }

    /// Unscaled entries; may overflow for large parameters.
    pub fn entries(&self) -> DMatrix<f64> {
        self.log_entries.map(f64::exp)
    }
}

/// K(x) for a model and a feature vector.
pub fn kernel_matrix(model: &SnefyModel, x: &FeatureVector) -> Result<KernelMatrix> {
    model.validate()?;
    let proj = model.projection(x)?;
    GammaTable::new(&model.w1)?.kernel(&proj)
}

/// Hidden pre-activations `W1·log ℓ + W2·t2(x) + b`.
pub(crate) fn hidden_logits(model: &SnefyModel, log_ell: &[f64], proj: &DVector<f64>) -> DVector<f64> {
    let mut z = proj.clone();
    for i in 0..z.len() {
        let mut acc = 0.0;
        for (l, le) in log_ell.iter().enumerate() {
            acc += model.w1[(i, l)] * le;
        }
        z[i] += acc;
    }
    z
}

pub(crate) fn checked_log(ell: &LabelDistribution, expected: usize) -> Result<Vec<f64>> {
    if ell.len() != expected {
        return Err(Error::Dimension(format!("label vector has {} entries, model expects {expected}", ell.len())));
    }
    ell.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(Error::NonInteriorLabel { index, value })
            }
        })
        .collect()
}

/// `ln ‖V·exp(z)‖²` computed with the largest logit factored out, given the hidden
/// logits `z`. Returns `(log_norm, alpha, scaled_h, scaled_f)` where
/// `alpha = ∂ ln‖f‖² / ∂z`, `scaled_h = exp(z − max z)` and `scaled_f = V·scaled_h`.
pub(crate) fn log_squared_norm_parts(
    v: &DMatrix<f64>,
    z: &DVector<f64>,
) -> (f64, DVector<f64>, DVector<f64>, DVector<f64>) {
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = z.map(|zi| (zi - zmax).exp());
    let f = v * &h;
    let sq = f.norm_squared();
    let log_norm = if sq > 0.0 { 2.0 * zmax + sq.ln() } else { f64::NEG_INFINITY };
    let alpha = if sq > 0.0 {
        let vtf = v.transpose() * &f;
        h.component_mul(&vtf) * (2.0 / sq)
    } else {
        DVector::zeros(z.len())
    };
    (log_norm, alpha, h, f)
}

/// `‖V·exp(W1·log ℓ + W2·t2(x) + b)‖²`, the unnormalized density.
pub fn unnormalized_squared_norm(model: &SnefyModel, ell: &LabelDistribution, x: &FeatureVector) -> Result<f64> {
    Ok(log_unnormalized_squared_norm(model, ell, x)?.exp())
}

pub fn log_unnormalized_squared_norm(model: &SnefyModel, ell: &LabelDistribution, x: &FeatureVector) -> Result<f64> {
    let log_ell = checked_log(ell, model.dims().l)?;
    let proj = model.projection(x)?;
    let z = hidden_logits(model, &log_ell, &proj);
    Ok(log_squared_norm_parts(&model.v, &z).0)
}

/// The pointwise matrix K̃(ℓ, x) with entries `exp(z_i) · exp(z_j)`.
pub fn kernel_tilde(model: &SnefyModel, ell: &LabelDistribution, x: &FeatureVector) -> Result<DMatrix<f64>> {
    let log_ell = checked_log(ell, model.dims().l)?;
    let proj = model.projection(x)?;
    let z = hidden_logits(model, &log_ell, &proj);
    let n = z.len();
    Ok(DMatrix::from_fn(n, n, |i, j| (z[i] + z[j]).exp()))
}
