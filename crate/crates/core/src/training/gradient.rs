//! Negative log-likelihood and its analytic gradient.
//!
//! Per sample, with z = W1·log ℓ + p, h = exp(z), f = V·h and
//! p = W2·t2(x) + b, the loss is `−ln ‖f‖² + ln Σ_ij (VᵀV)_ij K_ij`:
//!
//! * numerator: `∂/∂z = α = 2 h ∘ (Vᵀf) / ‖f‖²`, `∂/∂V = 2 f hᵀ / ‖f‖²`,
//!   `∂/∂W1 = α log ℓᵀ`;
//! * normalizer: with `P = (VᵀV) ∘ K / Z`, `∂/∂p_k = 2 Σ_j P_kj`,
//!   `∂/∂V = 2 V K / Z` and
//!   `∂/∂W1_kl = 2 Σ_j P_kj (ψ(1 + w1kl + w1jl) − ψ(L + Σ_c(w1kc + w1jc)))`.
//!
//! The projection gradient then flows through W2, b and the ReLU feature map.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::LdlDataset;
use crate::density::Prepared;
use crate::error::{Error, Result};
use crate::kernel::{checked_log, hidden_logits, log_squared_norm_parts};
use crate::model::{ParamBlock, SnefyModel};
use crate::simplex::{FeatureVector, LabelDistribution};
use crate::special::digamma;

/// Gradient with the same shapes as the model it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient(pub SnefyModel);

impl ModelGradient {
    pub fn zeros_like(model: &SnefyModel) -> Self {
        let mut g = model.clone();
        for block in ParamBlock::ALL {
            g.block_mut(block).fill(0.0);
        }
        Self(g)
    }

    pub fn block(&self, block: ParamBlock) -> &[f64] {
        self.0.block(block)
    }

    fn add_scaled(&mut self, other: &ModelGradient, scale: f64) {
        for block in ParamBlock::ALL {
            let dst = self.0.block_mut(block);
            for (d, s) in dst.iter_mut().zip(other.block(block)) {
                *d += scale * s;
            }
        }
    }

    /// First non-finite entry, as `(block, flat index)`.
    pub fn first_non_finite(&self) -> Option<(ParamBlock, usize)> {
        ParamBlock::ALL
            .iter()
            .find_map(|&b| self.block(b).iter().position(|v| !v.is_finite()).map(|i| (b, i)))
    }
}

/// `ψ(1 + w1il + w1jl) − ψ(L + Σ_c(w1ic + w1jc))` for every label, as n×n matrices.
fn digamma_terms(w1: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (n, l) = w1.shape();
    let mut out = vec![DMatrix::zeros(n, n); l];
    for i in 0..n {
        for j in i..n {
            let total = l as f64 + (0..l).map(|c| w1[(i, c)] + w1[(j, c)]).sum::<f64>();
            let psi_total = digamma(total);
            for (c, mat) in out.iter_mut().enumerate() {
                let v = digamma(1.0 + w1[(i, c)] + w1[(j, c)]) - psi_total;
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
    }
    out
}

struct GradContext<'a> {
    prep: Prepared<'a>,
    digammas: Vec<DMatrix<f64>>,
}

impl<'a> GradContext<'a> {
    fn new(model: &'a SnefyModel) -> Result<Self> {
        Ok(Self {
            prep: Prepared::new(model)?,
            digammas: digamma_terms(&model.w1),
        })
    }

    fn sample(&self, x: &FeatureVector, ell: &LabelDistribution) -> Result<(f64, ModelGradient)> {
        let model = self.prep.model;
        let dims = model.dims();
        let log_ell = checked_log(ell, dims.l)?;
        let cond = self.prep.condition(x)?;
        let z = hidden_logits(model, &log_ell, &cond.proj);
        let (log_num, alpha, h, f) = log_squared_norm_parts(&model.v, &z);
        let loss = cond.log_normalizer - log_num;

        let mut g = ModelGradient::zeros_like(model);
        if !log_num.is_finite() {
            g.0.v.fill(f64::NAN);
            return Ok((f64::INFINITY, g));
        }
        let n = dims.n;
        let total = cond.weighted_total;
        // P = (VᵀV) ∘ K / Z, symmetric
        let p_mat = &cond.weighted / total;
        let beta = DVector::from_fn(n, |k, _| 2.0 * p_mat.row(k).sum());
        let g_proj = &beta - &alpha;

        let sq = f.norm_squared();
        let k_over_z = cond.kernel.scaled() / total;
        g.0.v = (&model.v * &k_over_z) * 2.0 - (&f * h.transpose()) * (2.0 / sq);

        for (c, (dg, &log_c)) in self.digammas.iter().zip(log_ell.iter()).enumerate() {
            for k in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += p_mat[(k, j)] * dg[(k, j)];
                }
                g.0.w1[(k, c)] = 2.0 * acc - alpha[k] * log_c;
            }
        }

        g.0.b.copy_from(&g_proj);
        g.0.w2 = &g_proj * cond.t2.transpose();
        let g_t2 = model.w2.transpose() * &g_proj;
        let g_pre = DVector::from_fn(g_t2.len(), |r, _| if cond.pre[r] > 0.0 { g_t2[r] } else { 0.0 });
        let xv = DVector::from_column_slice(x);
        g.0.feature_map.weight = &g_pre * xv.transpose();
        g.0.feature_map.bias = g_pre;
        Ok((loss, g))
    }
}

/// Mean negative log-density over a batch. A sample with zero density
/// contributes +∞.
pub fn nll(model: &SnefyModel, batch: &LdlDataset) -> Result<f64> {
    let prep = Prepared::new(model)?;
    let losses: Vec<f64> = batch
        .features()
        .par_iter()
        .zip(batch.labels().par_iter())
        .map(|(x, ell)| {
            let cond = prep.condition(x)?;
            Ok(-prep.log_density(&cond, ell)?)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Mean loss and gradient over a batch. Non-finite values are returned
/// as-is; [`grad_nll`] turns them into errors.
pub fn nll_and_grad(model: &SnefyModel, batch: &LdlDataset) -> Result<(f64, ModelGradient)> {
    let ctx = GradContext::new(model)?;
    let parts: Vec<(f64, ModelGradient)> = batch
        .features()
        .par_iter()
        .zip(batch.labels().par_iter())
        .map(|(x, ell)| ctx.sample(x, ell))
        .collect::<Result<_>>()?;
    let scale = 1.0 / parts.len() as f64;
    let mut grad = ModelGradient::zeros_like(model);
    let mut loss = 0.0;
    // sequential reduction keeps results independent of thread count
    for (l, g) in &parts {
        loss += l;
        grad.add_scaled(g, scale);
    }
    Ok((loss * scale, grad))
}

/// Exact gradient of [`nll`] with respect to every parameter block.
pub fn grad_nll(model: &SnefyModel, batch: &LdlDataset) -> Result<ModelGradient> {
    let (_, grad) = nll_and_grad(model, batch)?;
    if let Some((block, idx)) = grad.first_non_finite() {
        return Err(Error::Numeric(format!("gradient of {} has a non-finite entry at flat index {idx}", block.name())));
    }
    Ok(grad)
}

/// Result of comparing analytic and finite-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub worst: (ParamBlock, usize),
    pub checked: usize,
}

/// Relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares [`grad_nll`] with central differences of step `h` on every
/// parameter, or on every `stride`-th flat coordinate when `stride > 1`.
pub fn gradient_check(model: &SnefyModel, batch: &LdlDataset, h: f64, stride: usize, floor: f64) -> Result<GradientCheck> {
    let grad = grad_nll(model, batch)?;
    let stride = stride.max(1);
    let mut probe = model.clone();
    let mut worst = (0.0, (ParamBlock::V, 0));
    let mut checked = 0;
    let mut counter = 0usize;
    for block in ParamBlock::ALL {
        for idx in 0..model.block(block).len() {
            counter += 1;
            if !(counter - 1).is_multiple_of(stride) {
                continue;
            }
            let orig = model.block(block)[idx];
            probe.block_mut(block)[idx] = orig + h;
            let up = nll(&probe, batch)?;
            probe.block_mut(block)[idx] = orig - h;
            let down = nll(&probe, batch)?;
            probe.block_mut(block)[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let err = relative_error(grad.block(block)[idx], fd, floor);
            checked += 1;
            if err > worst.0 || err.is_nan() {
                worst = (err, (block, idx));
            }
        }
    }
    Ok(GradientCheck {
        max_rel_error: worst.0,
        worst: worst.1,
        checked,
    })
}
