//! Numerical oracles that never touch the closed-form kernel.

use snefy_ldl::density::Prepared;
use snefy_ldl::simplex::ln_uniform_simplex_density;
use snefy_ldl::{sample_uniform_simplex, FeatureVector, SeededRng, SnefyModel};

fn ln_sigmoid(u: f64) -> f64 {
    // ln σ(u) = −ln(1 + e^{−u})
    if u > 0.0 {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

/// ∫₀¹ x^c1 (1−x)^c2 dx for c1, c2 > −1 by tanh-sinh quadrature with step
/// halving until successive levels agree to `rel_tol`. Works in the log
/// domain so endpoint singularities never form explicitly.
pub fn beta_like_integral(c1: f64, c2: f64, rel_tol: f64) -> f64 {
    let term = |t: f64| {
        let u = std::f64::consts::PI * t.sinh();
        let log_w = (c1 + 1.0) * ln_sigmoid(u) + (c2 + 1.0) * ln_sigmoid(-u);
        (log_w).exp() * std::f64::consts::PI * t.cosh()
    };
    let t_max = 7.0;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        // add the new odd nodes
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += term(k as f64 * h) + term(-(k as f64) * h);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Monte-Carlo estimate of every kernel entry from uniform simplex draws.
/// Returns `(mean, standard error)` matrices in row-major order, each
/// divided by `exp(p_i + p_j)`.
pub fn mc_kernel_gamma_part(w1: &nalgebra::DMatrix<f64>, samples: usize, rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
    let (n, l) = (w1.nrows(), w1.ncols());
    let ln_q = ln_uniform_simplex_density(l);
    let mut s1 = vec![0.0; n * n];
    let mut s2 = vec![0.0; n * n];
    let mut row_log = vec![0.0; n];
    for _ in 0..samples {
        let ell = sample_uniform_simplex(l, rng).unwrap();
        for (i, r) in row_log.iter_mut().enumerate() {
            *r = (0..l).map(|c| w1[(i, c)] * ell[c].ln()).sum();
        }
        for i in 0..n {
            for j in 0..n {
                let g = (row_log[i] + row_log[j] - ln_q).exp();
                s1[i * n + j] += g;
                s2[i * n + j] += g * g;
            }
        }
    }
    let m = samples as f64;
    let mean: Vec<f64> = s1.iter().map(|s| s / m).collect();
    let se = s2.iter().zip(&mean).map(|(s, mu)| ((s / m - mu * mu).max(0.0) / m).sqrt()).collect();
    (mean, se)
}

/// Importance-sampling estimates with standard errors of E[ℓ_r] and
/// Var[ℓ_r] under the model density at `x`.
pub struct IsMoments {
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub var: Vec<f64>,
    pub var_se: Vec<f64>,
}

pub fn is_moments(model: &SnefyModel, x: &FeatureVector, samples: usize, rng: &mut SeededRng) -> IsMoments {
    let prep = Prepared::new(model).unwrap();
    let cond = prep.condition(x).unwrap();
    let l = model.dims().l;
    let ln_q = ln_uniform_simplex_density(l);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let ell = sample_uniform_simplex(l, rng).unwrap();
        let w = (prep.log_density(&cond, &ell).unwrap() - ln_q).exp();
        draws.push((w, ell));
    }
    let m = samples as f64;
    let mut out = IsMoments { mean: vec![], mean_se: vec![], var: vec![], var_se: vec![] };
    for r in 0..l {
        let a: Vec<f64> = draws.iter().map(|(w, e)| w * e[r]).collect();
        let b: Vec<f64> = draws.iter().map(|(w, e)| w * e[r] * e[r]).collect();
        let mu = a.iter().sum::<f64>() / m;
        let second = b.iter().sum::<f64>() / m;
        let sd = |v: &[f64], c: f64| (v.iter().map(|x| (x - c).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        // delta method for second − mean²
        let psi: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| bi - 2.0 * mu * ai).collect();
        let psi_mean = psi.iter().sum::<f64>() / m;
        out.mean.push(mu);
        out.mean_se.push(sd(&a, mu) / m.sqrt());
        out.var.push(second - mu * mu);
        out.var_se.push(sd(&psi, psi_mean) / m.sqrt());
    }
    out
}
