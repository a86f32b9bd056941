//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p snefy-cli --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::oracles::{beta_like_integral, is_moments, mc_kernel_gamma_part};
use common::{random_batch, random_model};
use nalgebra::DMatrix;
use snefy_ldl::harness::weighted_combine;
use snefy_ldl::kernel::GammaTable;
use snefy_ldl::moments::{conditional_moments, f_matrix, g_matrix, h_matrix};
use snefy_ldl::synthetic::{sample_from_model, teacher_model};
use snefy_ldl::training::gradient_check;
use snefy_ldl::uncertainty::{conformal_report, coverage, dirichlet_entropy, fsc, predict_intervals, Interval};
use snefy_ldl::density::Prepared;
use snefy_ldl::{
    conformal_quantile, ensemble_predict, entropy_estimate, kernel_matrix, ldl_metrics, nll, normalization_check,
    train, ConformalCalibrator, Dims, EnsembleMode, FeatureVector, LabelDistribution, LdlDataset, SeededRng,
    SnefyModel, TrainConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ld(v: &[f64]) -> LabelDistribution {
    LabelDistribution::new(v.to_vec()).unwrap()
}

fn kernel_dims(n: usize, l: usize) -> Dims {
    Dims { d: 3, d2: 4, n, m: 2, l }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let x = FeatureVector::new(vec![0.4, -0.7, 0.2]).unwrap();
    let mut rng = SeededRng::new(2024);
    let (mut worst_mc, mut worst_quad): (f64, f64) = (0.0, 0.0);
    for case in 0..20u64 {
        let l = 2 + (case % 2) as usize;
        let n = [1, 2, 4][(case % 3) as usize];
        let model = random_model(kernel_dims(n, l), 100 + case, -0.2, 0.8);
        let km = kernel_matrix(&model, &x).map_err(|e| e.to_string())?;
        let proj = model.projection(&x).unwrap();
        let log_c = GammaTable::new(&model.w1).unwrap().log_c().clone();
        let (mc, _) = mc_kernel_gamma_part(&model.w1, 1_000_000, &mut rng);
        for i in 0..n {
            for j in 0..n {
                // the kernel entry over exp(p_i + p_j) is the pure simplex integral
                let closed = (km.log_entries()[(i, j)] - proj[i] - proj[j]).exp();
                ensure!((log_c[(i, j)].exp() / closed - 1.0).abs() < 1e-12, "case {case}: factorization mismatch");
                let rel = (mc[i * n + j] / closed - 1.0).abs();
                worst_mc = worst_mc.max(rel);
                ensure!(rel < 0.01, "case {case} entry ({i},{j}): Monte-Carlo relative error {rel:.3e}");
                if l == 2 {
                    let c1 = model.w1[(i, 0)] + model.w1[(j, 0)];
                    let c2 = model.w1[(i, 1)] + model.w1[(j, 1)];
                    let rel = (closed / beta_like_integral(c1, c2, 1e-13) - 1.0).abs();
                    worst_quad = worst_quad.max(rel);
                    ensure!(rel < 1e-8, "case {case} entry ({i},{j}): quadrature relative error {rel:.3e}");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("max MC rel {worst_mc:.2e}, max quadrature rel {worst_quad:.2e}, {:.1}s", elapsed.as_secs_f64()))
}

fn dirichlet_model(w1_row: &[f64]) -> SnefyModel {
    let mut model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 1, m: 1, l: w1_row.len() }).unwrap();
    for (c, &w) in w1_row.iter().enumerate() {
        model.w1[(0, c)] = w;
    }
    model
}

fn criterion_2() -> Outcome {
    let x = FeatureVector::new(vec![0.3]).unwrap();
    let rep = conditional_moments(&dirichlet_model(&[1.0, 0.0]), &x).unwrap();
    ensure!((rep.mean[0] - 0.75).abs() < 1e-10, "Dirichlet(3,1) mean {}", rep.mean[0]);
    ensure!((rep.variance[0] - 0.0375).abs() < 1e-10, "Dirichlet(3,1) variance {}", rep.variance[0]);
    let rep = conditional_moments(&dirichlet_model(&[1.0, 0.0, 0.0]), &x).unwrap();
    ensure!((rep.covariance[(0, 1)] + 0.02).abs() < 1e-10, "Dirichlet(3,1,1) covariance {}", rep.covariance[(0, 1)]);

    let mut rng = SeededRng::new(77);
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let l = 2 + (case % 2) as usize;
        let n = [1, 2, 4][(case % 3) as usize];
        let model = random_model(kernel_dims(n, l), 300 + case, -0.2, 1.0);
        let x = FeatureVector::new(vec![0.1, 0.5, -0.3]).unwrap();
        let rep = conditional_moments(&model, &x).unwrap();
        let est = is_moments(&model, &x, 400_000, &mut rng);
        for r in 0..l {
            let zm = (rep.mean[r] - est.mean[r]).abs() / est.mean_se[r];
            let zv = (rep.variance[r] - est.var[r]).abs() / est.var_se[r];
            worst = worst.max(zm).max(zv);
            ensure!(zm < 3.0 && zv < 3.0, "case {case} label {r}: z-scores mean {zm:.2}, variance {zv:.2}");
        }
    }
    Ok(format!("closed forms exact to 1e-10; largest IS |z| = {worst:.2}"))
}

fn criterion_3() -> Outcome {
    let (mut sum_dev, mut row_dev, mut fgh_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..1000u64 {
        let l = 2 + (case % 4) as usize;
        let n = 1 + (case % 5) as usize;
        let dims = Dims { d: 2, d2: 3, n, m: 1 + (case % 3) as usize, l };
        let model = random_model(dims, 10_000 + case, -0.49, 2.0);
        let x = FeatureVector::new(vec![0.2 * (case % 7) as f64 - 0.6, 0.3]).unwrap();
        let rep = conditional_moments(&model, &x).map_err(|e| e.to_string())?;
        sum_dev = sum_dev.max((rep.mean.sum() - 1.0).abs());
        for r in 0..l {
            row_dev = row_dev.max(rep.covariance.row(r).sum().abs());
            let mut acc: DMatrix<f64> = g_matrix(&model.w1, r);
            for s in (0..l).filter(|&s| s != r) {
                acc += h_matrix(&model.w1, r, s);
            }
            fgh_dev = fgh_dev.max((acc - f_matrix(&model.w1, r)).abs().max());
        }
    }
    ensure!(sum_dev < 1e-9, "mean sum deviation {sum_dev:e}");
    ensure!(row_dev < 1e-9, "covariance row sum {row_dev:e}");
    ensure!(fgh_dev < 1e-12, "G + ΣH − F = {fgh_dev:e}");
    Ok(format!("|Σmean−1| {sum_dev:.1e}, |cov row| {row_dev:.1e}, |G+ΣH−F| {fgh_dev:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let dims = Dims {
            d: 1 + (case % 3) as usize,
            d2: 1 + (case % 4) as usize,
            n: 1 + (case % 4) as usize,
            m: 1 + (case % 3) as usize,
            l: 2 + (case % 3) as usize,
        };
        let model = random_model(dims, 900 + case, -0.3, 1.0);
        let batch = random_batch(dims.d, dims.l, 4, 1900 + case);
        let check = gradient_check(&model, &batch, 1e-5, 1, 1e-6).map_err(|e| e.to_string())?;
        worst = worst.max(check.max_rel_error);
        ensure!(check.max_rel_error < 1e-4, "case {case}: {check:?}");
    }
    Ok(format!("max relative error {worst:.2e} over 50 configurations"))
}

fn criterion_5() -> Outcome {
    let mut rng = SeededRng::new(5);
    let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    for case in 0..20u64 {
        let n = [1, 2, 4][(case % 3) as usize];
        let model = random_model(kernel_dims(n, 3), 700 + case, -0.2, 1.0);
        let x = FeatureVector::new(vec![-0.2, 0.4, 0.9]).unwrap();
        let z = normalization_check(&model, &x, 1_000_000, &mut rng).map_err(|e| e.to_string())?;
        lo = lo.min(z);
        hi = hi.max(z);
        ensure!((0.97..=1.03).contains(&z), "case {case}: {z}");
    }
    Ok(format!("estimates in [{lo:.4}, {hi:.4}]"))
}

fn criterion_6() -> Outcome {
    let model = SnefyModel::uniform(Dims { d: 2, d2: 2, n: 3, m: 2, l: 3 }).unwrap();
    let x = FeatureVector::new(vec![1.0, 2.0]).unwrap();
    for n_iter in [1usize, 10, 1000] {
        let values: Vec<f64> =
            (0..3).map(|s| entropy_estimate(&model, &x, n_iter, &mut SeededRng::new(s)).unwrap()).collect();
        ensure!(values.iter().all(|v| *v == values[0]), "n_iter {n_iter}: estimate varies with the seed");
        ensure!((values[0] + 2f64.ln()).abs() < 1e-12, "n_iter {n_iter}: {} vs −ln 2", values[0]);
    }
    let model = dirichlet_model(&[1.0, 0.0]);
    let x = FeatureVector::new(vec![0.0]).unwrap();
    let h = entropy_estimate(&model, &x, 1_000_000, &mut SeededRng::new(17)).unwrap();
    let exact = dirichlet_entropy(&[3.0, 1.0]).unwrap();
    ensure!((h - exact).abs() < 0.01, "Dirichlet(3,1): {h} vs {exact}");
    Ok(format!("uniform exact; Dirichlet(3,1) estimate {h:.4} vs closed form {exact:.4}"))
}

fn criterion_7() -> Outcome {
    ensure!(conformal_quantile(&[0.3, 0.1, 0.4, 0.2], 0.9).unwrap() == f64::INFINITY, "N_cal=4 is not +inf");
    let nine = [0.5, 0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6];
    ensure!(conformal_quantile(&nine, 0.9).unwrap() == 0.9, "N_cal=9 is not the maximum");

    let teacher = teacher_model(Dims { d: 3, d2: 6, n: 4, m: 3, l: 3 }, 42).unwrap();
    let cfg = |seed| TrainConfig { epochs: 5, learning_rate: 1e-2, hidden: 8, readout: 4, seed, ..TrainConfig::conformal() };
    let mut passes = [0usize; 3];
    let mut lowest: f64 = 1.0;
    for seed in 0..20u64 {
        let mut rng = SeededRng::new(1000 + seed);
        let train_set = sample_from_model(&teacher, 500, &mut rng).unwrap();
        let calib = sample_from_model(&teacher, 500, &mut rng).unwrap();
        let test = sample_from_model(&teacher, 500, &mut rng).unwrap();
        let (model, _) = train(&train_set, &cfg(seed)).map_err(|e| e.to_string())?;
        let prep = Prepared::new(&model).unwrap();
        let cal = ConformalCalibrator::fit(&prep, &calib, 0.9).unwrap();
        let iv = predict_intervals(&prep, &cal, test.features()).unwrap();
        for (r, pass) in passes.iter_mut().enumerate() {
            let c = coverage(&test, &iv, r).unwrap();
            lowest = lowest.min(c);
            *pass += usize::from(c >= 0.873);
        }
    }
    ensure!(passes.iter().all(|&p| p >= 18), "seeds with coverage >= 0.873 per label: {passes:?}");
    Ok(format!("quantile edge cases exact; seeds passing per label {passes:?}, lowest coverage {lowest:.3}"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let teacher = teacher_model(Dims { d: 3, d2: 6, n: 4, m: 3, l: 3 }, 11).unwrap();
    let mut rng = SeededRng::new(12);
    let train_set = sample_from_model(&teacher, 2000, &mut rng).unwrap();
    let test = sample_from_model(&teacher, 500, &mut rng).unwrap();
    let cfg = TrainConfig { epochs: 20, batch_size: 32, learning_rate: 1e-2, hidden: 16, readout: 8, seed: 3, ..TrainConfig::default() };
    let init = SnefyModel::init_random(cfg.dims_for(&train_set), &mut SeededRng::new(cfg.seed).stream(0)).unwrap();
    let held_before = nll(&init, &test).unwrap();
    let (model, report) = train(&train_set, &cfg).map_err(|e| e.to_string())?;
    let held_after = nll(&model, &test).unwrap();
    ensure!(report.final_nll <= report.initial_nll - 0.1, "train NLL {} -> {}", report.initial_nll, report.final_nll);
    ensure!(held_after < held_before, "held-out NLL {held_before} -> {held_after}");
    let dir = tempfile::tempdir().unwrap();
    let (again, _) = train(&train_set, &cfg).unwrap();
    model.save(&dir.path().join("a")).unwrap();
    again.save(&dir.path().join("b")).unwrap();
    ensure!(
        std::fs::read(dir.path().join("a")).unwrap() == std::fs::read(dir.path().join("b")).unwrap(),
        "model files differ"
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "train NLL {:.4} -> {:.4}, held-out {held_before:.4} -> {held_after:.4}, model files identical, {:.1}s",
        report.initial_nll,
        report.final_nll,
        elapsed.as_secs_f64()
    ))
}

fn criterion_9() -> Outcome {
    let preds = [ld(&[0.8, 0.2]), ld(&[0.4, 0.6])];
    let (out, w) = weighted_combine(&preds, &[3f64.ln(), 1f64.ln()]).unwrap();
    ensure!((w[0] - 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15, "weights {w:?}");
    ensure!((out[0] - 0.7).abs() < 1e-15 && (out[1] - 0.3).abs() < 1e-15, "prediction {:?}", out.as_slice());

    let model = SnefyModel::uniform(Dims { d: 1, d2: 1, n: 2, m: 1, l: 2 }).unwrap();
    let x = FeatureVector::new(vec![0.0]).unwrap();
    let avg = ensemble_predict(&preds, &model, &x, EnsembleMode::Average).unwrap();
    let wtd = ensemble_predict(&preds, &model, &x, EnsembleMode::Weighted).unwrap();
    ensure!((avg[0] - wtd[0]).abs() < 1e-15, "equal densities: {} vs {}", avg[0], wtd[0]);

    let teacher = teacher_model(Dims { d: 2, d2: 3, n: 3, m: 2, l: 3 }, 4).unwrap();
    let mut rng = SeededRng::new(6);
    for _ in 0..200 {
        let k = 1 + rng.below(5);
        let preds: Vec<LabelDistribution> =
            (0..k).map(|_| snefy_ldl::sample_uniform_simplex(3, &mut rng).unwrap()).collect();
        let x = FeatureVector::new(vec![2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0]).unwrap();
        let out = ensemble_predict(&preds, &teacher, &x, EnsembleMode::Weighted).map_err(|e| e.to_string())?;
        ensure!(out.iter().all(|&v| v >= 0.0) && (out.iter().sum::<f64>() - 1.0).abs() < 1e-12, "left the simplex");
    }
    Ok("(0.7, 0.3) to 1e-15, equal densities match average, 200 random outputs on the simplex".into())
}

fn criterion_10() -> Outcome {
    for v in [vec![0.25, 0.75], vec![0.5, 0.125, 0.375]] {
        let r = ldl_metrics(&ld(&v), &ld(&v));
        ensure!(r.values() == [0.0, 0.0, 0.0, 0.0, 1.0, 1.0], "identity pair {v:?} gave {:?}", r.values());
    }
    let r = ldl_metrics(&ld(&[1.0, 0.0]), &ld(&[0.5, 0.5]));
    let expected = [0.5, 10f64.sqrt() / 3.0, 4.0 / 3.0, 2f64.ln(), 0.5f64.sqrt(), 0.5];
    for (name, (got, want)) in snefy_ldl::MetricReport::COLUMNS.iter().zip(r.values().iter().zip(expected)) {
        ensure!((got - want).abs() < 1e-12, "{name}: {got} vs {want}");
    }
    Ok("identity (0,0,0,0,1,1) exact; hand pair within 1e-12".into())
}

/// Coverage per group with bins (lo + k·w, lo + (k+1)·w], the first closed.
fn brute_force_fsc(xs: &[f64], hits: &[bool], bins: usize) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / bins as f64;
    let mut best: f64 = 1.0;
    for k in 0..bins {
        let (a, b) = (lo + k as f64 * w, lo + (k + 1) as f64 * w);
        let members: Vec<usize> =
            (0..xs.len()).filter(|&i| (xs[i] > a || (k == 0 && xs[i] >= a)) && (xs[i] <= b || k == bins - 1)).collect();
        if !members.is_empty() {
            best = best.min(members.iter().filter(|&&i| hits[i]).count() as f64 / members.len() as f64);
        }
    }
    best
}

fn criterion_11() -> Outcome {
    let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 6.0];
    let truth = [0.2, 0.5, 0.9, 0.4, 0.1, 0.6];
    let ivs: [Interval; 6] = [(0.0, 0.3), (0.0, 0.3), (0.5, 1.0), (0.5, 1.0), (0.0, 0.2), (0.0, 0.5)];
    let features = xs.iter().map(|&x| FeatureVector::new(vec![x]).unwrap()).collect();
    let labels = truth.iter().map(|&t| ld(&[t, 1.0 - t])).collect();
    let test = LdlDataset::with_default_names(features, labels).unwrap();
    let intervals: Vec<Vec<Interval>> = ivs.iter().map(|&iv| vec![iv, (0.0, 1.0)]).collect();
    let hits: Vec<bool> = (0..6).map(|i| ivs[i].0 <= truth[i] && truth[i] <= ivs[i].1).collect();
    for bins in 1..=8 {
        let got = fsc(&test, &intervals, bins, 0).unwrap();
        let want = brute_force_fsc(&xs, &hits, bins);
        ensure!(got == want, "bin size {bins}: {got} vs brute force {want}");
    }
    let rep = conformal_report(&test, &intervals, &[2, 4, 8]).unwrap();
    let layout: Vec<(String, usize)> = rep.rows.iter().map(|r| (r.label.clone(), r.bin_size)).collect();
    let expected: Vec<(String, usize)> =
        ["l0", "l1"].iter().flat_map(|l| [2, 4, 8].map(|b| (l.to_string(), b))).collect();
    ensure!(layout == expected, "library report layout {layout:?}");

    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), 240)?;
    let rd = dir.path().join("conf").display().to_string();
    let argv = strings(&["conformal", "--data", &data, "--epochs", "3", "--n", "6", "--m", "3", "--lr", "1e-2", "--method", "snefy", "--report-dir", &rd]);
    snefy_cli::run(&argv).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(Path::new(&rd).join("conformal.csv")).unwrap();
    let cli_layout: Vec<String> = text.lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
    let cli_expected: Vec<String> =
        ["l0", "l1", "l2"].iter().flat_map(|l| [2, 4, 8].map(|b| format!("snefy,{l},{b}"))).collect();
    ensure!(cli_layout == cli_expected, "CLI report layout {cli_layout:?}");
    Ok("fixture matches brute force for bin sizes 1..8; one row per (label, bin size in {2,4,8})".into())
}

fn strings(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn synth_file(dir: &Path, rows: usize) -> Result<String, String> {
    let out = dir.join("synth");
    snefy_cli::run(&strings(&["synth", "--rows", &rows.to_string(), "--seed", "8", "--report-dir", &out.display().to_string()]))
        .map_err(|e| e.to_string())?;
    Ok(out.join("synthetic.csv").display().to_string())
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_file(dir.path(), 200)?;
    let model_dir = dir.path().join("model").display().to_string();
    let fast = ["--epochs", "3", "--n", "6", "--m", "3", "--lr", "1e-2"];
    let with_fast = |base: &[&str]| -> Vec<String> { strings(base).into_iter().chain(strings(&fast)).collect() };
    snefy_cli::run(&with_fast(&["train", "--data", &data, "--report-dir", &model_dir])).map_err(|e| e.to_string())?;
    let model = Path::new(&model_dir).join("model.snefy").display().to_string();
    let commands = vec![
        strings(&["validate", "--data", &data]),
        strings(&["split", "--data", &data, "--conformal"]),
        strings(&["synth", "--rows", "80", "--seed", "3"]),
        with_fast(&["train", "--data", &data, "--seed", "2"]),
        strings(&["eval", "--data", &data, "--model-in", &model]),
        with_fast(&["conformal", "--data", &data]),
        with_fast(&["active", "--data", &data, "--n-initial", "60", "--n-query", "10", "--n-iter", "20"]),
        strings(&["entropy", "--data", &data, "--model-in", &model, "--n-iter", "50"]),
        with_fast(&["ensemble", "--data", &data, "--n-base", "3", "--n-sample", "40"]),
        with_fast(&["sweep", "--data", &data, "--axis", "m", "--values", "2,3"]),
    ];
    let mut files = 0;
    for (k, mut argv) in commands.into_iter().enumerate() {
        let first = dir.path().join(format!("run{k}"));
        argv.extend(strings(&["--report-dir", &first.display().to_string()]));
        let original = snefy_cli::run(&argv).map_err(|e| format!("{}: {e}", argv[0]))?;
        let replay_dir = dir.path().join(format!("replay{k}")).display().to_string();
        let manifest = original.manifest.display().to_string();
        let replayed = snefy_cli::run(&strings(&["rerun", "--manifest", &manifest, "--report-dir", &replay_dir]))
            .map_err(|e| format!("rerun of {}: {e}", argv[0]))?;
        ensure!(original.outputs.len() == replayed.outputs.len(), "{}: output count differs", argv[0]);
        for (a, b) in original.outputs.iter().zip(&replayed.outputs) {
            ensure!(std::fs::read(a).unwrap() == std::fs::read(b).unwrap(), "{}: {a} differs from {b}", argv[0]);
            files += 1;
        }
    }
    Ok(format!("10 commands replayed, {files} output files byte-identical"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("kernel oracle", criterion_1),
        ("moment oracles", criterion_2),
        ("algebraic identities", criterion_3),
        ("gradient check", criterion_4),
        ("normalization", criterion_5),
        ("entropy", criterion_6),
        ("conformal coverage", criterion_7),
        ("training convergence", criterion_8),
        ("ensemble mechanism", criterion_9),
        ("metrics", criterion_10),
        ("FSC", criterion_11),
        ("end-to-end determinism", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
