use std::path::{Path, PathBuf};
use std::time::Instant;

use snefy_ldl::density::Prepared;
use snefy_ldl::harness::{evaluate_snefy, ActiveConfig, BaggingOutcome, MetricReport, Strategy};
use snefy_ldl::report::fmt6;
use snefy_ldl::synthetic::{heteroscedastic, sample_from_model, teacher_model};
use snefy_ldl::training::{train_maxent_baseline, OptimizerKind};
use snefy_ldl::uncertainty::{
    conformal_report, dirichlet_baseline_calibrate, entropy_estimate_prepared, predict_intervals, ConformalCalibrator,
    ConformalReport,
};
use snefy_ldl::{active_learning_round, bagging_experiment, train, Dims, LdlDataset, SeededRng, SnefyModel, TrainConfig};

use crate::args::*;
use crate::data::{ingest, write_dataset};
use crate::error::{CliError, CliResult};
use crate::manifest::{replay_argv, version_string, Manifest};

/// Result of a completed command.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report_dir: PathBuf,
    pub manifest: PathBuf,
    pub outputs: Vec<String>,
}

/// Collects output files written under the report directory.
struct Reporter {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Reporter {
    fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.record(&path);
        Ok(())
    }

    fn dataset(&mut self, name: &str, data: &LdlDataset) -> CliResult<()> {
        let path = self.path(name);
        write_dataset(&path, data)?;
        self.record(&path);
        Ok(())
    }
}

fn load(d: &DataArgs) -> CliResult<LdlDataset> {
    let (data, rep) = ingest(&d.data, d.d, d.l, d.renormalize)?;
    log::info!("{}: {} rows, d={}, L={}", d.data.display(), rep.rows, rep.feature_dim, rep.label_dim);
    Ok(data)
}

fn train_config(h: &Hyper, seed: u64, default_batch: usize) -> CliResult<TrainConfig> {
    let optimizer: OptimizerKind = h.optimizer.parse().map_err(CliError::Usage)?;
    let cfg = TrainConfig {
        epochs: h.epochs,
        batch_size: h.batch_size.unwrap_or(default_batch),
        learning_rate: h.lr,
        optimizer,
        seed,
        hidden: h.n,
        readout: h.m,
        feature_width: h.d2,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn metric_cells(r: &MetricReport) -> Vec<String> {
    r.values().iter().map(|&v| fmt6(v)).collect()
}

fn metric_header(prefix: &[&'static str]) -> Vec<&'static str> {
    prefix.iter().copied().chain(MetricReport::COLUMNS).collect()
}

fn print_metrics(tag: &str, r: &MetricReport) {
    let cells: Vec<String> =
        MetricReport::COLUMNS.iter().zip(r.values()).map(|(n, v)| format!("{n}={}", fmt6(v))).collect();
    println!("{tag}: {}", cells.join(" "));
}

/// Parts of `data` by `ratios`, or `data` plus a held-out file.
fn train_test(data: LdlDataset, test: &Option<PathBuf>, template: &DataArgs, seed: u64) -> CliResult<(LdlDataset, LdlDataset)> {
    match test {
        Some(path) => {
            let t = load(&DataArgs { data: path.clone(), ..template.clone() })?;
            Ok((data, t))
        }
        None => {
            let mut parts = data.split(&[0.9, 0.1], &mut SeededRng::new(seed))?.into_iter();
            Ok((parts.next().unwrap(), parts.next().unwrap()))
        }
    }
}

fn three_way(data: &LdlDataset, ratios: &[f64], seed: u64) -> CliResult<(LdlDataset, LdlDataset, LdlDataset)> {
    if ratios.len() != 3 {
        return Err(CliError::Usage(format!("--ratios needs three parts (train, calib, test), got {}", ratios.len())));
    }
    let mut parts = data.split(ratios, &mut SeededRng::new(seed))?.into_iter();
    let (a, b, c) = (parts.next().unwrap(), parts.next().unwrap(), parts.next().unwrap());
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(CliError::Usage("every split part must be nonempty".into()));
    }
    Ok((a, b, c))
}

fn snefy_conformal(train_set: &LdlDataset, calib: &LdlDataset, test: &LdlDataset, cfg: &TrainConfig, level: f64, bins: &[usize]) -> CliResult<ConformalReport> {
    let (model, _) = train(train_set, cfg)?;
    let prep = Prepared::new(&model)?;
    let cal = ConformalCalibrator::fit(&prep, calib, level)?;
    let iv = predict_intervals(&prep, &cal, test.features())?;
    Ok(conformal_report(test, &iv, bins)?)
}

fn conformal_rows(method: &str, rep: &ConformalReport, fsc_rows: &mut Vec<Vec<String>>, cov_rows: &mut Vec<Vec<String>>, names: &[String]) {
    for row in &rep.rows {
        fsc_rows.push(vec![method.into(), row.label.clone(), row.bin_size.to_string(), fmt6(row.fsc)]);
        println!("{method} {} bin_size={}: fsc={}", row.label, row.bin_size, fmt6(row.fsc));
    }
    for (name, c) in names.iter().zip(&rep.coverage) {
        cov_rows.push(vec![method.into(), name.clone(), fmt6(*c)]);
    }
}

fn check_bins(bins: &[usize]) -> CliResult<()> {
    if bins.is_empty() || bins.contains(&0) {
        return Err(CliError::Usage("--bin-sizes must list positive integers".into()));
    }
    Ok(())
}

fn run_validate(a: &ValidateArgs, out: &mut Reporter) -> CliResult<()> {
    let (_, rep) = ingest(&a.data.data, a.data.d, a.data.l, a.data.renormalize)?;
    println!(
        "rows={} d={} L={} max_sum_deviation={} renormalized={}",
        rep.rows,
        rep.feature_dim,
        rep.label_dim,
        fmt6(rep.max_sum_deviation),
        rep.renormalized
    );
    out.table(
        "validation.csv",
        &["rows", "feature_dim", "label_dim", "max_sum_deviation", "renormalized"],
        &[vec![
            rep.rows.to_string(),
            rep.feature_dim.to_string(),
            rep.label_dim.to_string(),
            fmt6(rep.max_sum_deviation),
            rep.renormalized.to_string(),
        ]],
    )
}

fn run_split(a: &SplitArgs, out: &mut Reporter) -> CliResult<()> {
    let data = load(&a.data)?;
    let ratios = a.ratios.clone().unwrap_or_else(|| if a.conformal { vec![0.5, 0.25, 0.25] } else { vec![0.9, 0.1] });
    let names: &[&str] = match ratios.len() {
        2 => &["train", "test"],
        3 => &["train", "calib", "test"],
        k => return Err(CliError::Usage(format!("--ratios needs two or three parts, got {k}"))),
    };
    let parts = data.split(&ratios, &mut SeededRng::new(a.common.seed))?;
    for (name, part) in names.iter().zip(&parts) {
        println!("{name}: {} rows", part.len());
        out.dataset(&format!("split_{name}.csv"), part)?;
    }
    Ok(())
}

fn run_synth(a: &SynthArgs, out: &mut Reporter) -> CliResult<()> {
    let mut rng = SeededRng::new(a.common.seed).stream(1);
    let data = match a.kind {
        SynthKind::Teacher => {
            let dims = Dims { d: a.d, d2: a.n.max(1) + 2, n: a.n, m: a.m, l: a.l };
            let teacher = teacher_model(dims, a.common.seed)?;
            sample_from_model(&teacher, a.rows, &mut rng)?
        }
        SynthKind::Heteroscedastic => heteroscedastic(a.rows, &mut rng)?.0,
    };
    println!("synthetic: {} rows, d={}, L={}", data.len(), data.feature_dim(), data.label_dim());
    out.dataset("synthetic.csv", &data)
}

fn run_train(a: &TrainArgs, out: &mut Reporter) -> CliResult<()> {
    let data = load(&a.data)?;
    let cfg = train_config(&a.hyper, a.common.seed, 16)?;
    let (model, report) = train(&data, &cfg)?;
    let path = a.model_out.clone().unwrap_or_else(|| out.path("model.snefy"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(format!("cannot create {}", parent.display()), e))?;
    }
    model.save(&path)?;
    out.record(&path);
    let mut rows = vec![vec!["initial".to_string(), fmt6(report.initial_nll)]];
    rows.extend(report.epoch_nll.iter().enumerate().map(|(e, v)| vec![(e + 1).to_string(), fmt6(*v)]));
    rows.push(vec!["final".into(), fmt6(report.final_nll)]);
    out.table("train_nll.csv", &["epoch", "nll"], &rows)?;
    println!("trained {} parameters: nll {} -> {}", model.num_params(), fmt6(report.initial_nll), fmt6(report.final_nll));
    println!("model: {}", path.display());
    Ok(())
}

fn run_eval(a: &EvalArgs, out: &mut Reporter) -> CliResult<()> {
    let data = load(&a.data)?;
    let model = SnefyModel::load(&a.model_in)?;
    let rep = evaluate_snefy(&model, &data)?;
    let nll = snefy_ldl::nll(&model, &data)?;
    print_metrics("metrics", &rep);
    println!("nll={}", fmt6(nll));
    let mut row = metric_cells(&rep);
    row.push(fmt6(nll));
    let mut header = metric_header(&[]);
    header.push("nll");
    out.table("metrics.csv", &header, &[row])
}

fn run_conformal(a: &ConformalArgs, out: &mut Reporter) -> CliResult<()> {
    check_bins(&a.bin_sizes)?;
    let data = load(&a.data)?;
    let cfg = train_config(&a.hyper, a.common.seed, 64)?;
    let (train_set, calib, test) = three_way(&data, &a.ratios, a.common.seed)?;
    let (mut fsc_rows, mut cov_rows) = (Vec::new(), Vec::new());
    let names = test.label_names().to_vec();
    if a.method != Method::Dirichlet {
        let rep = snefy_conformal(&train_set, &calib, &test, &cfg, a.level, &a.bin_sizes)?;
        conformal_rows("snefy", &rep, &mut fsc_rows, &mut cov_rows, &names);
    }
    if a.method != Method::Snefy {
        let predictor = train_maxent_baseline(&train_set, &cfg)?;
        let (baseline, cal) = dirichlet_baseline_calibrate(&predictor, &train_set, &calib, a.level)?;
        let iv = predict_intervals(&baseline, &cal, test.features())?;
        let rep = conformal_report(&test, &iv, &a.bin_sizes)?;
        println!("dirichlet concentration tau={}", fmt6(baseline.tau));
        conformal_rows("dirichlet", &rep, &mut fsc_rows, &mut cov_rows, &names);
    }
    out.table("conformal.csv", &["method", "label", "bin_size", "fsc"], &fsc_rows)?;
    out.table("coverage.csv", &["method", "label", "coverage"], &cov_rows)
}

fn run_active(a: &ActiveArgs, out: &mut Reporter) -> CliResult<()> {
    let data = load(&a.data)?;
    let cfg = train_config(&a.hyper, a.common.seed, 16)?;
    let (pool, test) = train_test(data, &a.test, &a.data, a.common.seed)?;
    let strategies: Vec<Strategy> = if a.strategy == "all" { Strategy::ALL.to_vec() } else { vec![a.strategy.parse()?] };
    let (mut rows, mut picks) = (Vec::new(), Vec::new());
    for strategy in strategies {
        let active = ActiveConfig { initial_size: a.n_initial, n_query: a.n_query, n_iter: a.n_iter, strategy };
        let res = active_learning_round(&pool, &test, &active, &cfg)?;
        print_metrics(&format!("{strategy} initial"), &res.initial);
        print_metrics(&format!("{strategy} final"), &res.report);
        for (stage, r) in [("initial", &res.initial), ("final", &res.report)] {
            let mut row = vec![strategy.to_string(), stage.to_string()];
            row.extend(metric_cells(r));
            rows.push(row);
        }
        picks.extend(res.queried.iter().enumerate().map(|(k, &i)| vec![strategy.to_string(), k.to_string(), i.to_string()]));
    }
    out.table("active.csv", &metric_header(&["strategy", "stage"]), &rows)?;
    out.table("active_queries.csv", &["strategy", "rank", "pool_row"], &picks)
}

fn run_entropy(a: &EntropyArgs, out: &mut Reporter) -> CliResult<()> {
    use rayon::prelude::*;
    let data = load(&a.data)?;
    let model = SnefyModel::load(&a.model_in)?;
    let prep = Prepared::new(&model)?;
    let master = SeededRng::new(a.common.seed);
    let values: Vec<f64> = data
        .features()
        .par_iter()
        .enumerate()
        .map(|(i, x)| entropy_estimate_prepared(&prep, x, a.n_iter, &mut master.stream(i as u64)))
        .collect::<snefy_ldl::Result<_>>()?;
    let rows: Vec<Vec<String>> = values.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt6(*v)]).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    println!("mean entropy over {} rows: {}", values.len(), fmt6(mean));
    out.table("entropy.csv", &["row", "entropy"], &rows)
}

fn run_ensemble(a: &EnsembleArgs, out: &mut Reporter) -> CliResult<()> {
    let data = load(&a.data)?;
    let cfg = train_config(&a.hyper, a.common.seed, 16)?;
    let (train_set, test) = train_test(data, &a.test, &a.data, a.common.seed)?;
    let BaggingOutcome { average, weighted, .. } = bagging_experiment(&train_set, &test, a.n_base, a.n_sample, &cfg)?;
    let mut rows = Vec::new();
    for (mode, r, keep) in [("average", &average, a.mode != ModeArg::Weighted), ("weighted", &weighted, a.mode != ModeArg::Average)] {
        if keep {
            print_metrics(mode, r);
            let mut row = vec![mode.to_string()];
            row.extend(metric_cells(r));
            rows.push(row);
        }
    }
    out.table("ensemble.csv", &metric_header(&["mode"]), &rows)
}

fn run_sweep(a: &SweepArgs, out: &mut Reporter) -> CliResult<()> {
    check_bins(&a.bin_sizes)?;
    let data = load(&a.data)?;
    let base = train_config(&a.hyper, a.common.seed, 64)?;
    let (train_set, calib, test) = three_way(&data, &a.ratios, a.common.seed)?;
    let axis = match a.axis {
        Axis::N => "n",
        Axis::M => "m",
        Axis::BatchSize => "batch_size",
        Axis::Epochs => "epochs",
    };
    let mut rows = Vec::new();
    for &v in &a.values {
        let mut cfg = base.clone();
        match a.axis {
            Axis::N => cfg.hidden = v,
            Axis::M => cfg.readout = v,
            Axis::BatchSize => cfg.batch_size = v,
            Axis::Epochs => cfg.epochs = v,
        }
        cfg.validate()?;
        let rep = snefy_conformal(&train_set, &calib, &test, &cfg, a.level, &a.bin_sizes)?;
        for row in &rep.rows {
            println!("{axis}={v} {} bin_size={}: fsc={}", row.label, row.bin_size, fmt6(row.fsc));
            rows.push(vec![axis.to_string(), v.to_string(), row.label.clone(), row.bin_size.to_string(), fmt6(row.fsc)]);
        }
    }
    out.table("sweep.csv", &["axis", "value", "label", "bin_size", "fsc"], &rows)
}

fn common_of(cmd: &Command) -> Option<&Common> {
    Some(match cmd {
        Command::Validate(a) => &a.common,
        Command::Split(a) => &a.common,
        Command::Synth(a) => &a.common,
        Command::Train(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Conformal(a) => &a.common,
        Command::Active(a) => &a.common,
        Command::Entropy(a) => &a.common,
        Command::Ensemble(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Rerun(_) => return None,
    })
}

/// Executes a parsed command line. `argv` excludes the program name and is
/// recorded verbatim in the manifest.
pub fn execute(cli: &Cli, argv: &[String]) -> CliResult<RunSummary> {
    if let Command::Rerun(r) = &cli.command {
        let manifest = Manifest::load(&r.manifest)?;
        let replay = replay_argv(&manifest, r.report_dir.as_deref())?;
        return crate::run(&replay);
    }
    let common = common_of(&cli.command).expect("non-rerun command").clone();
    let start = Instant::now();
    let mut out = Reporter::new(&common.report_dir)?;
    match &cli.command {
        Command::Validate(a) => run_validate(a, &mut out),
        Command::Split(a) => run_split(a, &mut out),
        Command::Synth(a) => run_synth(a, &mut out),
        Command::Train(a) => run_train(a, &mut out),
        Command::Eval(a) => run_eval(a, &mut out),
        Command::Conformal(a) => run_conformal(a, &mut out),
        Command::Active(a) => run_active(a, &mut out),
        Command::Entropy(a) => run_entropy(a, &mut out),
        Command::Ensemble(a) => run_ensemble(a, &mut out),
        Command::Sweep(a) => run_sweep(a, &mut out),
        Command::Rerun(_) => unreachable!("handled above"),
    }?;
    let manifest = Manifest {
        tool: "snefy".into(),
        version: version_string(),
        command: cli.command.name().into(),
        argv: argv.to_vec(),
        seed: Some(common.seed),
        config: serde_json::to_value(&cli.command)?,
        outputs: out.outputs.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let path = manifest.save(&common.report_dir)?;
    Ok(RunSummary { report_dir: common.report_dir, manifest: path, outputs: out.outputs })
}
