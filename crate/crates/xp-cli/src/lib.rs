//! Experiment runner: dataset generation, training, checkpoint evaluation,
//! the generalization sweep, the qubit-budget table, and plot-ready CSV
//! emission. Every command is a library function so tests drive them
//! directly; the binary is a thin argument parser around them.
//!
//! All randomness descends from the scenario seed, so rerunning any command
//! with the same configuration rewrites byte-identical artifacts.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sqmgnn::d2d::{max_power, random_power, save_dataset, wmmse, Dataset, ScenarioConfig};
use sqmgnn::model::{
    load_checkpoint, save_gnn_checkpoint, save_sqm_checkpoint, save_wmmse_checkpoint, Checkpoint,
};
use sqmgnn::train::{
    evaluate, evaluate_with, generalization_sweep, predicted_cfe, save_report, seeded_dataset,
    train, AnyModel, EvalResult, ModelSpec, TrainConfig, TrainOutcome, TrainReport,
};
use sqmgnn::{contract, data_err, mix_seed, Result, SqmError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use sqmgnn;

/// Fallback run directory when a command gets no `--out`; overridable via
/// this environment variable.
pub const RUN_DIR_ENV: &str = "XP_RUN_DIR";

pub fn default_run_dir() -> PathBuf {
    std::env::var_os(RUN_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// One file drives a whole experiment: scenario, training recipe, model
/// architecture, and split sizes. Every field has a default; command-line
/// flags override single keys, and the resolved result is echoed into the
/// run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
    pub model: ModelSpec,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::default(),
            train: TrainConfig::default(),
            model: ModelSpec::default_sqm(),
            n_train: 10_000,
            n_test: 10_000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| data_err(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&raw)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        if self.n_train == 0 || self.n_test == 0 {
            return Err(contract("n_train and n_test must be at least 1"));
        }
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| SqmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| SqmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    Ok(())
}

/// The shared evaluation stream for `eval` and `sweep`, so a single-cell
/// sweep reproduces an eval run exactly.
fn cli_eval_seed(scenario: &ScenarioConfig) -> u64 {
    mix_seed(&[scenario.seed, 0xe7a1])
}

pub struct GenerateArtifacts {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
}

/// Writes `train.json`/`.bin` and `test.json`/`.bin` plus the resolved
/// config echo into `out_dir`.
pub fn cmd_generate(cfg: &RunConfig, out_dir: &Path) -> Result<GenerateArtifacts> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    write_json(&out_dir.join("config.json"), cfg)?;
    let train_path = out_dir.join("train.json");
    let test_path = out_dir.join("test.json");
    save_dataset(&seeded_dataset(&cfg.scenario, "train", cfg.n_train)?, &train_path)?;
    save_dataset(&seeded_dataset(&cfg.scenario, "test", cfg.n_test)?, &test_path)?;
    Ok(GenerateArtifacts { train_path, test_path })
}

fn load_split(data_dir: &Path, split: &str) -> Result<Dataset> {
    let path = data_dir.join(format!("{split}.json"));
    if !path.exists() {
        return Err(data_err(format!("no {split} split at {}", path.display())));
    }
    sqmgnn::d2d::load_dataset(&path)
}

pub struct TrainArtifacts {
    pub outcome: TrainOutcome,
    pub report_path: PathBuf,
    pub checkpoint_paths: Vec<PathBuf>,
}

/// Trains `cfg.model` on the datasets in `data_dir`; writes the JSON
/// report, per-seed epoch CSVs, and one checkpoint per seed.
pub fn cmd_train(cfg: &RunConfig, data_dir: &Path, out_dir: &Path) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let train_ds = load_split(data_dir, "train")?;
    let test_ds = load_split(data_dir, "test")?;
    if train_ds.config != cfg.scenario {
        eprintln!("note: dataset scenario differs from the config; using the dataset's");
    }
    ensure_dir(out_dir)?;
    write_json(&out_dir.join("config.json"), cfg)?;
    let outcome = train(&cfg.model, &train_ds, &test_ds, &cfg.train)?;
    let report_path = out_dir.join("report.json");
    save_report(&outcome.report, &report_path)?;
    let mut checkpoint_paths = Vec::new();
    for (model, seed) in outcome.models.iter().zip(&cfg.train.seeds) {
        let path = out_dir.join(format!("checkpoint_seed{seed}.json"));
        match model {
            AnyModel::Sqm(m) => save_sqm_checkpoint(&path, m)?,
            AnyModel::Gnn(m) => save_gnn_checkpoint(&path, m)?,
        }
        checkpoint_paths.push(path);
    }
    Ok(TrainArtifacts { outcome, report_path, checkpoint_paths })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub k_pairs: usize,
    pub p_max: f64,
    pub sum_rate: f64,
    pub ratio: f64,
}

fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "model,K,p_max,sum_rate,ratio")?;
    for r in rows {
        writeln!(f, "{},{},{},{:.6},{:.4}", r.model, r.k_pairs, r.p_max, r.sum_rate, r.ratio)?;
    }
    f.flush()?;
    Ok(())
}

/// Evaluates a checkpoint on the test split in `data_dir`, alongside the
/// full-power and random-power baselines; writes `eval.csv` in `out_dir`
/// and returns the rows. A checkpoint trained at a different node count or
/// power budget is allowed (that is the generalization protocol); the
/// model's output scale follows the dataset's budget.
pub fn cmd_eval(
    checkpoint: &Path,
    data_dir: &Path,
    out_dir: &Path,
    wmmse_iters: usize,
) -> Result<Vec<EvalRow>> {
    let ds = load_split(data_dir, "test")?;
    let scenario = ds.config.clone();
    let eval_seed = cli_eval_seed(&scenario);
    let ck = load_checkpoint(checkpoint)?;
    let (name, result) = match ck {
        Checkpoint::Sqm(m) => ("sqm", eval_model(AnyModel::Sqm(m), &ds, wmmse_iters, eval_seed)?),
        Checkpoint::Gnn(m) => ("gnn", eval_model(AnyModel::Gnn(m), &ds, wmmse_iters, eval_seed)?),
        Checkpoint::WmmseOracle { iters } => {
            let sigma2 = scenario.noise_watts();
            let r = evaluate_with(
                |i, _| wmmse(&ds.realizations[i], scenario.p_max, sigma2, iters),
                &ds,
                wmmse_iters,
            )?;
            ("wmmse-oracle", r)
        }
    };

    let mut rows = vec![EvalRow {
        model: name.into(),
        k_pairs: scenario.k_pairs,
        p_max: scenario.p_max,
        sum_rate: result.mean_sr,
        ratio: result.ratio,
    }];
    let full = evaluate_with(
        |i, _| Ok(max_power(&ds.realizations[i], scenario.p_max)),
        &ds,
        wmmse_iters,
    )?;
    rows.push(EvalRow {
        model: "max-power".into(),
        k_pairs: scenario.k_pairs,
        p_max: scenario.p_max,
        sum_rate: full.mean_sr,
        ratio: full.ratio,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[scenario.seed, 0x7a2d]));
    let rand_eval = evaluate_with(
        |i, _| Ok(random_power(&ds.realizations[i], scenario.p_max, &mut rng)),
        &ds,
        wmmse_iters,
    )?;
    rows.push(EvalRow {
        model: "random-power".into(),
        k_pairs: scenario.k_pairs,
        p_max: scenario.p_max,
        sum_rate: rand_eval.mean_sr,
        ratio: rand_eval.ratio,
    });

    ensure_dir(out_dir)?;
    write_eval_csv(&out_dir.join("eval.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<14} K={:<3} p_max={:<4} sum-rate {:>9.4} bps/Hz  {:>7.2}% of WMMSE",
            r.model, r.k_pairs, r.p_max, r.sum_rate, r.ratio
        );
    }
    Ok(rows)
}

/// The model's output scale tracks the dataset's power budget, so a
/// checkpoint trained at one budget evaluates correctly at another.
fn eval_model(
    mut model: AnyModel,
    ds: &Dataset,
    wmmse_iters: usize,
    eval_seed: u64,
) -> Result<EvalResult> {
    let p_max = ds.config.p_max;
    if model.p_max() != p_max {
        eprintln!(
            "note: checkpoint budget {} W differs from dataset {} W; rescaling output",
            model.p_max(),
            p_max
        );
        model.set_p_max(p_max);
    }
    evaluate(&model, ds, wmmse_iters, eval_seed)
}

/// Table-I-shaped grid: evaluates one checkpoint over K×p̄ cells with
/// per-cell regenerated test sets; writes `sweep.csv` and returns rows.
pub fn cmd_sweep(
    checkpoint: &Path,
    base: &ScenarioConfig,
    k_list: &[usize],
    p_list: &[f64],
    count: usize,
    wmmse_iters: usize,
    out_dir: &Path,
) -> Result<Vec<EvalRow>> {
    if count == 0 {
        return Err(contract("sweep needs at least one realization per cell"));
    }
    let ck = load_checkpoint(checkpoint)?;
    let eval_seed = cli_eval_seed(base);
    let cells: Vec<(usize, f64)> = k_list
        .iter()
        .flat_map(|&k| p_list.iter().map(move |&p| (k, p)))
        .collect();

    let rows: Vec<EvalRow> = match ck {
        Checkpoint::Sqm(m) => sweep_model(AnyModel::Sqm(m), "sqm", base, &cells, count, wmmse_iters, eval_seed)?,
        Checkpoint::Gnn(m) => sweep_model(AnyModel::Gnn(m), "gnn", base, &cells, count, wmmse_iters, eval_seed)?,
        Checkpoint::WmmseOracle { iters } => {
            let mut rows = Vec::new();
            for &(k_pairs, p_max) in &cells {
                let cfg = ScenarioConfig { k_pairs, p_max, ..base.clone() };
                cfg.validate()?;
                let ds = seeded_dataset(&cfg, "test", count)?;
                let sigma2 = cfg.noise_watts();
                let r = evaluate_with(
                    |i, _| wmmse(&ds.realizations[i], p_max, sigma2, iters),
                    &ds,
                    wmmse_iters,
                )?;
                rows.push(EvalRow {
                    model: "wmmse-oracle".into(),
                    k_pairs,
                    p_max,
                    sum_rate: r.mean_sr,
                    ratio: r.ratio,
                });
            }
            rows
        }
    };

    ensure_dir(out_dir)?;
    write_eval_csv(&out_dir.join("sweep.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:<6} K={:<3} p_max={:<4} sum-rate {:>9.4} bps/Hz  {:>7.2}% of WMMSE",
            r.model, r.k_pairs, r.p_max, r.sum_rate, r.ratio
        );
    }
    Ok(rows)
}

fn sweep_model(
    model: AnyModel,
    name: &str,
    base: &ScenarioConfig,
    cells: &[(usize, f64)],
    count: usize,
    wmmse_iters: usize,
    eval_seed: u64,
) -> Result<Vec<EvalRow>> {
    let swept = generalization_sweep(&model, base, "test", count, cells, wmmse_iters, eval_seed)?;
    Ok(swept
        .into_iter()
        .map(|c| EvalRow {
            model: name.into(),
            k_pairs: c.k_pairs,
            p_max: c.p_max,
            sum_rate: c.eval.mean_sr,
            ratio: c.eval.ratio,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitBudgetRow {
    pub k_pairs: usize,
    pub qsgcn_qubits: usize,
    pub sqm_qubits: usize,
    pub qsgcn_feasible: bool,
    pub sqm_feasible: bool,
}

/// Qubits needed by a whole-graph quantum GNN (one per node plus one per
/// undirected edge of the complete K-graph) against the fixed 2k+1 of the
/// subgraph approach.
pub fn qsgcn_qubits(k_pairs: usize) -> usize {
    k_pairs + k_pairs * (k_pairs - 1) / 2
}

pub fn sqm_qubits(k: usize) -> usize {
    2 * k + 1
}

/// NISQ-era devices cannot dedicate every physical qubit to the algorithm;
/// a quarter is reserved, so a design is feasible when it fits in 3/4 of
/// the budget. This reproduces the published feasibility pattern (55
/// qubits marked infeasible on a ~70-qubit machine).
pub fn usable_qubits(budget: usize) -> usize {
    budget * 3 / 4
}

pub fn cmd_qubit_budget(k_list: &[usize], k: usize, budget: usize) -> Vec<QubitBudgetRow> {
    let cap = usable_qubits(budget);
    let rows: Vec<QubitBudgetRow> = k_list
        .iter()
        .map(|&k_pairs| QubitBudgetRow {
            k_pairs,
            qsgcn_qubits: qsgcn_qubits(k_pairs),
            sqm_qubits: sqm_qubits(k),
            qsgcn_feasible: qsgcn_qubits(k_pairs) <= cap,
            sqm_feasible: sqm_qubits(k) <= cap,
        })
        .collect();
    println!("budget {budget} qubits ({cap} usable)");
    println!("{:<5} {:>13} {:>10} {:>9} {:>6}", "K", "whole-graph", "subgraph", "whole", "sub");
    for r in &rows {
        println!(
            "{:<5} {:>13} {:>10} {:>9} {:>6}",
            r.k_pairs,
            r.qsgcn_qubits,
            r.sqm_qubits,
            if r.qsgcn_feasible { "ok" } else { "over" },
            if r.sqm_feasible { "ok" } else { "over" }
        );
    }
    rows
}

/// Merges train/test curves from several reports into one plot-ready CSV
/// (mean and deviation bands over seeds, plus the WMMSE reference line).
pub fn cmd_plot_data(report_paths: &[PathBuf], out_path: &Path) -> Result<PathBuf> {
    if report_paths.is_empty() {
        return Err(contract("need at least one report"));
    }
    let mut reports = Vec::new();
    for p in report_paths {
        let raw = std::fs::read_to_string(p)
            .map_err(|e| data_err(format!("cannot read {}: {e}", p.display())))?;
        let r: TrainReport = serde_json::from_str(&raw)
            .map_err(|e| data_err(format!("bad report {}: {e}", p.display())))?;
        reports.push(r);
    }
    let epochs = reports.iter().map(|r| r.config.epochs).max().unwrap();

    if let Some(p) = out_path.parent() {
        if !p.as_os_str().is_empty() {
            ensure_dir(p)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(out_path)?);
    write!(f, "epoch")?;
    for r in &reports {
        let m = &r.model_kind;
        write!(f, ",{m}_train_mean,{m}_train_std,{m}_test_mean,{m}_test_std")?;
    }
    writeln!(f, ",wmmse")?;

    for epoch in 0..epochs {
        write!(f, "{epoch}")?;
        for r in &reports {
            let train: Vec<f64> = r
                .per_seed
                .iter()
                .filter_map(|s| s.epochs.get(epoch).map(|e| e.train_sr))
                .collect();
            let test: Vec<f64> = r
                .per_seed
                .iter()
                .filter_map(|s| s.epochs.get(epoch).and_then(|e| e.test_sr))
                .collect();
            write_band(&mut f, &train)?;
            write_band(&mut f, &test)?;
        }
        writeln!(f, ",{:.6}", reports[0].wmmse_test_sr)?;
    }
    f.flush()?;
    Ok(out_path.to_path_buf())
}

fn write_band(f: &mut impl std::io::Write, values: &[f64]) -> std::io::Result<()> {
    if values.is_empty() {
        return write!(f, ",,");
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    write!(f, ",{:.6},{:.6}", mean, var.sqrt())
}

/// Writes the WMMSE-oracle marker checkpoint, mainly so eval and sweep can
/// be pointed at the benchmark itself.
pub fn write_wmmse_oracle(path: &Path, iters: usize) -> Result<()> {
    if let Some(p) = path.parent() {
        if !p.as_os_str().is_empty() {
            ensure_dir(p)?;
        }
    }
    save_wmmse_checkpoint(path, iters)
}

/// A forward-only instrumentation pass reporting the counter against the
/// closed-form prediction; returns (measured forward CFEs, predicted).
pub fn audit_cfe(cfg: &RunConfig, data_dir: &Path) -> Result<(u64, u64)> {
    let mut cfg = cfg.clone();
    cfg.train.forward_only = true;
    cfg.train.seeds.truncate(1);
    cfg.validate()?;
    let train_ds = load_split(data_dir, "train")?;
    let test_ds = load_split(data_dir, "test")?;
    let outcome = train(&cfg.model, &train_ds, &test_ds, &cfg.train)?;
    let measured = outcome.report.per_seed[0].cfe_forward;
    Ok((measured, predicted_cfe(&cfg.train, cfg.scenario.k_pairs)))
}
