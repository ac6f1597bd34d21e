//! Mini-batch training for both models against the negative sum-rate, with
//! per-seed replication, circuit-execution accounting, and evaluation
//! against the iterative WMMSE benchmark. Every random choice derives from
//! the master seed through `mix_seed`, and batch gradients reduce in sample
//! order, so a rerun reproduces the report byte for byte regardless of
//! worker count.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfe::CfeCounter;
use crate::d2d::{generate_dataset, loss_grad, sum_rate, wmmse, Dataset, ScenarioConfig};
use crate::graph::{fit_normalization, NormStats, SampleMode, WirelessGraph};
use crate::model::{
    gnn_backward, gnn_forward, gnn_forward_traced, sqm_backward, sqm_forward, sqm_forward_traced,
    ClassicalGnnModel, SqmGnnModel,
};
use crate::nn::{Activation, Adam, DenseNet};
use crate::{contract, mix_seed, Result};

const TAG_INIT: u64 = 0x01;
const TAG_SHUFFLE: u64 = 0x02;
const TAG_SAMPLE: u64 = 0x03;
const TAG_EVAL: u64 = 0x04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Per-epoch multiplicative learning-rate factor; 1 keeps lr constant.
    pub lr_decay: f64,
    pub seeds: Vec<u64>,
    pub n_shot: u64,
    /// Evaluate on the test split every this many epochs; 0 = final only.
    pub eval_every: usize,
    /// Skip every backward pass; used to audit forward execution counts.
    pub forward_only: bool,
    pub sample_mode: SampleMode,
    pub wmmse_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch: 64,
            lr: 1e-3,
            lr_decay: 1.0,
            seeds: vec![0, 1, 2, 3, 4],
            n_shot: 1,
            eval_every: 1,
            forward_only: false,
            sample_mode: SampleMode::Random,
            wmmse_iters: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(contract("epochs and batch size must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(contract("need at least one seed"));
        }
        if self.n_shot == 0 {
            return Err(contract("n_shot must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(contract("learning rate must be finite and non-negative"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(contract("lr_decay must be in (0, 1]"));
        }
        if self.wmmse_iters == 0 {
            return Err(contract("wmmse_iters must be at least 1"));
        }
        Ok(())
    }
}

/// The training-cost formula in circuit executions: T·B·N·N_shot. Reported
/// alongside the instrumented counter, which also sees layer count and
/// gradient sweeps.
pub fn predicted_cfe(cfg: &TrainConfig, n: usize) -> u64 {
    cfg.epochs as u64 * cfg.batch as u64 * n as u64 * cfg.n_shot
}

/// Architecture to instantiate per seed. Hidden activations are ReLU and
/// every readout ends in a sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Sqm { n_layers: usize, k: usize, d_msg: usize, readout_hidden: Vec<usize> },
    Gnn { embed: usize, rounds: usize },
}

impl ModelSpec {
    /// The reference quantum model: 2 layers, 6 slots, depth-2 messages,
    /// readout 3→64→32→1.
    pub fn default_sqm() -> Self {
        ModelSpec::Sqm { n_layers: 2, k: 6, d_msg: 2, readout_hidden: vec![64, 32] }
    }

    /// The reference baseline: embed 64, two rounds.
    pub fn default_gnn() -> Self {
        ModelSpec::Gnn { embed: 64, rounds: 2 }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Sqm { .. } => "sqm",
            ModelSpec::Gnn { .. } => "gnn",
        }
    }

    pub fn build(
        &self,
        norm: NormStats,
        p_max: f64,
        rng: &mut impl rand::Rng,
    ) -> Result<AnyModel> {
        match self {
            ModelSpec::Sqm { n_layers, k, d_msg, readout_hidden } => {
                let mut dims = vec![3];
                dims.extend_from_slice(readout_hidden);
                dims.push(1);
                let mut acts = vec![Activation::Relu; readout_hidden.len()];
                acts.push(Activation::Sigmoid);
                Ok(AnyModel::Sqm(SqmGnnModel::new(
                    *n_layers, *k, *d_msg, dims, acts, norm, p_max, rng,
                )?))
            }
            ModelSpec::Gnn { embed, rounds } => {
                let e = *embed;
                if e < 2 {
                    return Err(contract("embedding dimension must be at least 2"));
                }
                let relu2 = vec![Activation::Relu, Activation::Relu];
                let mut message = DenseNet::new(vec![e + 1, 2 * e, e], relu2.clone())?;
                let mut update = DenseNet::new(vec![2 * e, 2 * e, e], relu2)?;
                let mut readout = DenseNet::new(
                    vec![e, (e / 2).max(1), 1],
                    vec![Activation::Relu, Activation::Sigmoid],
                )?;
                message.init_uniform(rng);
                update.init_uniform(rng);
                readout.init_uniform(rng);
                Ok(AnyModel::Gnn(ClassicalGnnModel::new(
                    e, message, update, readout, *rounds, norm, p_max,
                )?))
            }
        }
    }
}

/// Either trained model behind one dispatching surface.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Sqm(SqmGnnModel),
    Gnn(ClassicalGnnModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Sqm(_) => "sqm",
            AnyModel::Gnn(_) => "gnn",
        }
    }

    pub fn count_params(&self) -> usize {
        match self {
            AnyModel::Sqm(m) => m.count_params(),
            AnyModel::Gnn(m) => m.count_params(),
        }
    }

    pub fn quantum_param_count(&self) -> Option<usize> {
        match self {
            AnyModel::Sqm(m) => Some(m.quantum_param_count()),
            AnyModel::Gnn(_) => None,
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        match self {
            AnyModel::Sqm(m) => m.params_flat(),
            AnyModel::Gnn(m) => m.params_flat(),
        }
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        match self {
            AnyModel::Sqm(m) => m.set_params_flat(p),
            AnyModel::Gnn(m) => m.set_params_flat(p),
        }
    }

    pub fn p_max(&self) -> f64 {
        match self {
            AnyModel::Sqm(m) => m.p_max,
            AnyModel::Gnn(m) => m.p_max,
        }
    }

    pub fn set_p_max(&mut self, p_max: f64) {
        match self {
            AnyModel::Sqm(m) => m.p_max = p_max,
            AnyModel::Gnn(m) => m.p_max = p_max,
        }
    }

    pub fn forward(
        &self,
        graph: &WirelessGraph,
        mode: SampleMode,
        seed: u64,
        counter: &CfeCounter,
    ) -> Result<Vec<f64>> {
        match self {
            AnyModel::Sqm(m) => sqm_forward(graph, m, mode, seed, counter),
            AnyModel::Gnn(m) => gnn_forward(graph, m),
        }
    }
}

/// One sample's contribution: sum-rate achieved and the flat loss gradient.
fn train_sample(
    model: &AnyModel,
    graph: &WirelessGraph,
    ch: &crate::d2d::ChannelRealization,
    sigma2: f64,
    mode: SampleMode,
    seed: u64,
    forward_only: bool,
    counter: &CfeCounter,
) -> Result<(f64, Vec<f64>)> {
    match model {
        AnyModel::Sqm(m) => {
            let (powers, trace) = sqm_forward_traced(graph, m, mode, seed, counter)?;
            let (loss, dl_dp) = loss_grad(&powers, ch, sigma2)?;
            if forward_only {
                return Ok((-loss, Vec::new()));
            }
            let grads = sqm_backward(graph, m, &trace, &dl_dp, counter)?;
            Ok((-loss, grads.flat()))
        }
        AnyModel::Gnn(m) => {
            let (powers, trace) = gnn_forward_traced(graph, m)?;
            let (loss, dl_dp) = loss_grad(&powers, ch, sigma2)?;
            if forward_only {
                return Ok((-loss, Vec::new()));
            }
            let grads = gnn_backward(graph, m, &trace, &dl_dp)?;
            Ok((-loss, grads.flat()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_sr: f64,
    pub test_sr: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub epochs: Vec<EpochRow>,
    pub final_train_sr: f64,
    pub final_test_sr: f64,
    pub final_ratio: f64,
    pub cfe_forward: u64,
    pub cfe_gradient: u64,
    pub cfe_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_kind: String,
    pub spec: ModelSpec,
    pub config: TrainConfig,
    pub scenario: ScenarioConfig,
    pub param_count: usize,
    pub quantum_param_count: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub wmmse_test_sr: f64,
    pub predicted_cfe: u64,
    pub per_seed: Vec<SeedResult>,
    pub mean_final_test_sr: f64,
    pub std_final_test_sr: f64,
    pub mean_final_ratio: f64,
    pub std_final_ratio: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub report: TrainReport,
    /// Final model per seed, in seed order.
    pub models: Vec<AnyModel>,
}

/// Trains `spec` on the train split, replicated over `cfg.seeds`.
/// Normalization statistics come from the train split alone; the WMMSE
/// benchmark is solved once on the shared test split.
pub fn train(
    spec: &ModelSpec,
    train_ds: &Dataset,
    test_ds: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_ds.realizations.is_empty() || test_ds.realizations.is_empty() {
        return Err(contract("both splits need at least one realization"));
    }
    if train_ds.config != test_ds.config {
        return Err(contract("train and test splits disagree on the scenario"));
    }
    let scenario = &train_ds.config;
    let sigma2 = scenario.noise_watts();
    let p_max = scenario.p_max;

    let train_graphs: Vec<WirelessGraph> =
        train_ds.realizations.iter().map(|r| r.to_graph()).collect::<Result<_>>()?;
    let test_graphs: Vec<WirelessGraph> =
        test_ds.realizations.iter().map(|r| r.to_graph()).collect::<Result<_>>()?;
    let norm = fit_normalization(&train_graphs)?;

    let wmmse_test_sr = mean_wmmse_sr(test_ds, cfg.wmmse_iters)?;
    let n_nodes = scenario.k_pairs;

    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    let mut models = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, TAG_INIT]));
        let mut model = spec.build(norm, p_max, &mut rng)?;
        let mut params = model.params_flat();
        let mut adam = Adam::new(params.len(), cfg.lr);
        let counter = CfeCounter::new(cfg.n_shot);
        let eval_seed = mix_seed(&[seed, TAG_EVAL]);

        let mut rows = Vec::with_capacity(cfg.epochs);
        let mut final_train_sr = 0.0;
        let mut final_test_sr = 0.0;
        let mut final_ratio = 0.0;
        for epoch in 0..cfg.epochs {
            adam.lr = cfg.lr * cfg.lr_decay.powi(epoch as i32);
            let mut order: Vec<usize> = (0..train_ds.realizations.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(&[
                seed,
                TAG_SHUFFLE,
                epoch as u64,
            ])));

            let mut sr_sum = 0.0;
            for batch in order.chunks(cfg.batch) {
                let results: Vec<(f64, Vec<f64>)> = batch
                    .par_iter()
                    .map(|&i| {
                        train_sample(
                            &model,
                            &train_graphs[i],
                            &train_ds.realizations[i],
                            sigma2,
                            cfg.sample_mode,
                            mix_seed(&[seed, TAG_SAMPLE, epoch as u64, i as u64]),
                            cfg.forward_only,
                            &counter,
                        )
                    })
                    .collect::<Result<_>>()?;
                // Fixed reduction order over the batch keeps the sums
                // bit-stable whatever rayon did.
                let mut grad_sum = vec![0.0; params.len()];
                for (sr, g) in &results {
                    sr_sum += sr;
                    for (a, x) in grad_sum.iter_mut().zip(g) {
                        *a += x;
                    }
                }
                if !cfg.forward_only && cfg.lr > 0.0 {
                    adam.step(&mut params, &grad_sum)?;
                    model.set_params_flat(&params)?;
                }
            }
            let train_sr = sr_sum / train_ds.realizations.len() as f64;
            final_train_sr = train_sr;

            let last = epoch + 1 == cfg.epochs;
            let due = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0;
            let (test_sr, ratio) = if last || due {
                let sr = mean_model_sr(&model, &test_graphs, test_ds, cfg.sample_mode, eval_seed)?;
                let ratio = 100.0 * sr / wmmse_test_sr;
                if last {
                    final_test_sr = sr;
                    final_ratio = ratio;
                }
                (Some(sr), Some(ratio))
            } else {
                (None, None)
            };
            rows.push(EpochRow { epoch, train_sr, test_sr, ratio });
        }

        per_seed.push(SeedResult {
            seed,
            epochs: rows,
            final_train_sr,
            final_test_sr,
            final_ratio,
            cfe_forward: counter.forward_count(),
            cfe_gradient: counter.gradient_count(),
            cfe_total: counter.total(),
        });
        models.push(model);
    }

    let (mean_sr, std_sr) = mean_std(per_seed.iter().map(|s| s.final_test_sr));
    let (mean_ratio, std_ratio) = mean_std(per_seed.iter().map(|s| s.final_ratio));
    let report = TrainReport {
        model_kind: spec.kind().into(),
        spec: spec.clone(),
        config: cfg.clone(),
        scenario: scenario.clone(),
        param_count: models[0].count_params(),
        quantum_param_count: models[0].quantum_param_count(),
        n_train: train_ds.realizations.len(),
        n_test: test_ds.realizations.len(),
        wmmse_test_sr,
        predicted_cfe: predicted_cfe(cfg, n_nodes),
        per_seed,
        mean_final_test_sr: mean_sr,
        std_final_test_sr: std_sr,
        mean_final_ratio: mean_ratio,
        std_final_ratio: std_ratio,
    };
    Ok(TrainOutcome { report, models })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn mean_wmmse_sr(ds: &Dataset, iters: usize) -> Result<f64> {
    let sigma2 = ds.config.noise_watts();
    let mut sum = 0.0;
    for ch in &ds.realizations {
        let p = wmmse(ch, ds.config.p_max, sigma2, iters)?;
        let sr = sum_rate(&p, ch, sigma2)?;
        if !(sr.is_finite() && sr > 0.0) {
            return Err(contract(format!("WMMSE produced a degenerate sum-rate {sr}")));
        }
        sum += sr;
    }
    Ok(sum / ds.realizations.len() as f64)
}

fn mean_model_sr(
    model: &AnyModel,
    graphs: &[WirelessGraph],
    ds: &Dataset,
    mode: SampleMode,
    eval_seed: u64,
) -> Result<f64> {
    let sigma2 = ds.config.noise_watts();
    // Evaluation executions do not count against the training budget.
    let scratch = CfeCounter::new(1);
    let srs: Vec<f64> = graphs
        .par_iter()
        .zip(&ds.realizations)
        .enumerate()
        .map(|(i, (g, ch))| {
            let p = model.forward(g, mode, mix_seed(&[eval_seed, i as u64]), &scratch)?;
            sum_rate(&p, ch, sigma2)
        })
        .collect::<Result<_>>()?;
    Ok(srs.iter().sum::<f64>() / srs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean_sr: f64,
    pub wmmse_sr: f64,
    pub ratio: f64,
}

/// Mean sum-rate of the model on a dataset and its percentage of the
/// WMMSE benchmark solved on the same realizations.
pub fn evaluate(
    model: &AnyModel,
    ds: &Dataset,
    wmmse_iters: usize,
    eval_seed: u64,
) -> Result<EvalResult> {
    evaluate_with(
        |i, g| {
            let scratch = CfeCounter::new(1);
            model.forward(g, SampleMode::Random, mix_seed(&[eval_seed, i as u64]), &scratch)
        },
        ds,
        wmmse_iters,
    )
}

/// Evaluation core over an arbitrary power policy; lets the WMMSE oracle
/// checkpoint share the exact ratio arithmetic.
pub fn evaluate_with<F>(mut policy: F, ds: &Dataset, wmmse_iters: usize) -> Result<EvalResult>
where
    F: FnMut(usize, &WirelessGraph) -> Result<Vec<f64>>,
{
    if ds.realizations.is_empty() {
        return Err(contract("cannot evaluate on an empty dataset"));
    }
    let sigma2 = ds.config.noise_watts();
    let wmmse_sr = mean_wmmse_sr(ds, wmmse_iters)?;
    let mut sum = 0.0;
    for (i, ch) in ds.realizations.iter().enumerate() {
        let g = ch.to_graph()?;
        let p = policy(i, &g)?;
        sum += sum_rate(&p, ch, sigma2)?;
    }
    let mean_sr = sum / ds.realizations.len() as f64;
    Ok(EvalResult { mean_sr, wmmse_sr, ratio: 100.0 * mean_sr / wmmse_sr })
}

/// The canonical generator stream for a (scenario, split) pair, so that any
/// caller regenerating the same split gets the same bytes.
pub fn seeded_dataset(cfg: &ScenarioConfig, split: &str, count: usize) -> Result<Dataset> {
    let mut tag = 0xcbf29ce484222325u64;
    for b in split.bytes() {
        tag = (tag ^ b as u64).wrapping_mul(0x100000001b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, tag]));
    generate_dataset(cfg, split, count, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k_pairs: usize,
    pub p_max: f64,
    pub eval: EvalResult,
}

/// Evaluates one trained model across (K, p̄) cells without retraining:
/// each cell regenerates its test split from the base scenario with only
/// the pair count and power budget changed, and the model's output scale
/// follows the cell's budget.
pub fn generalization_sweep(
    model: &AnyModel,
    base: &ScenarioConfig,
    split: &str,
    count: usize,
    cells: &[(usize, f64)],
    wmmse_iters: usize,
    eval_seed: u64,
) -> Result<Vec<SweepCell>> {
    cells
        .iter()
        .map(|&(k_pairs, p_max)| {
            let cfg = ScenarioConfig { k_pairs, p_max, ..base.clone() };
            cfg.validate()?;
            let ds = seeded_dataset(&cfg, split, count)?;
            let mut m = model.clone();
            m.set_p_max(p_max);
            Ok(SweepCell { k_pairs, p_max, eval: evaluate(&m, &ds, wmmse_iters, eval_seed)? })
        })
        .collect()
}

/// Writes the JSON report plus one `<stem>_seed<N>.csv` per seed with the
/// epoch curves (empty cells on epochs without evaluation).
pub fn save_report(report: &TrainReport, json_path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(json_path)?;
    f.write_all(serde_json::to_string_pretty(report)?.as_bytes())?;
    f.write_all(b"\n")?;
    let stem = json_path
        .file_stem()
        .ok_or_else(|| contract("report path has no file name"))?
        .to_string_lossy()
        .into_owned();
    for seed in &report.per_seed {
        let csv = json_path.with_file_name(format!("{stem}_seed{}.csv", seed.seed));
        let mut f = std::io::BufWriter::new(std::fs::File::create(csv)?);
        writeln!(f, "epoch,train_sr,test_sr,ratio")?;
        for row in &seed.epochs {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            writeln!(
                f,
                "{},{:.6},{},{}",
                row.epoch,
                row.train_sr,
                fmt(row.test_sr),
                fmt(row.ratio)
            )?;
        }
        f.flush()?;
    }
    Ok(())
}
