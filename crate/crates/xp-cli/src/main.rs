use std::path::PathBuf;

use clap::{Parser, Subcommand};

use sqmgnn::train::ModelSpec;
use sqmgnn::Result;
use xp_cli::*;

#[derive(Parser)]
#[command(name = "xp", about = "Experiment runner for quantum vs classical GNN power control")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate seeded train/test channel datasets
    Generate {
        /// JSON run config; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of transceiver pairs
        #[arg(long)]
        k: Option<usize>,
        /// Override both split sizes at once
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model on a generated dataset directory
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding train.json/test.json from `generate`
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// "sqm" or "gnn" (default architecture for either)
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Per-epoch multiplicative learning-rate factor
        #[arg(long)]
        lr_decay: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        eval_every: Option<usize>,
        /// Skip optimizer updates; audits the execution counter
        #[arg(long)]
        forward_only: bool,
    },
    /// Evaluate a checkpoint plus max/random-power baselines on a test split
    Eval {
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        wmmse_iters: usize,
    },
    /// Evaluate a checkpoint over a grid of pair counts and power budgets
    Sweep {
        checkpoint: PathBuf,
        /// Base scenario (area, noise, seed) for every cell
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 40, 80])]
        k_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
        p_list: Vec<f64>,
        /// Test realizations per cell
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        wmmse_iters: usize,
    },
    /// Compare whole-graph vs subgraph qubit needs against a device budget
    QubitBudget {
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 10, 20])]
        k_list: Vec<usize>,
        /// Sampled neighbors per subgraph
        #[arg(long, default_value_t = 6)]
        neighbors: usize,
        #[arg(long, default_value_t = 70)]
        budget: usize,
    },
    /// Merge training reports into one plot-ready CSV of epoch curves
    PlotData {
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the WMMSE-oracle marker checkpoint for eval/sweep
    WmmseOracle {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        iters: usize,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn out_or(out: Option<PathBuf>, leaf: &str) -> PathBuf {
    out.unwrap_or_else(|| default_run_dir().join(leaf))
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Generate { config, out, k, count, n_train, n_test, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(k) = k {
                cfg.scenario.k_pairs = k;
            }
            if let Some(c) = count {
                cfg.n_train = c;
                cfg.n_test = c;
            }
            if let Some(n) = n_train {
                cfg.n_train = n;
            }
            if let Some(n) = n_test {
                cfg.n_test = n;
            }
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            let out = out_or(out, "data");
            let files = cmd_generate(&cfg, &out)?;
            println!(
                "wrote {} ({} realizations) and {} ({})",
                files.train_path.display(),
                cfg.n_train,
                files.test_path.display(),
                cfg.n_test
            );
        }
        Cmd::Train {
            config,
            data,
            out,
            model,
            epochs,
            batch,
            lr,
            lr_decay,
            seeds,
            eval_every,
            forward_only,
        } => {
            let mut cfg = load_config(&config)?;
            match model.as_deref() {
                Some("sqm") => cfg.model = ModelSpec::default_sqm(),
                Some("gnn") => cfg.model = ModelSpec::default_gnn(),
                Some(other) => {
                    return Err(sqmgnn::contract(format!(
                        "unknown model '{other}' (expected sqm or gnn)"
                    )))
                }
                None => {}
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(b) = batch {
                cfg.train.batch = b;
            }
            if let Some(lr) = lr {
                cfg.train.lr = lr;
            }
            if let Some(d) = lr_decay {
                cfg.train.lr_decay = d;
            }
            if let Some(s) = seeds {
                cfg.train.seeds = s;
            }
            if let Some(ev) = eval_every {
                cfg.train.eval_every = ev;
            }
            cfg.train.forward_only |= forward_only;
            let out = out_or(out, "train");
            let arts = cmd_train(&cfg, &data, &out)?;
            let r = &arts.outcome.report;
            println!(
                "{}: {} params, final test sum-rate {:.4} ± {:.4} bps/Hz ({:.2}% ± {:.2}% of WMMSE)",
                r.model_kind,
                r.param_count,
                r.mean_final_test_sr,
                r.std_final_test_sr,
                r.mean_final_ratio,
                r.std_final_ratio
            );
            println!("report: {}", arts.report_path.display());
            for p in &arts.checkpoint_paths {
                println!("checkpoint: {}", p.display());
            }
        }
        Cmd::Eval { checkpoint, data, out, wmmse_iters } => {
            cmd_eval(&checkpoint, &data, &out_or(out, "eval"), wmmse_iters)?;
        }
        Cmd::Sweep { checkpoint, config, k_list, p_list, count, out, wmmse_iters } => {
            let base = load_config(&config)?.scenario;
            cmd_sweep(&checkpoint, &base, &k_list, &p_list, count, wmmse_iters, &out_or(out, "sweep"))?;
        }
        Cmd::QubitBudget { k_list, neighbors, budget } => {
            cmd_qubit_budget(&k_list, neighbors, budget);
        }
        Cmd::PlotData { reports, out } => {
            let out = out.unwrap_or_else(|| default_run_dir().join("curves.csv"));
            let path = cmd_plot_data(&reports, &out)?;
            println!("wrote {}", path.display());
        }
        Cmd::WmmseOracle { out, iters } => {
            let out = out.unwrap_or_else(|| default_run_dir().join("wmmse_oracle.json"));
            write_wmmse_oracle(&out, iters)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        eprintln!("error-category: {}", e.category());
        std::process::exit(1);
    }
}
