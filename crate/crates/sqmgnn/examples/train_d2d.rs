//! Minimal end-to-end run: generate a D2D scenario, train the quantum model
//! and the classical baseline, and print their WMMSE ratios.
//!
//!     cargo run --example train_d2d -- [K] [n_train] [n_test] [epochs] [lr] [seeds] [batch] [sqm|gnn|both] [eval_every] [lr_decay]

use sqmgnn::d2d::{max_power, ScenarioConfig};
use sqmgnn::train::{evaluate_with, seeded_dataset, train, ModelSpec, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let k = arg(0, 6.0) as usize;
    let n_train = arg(1, 200.0) as usize;
    let n_test = arg(2, 50.0) as usize;
    let epochs = arg(3, 10.0) as usize;
    let lr = arg(4, 1e-3);
    let n_seeds = arg(5, 1.0) as u64;
    let batch = arg(6, 64.0) as usize;
    let which = args.get(7).cloned().unwrap_or_else(|| "both".into());
    let eval_every = arg(8, 1.0) as usize;
    let lr_decay = arg(9, 1.0);

    let scenario = ScenarioConfig { k_pairs: k, seed: 1, ..ScenarioConfig::default() };
    let train_ds = seeded_dataset(&scenario, "train", n_train).unwrap();
    let test_ds = seeded_dataset(&scenario, "test", n_test).unwrap();
    let full = evaluate_with(
        |i, _| Ok(max_power(&test_ds.realizations[i], scenario.p_max)),
        &test_ds,
        100,
    )
    .unwrap();
    println!("full-power reference: {:.2}% of WMMSE", full.ratio);
    let cfg = TrainConfig {
        epochs,
        lr,
        lr_decay,
        batch,
        seeds: (0..n_seeds).collect(),
        eval_every,
        ..TrainConfig::default()
    };

    let specs: Vec<ModelSpec> = match which.as_str() {
        "sqm" => vec![ModelSpec::default_sqm()],
        "gnn" => vec![ModelSpec::default_gnn()],
        _ => vec![ModelSpec::default_sqm(), ModelSpec::default_gnn()],
    };
    for spec in specs {
        let t0 = std::time::Instant::now();
        let out = train(&spec, &train_ds, &test_ds, &cfg).unwrap();
        let r = &out.report;
        println!(
            "{}: params={} wmmse={:.4} bps/Hz  ratio={:.2}% (±{:.2})  [{:.1}s]",
            r.model_kind,
            r.param_count,
            r.wmmse_test_sr,
            r.mean_final_ratio,
            r.std_final_ratio,
            t0.elapsed().as_secs_f64()
        );
        for s in &r.per_seed {
            let curve: Vec<String> = s
                .epochs
                .iter()
                .filter_map(|e| e.ratio.map(|x| format!("{x:.1}")))
                .collect();
            println!("  seed {}: ratio curve {}", s.seed, curve.join(" "));
        }

        // Peek at the first test graph: what the model decided, what the
        // benchmark decided, and (for the quantum model) the Bloch triples
        // feeding the readout.
        let ch = &test_ds.realizations[0];
        let g = ch.to_graph().unwrap();
        let counter = sqmgnn::cfe::CfeCounter::new(1);
        let model = &out.models[0];
        let p = model
            .forward(&g, sqmgnn::graph::SampleMode::Random, 12345, &counter)
            .unwrap();
        let pw = sqmgnn::d2d::wmmse(ch, scenario.p_max, scenario.noise_watts(), 100).unwrap();
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
        println!("  powers:  {}", fmt(&p));
        println!("  wmmse:   {}", fmt(&pw));
        if let sqmgnn::train::AnyModel::Sqm(m) = model {
            let (_, trace) = sqmgnn::model::sqm_forward_traced(
                &g,
                m,
                sqmgnn::graph::SampleMode::Random,
                12345,
                &counter,
            )
            .unwrap();
            for (v, b) in trace.bloch.iter().enumerate() {
                println!("  node {v}: bloch ({:+.3} {:+.3} {:+.3})", b[0], b[1], b[2]);
            }
        }
    }
}
