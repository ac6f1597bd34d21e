//! The two end-to-end models: stacked quantum graph convolutions with a
//! dense readout, and a classical message-passing baseline that sees full
//! neighborhoods. Both map a channel-gain graph to per-link transmit powers
//! in [0, p_max] and expose exact reverse-mode gradients for every
//! trainable parameter.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use qsim::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfe::CfeCounter;
use crate::graph::{sample_star, EdgeAngles, NormStats, SampleMode, StarSubgraph, WirelessGraph};
use crate::nn::{Activation, DenseNet, Tape};
use crate::qgcl::{
    backward_bloch, backward_z, eval_bloch, eval_z, reencode, reencode_deriv, QgclParams,
};
use crate::{contract, data_err, mix_seed, Result};

/// Stacked quantum layers plus a Bloch-vector readout head. The readout's
/// final sigmoid keeps outputs in (0, 1); powers are that times `p_max`.
#[derive(Debug, Clone)]
pub struct SqmGnnModel {
    pub layers: Vec<QgclParams>,
    pub readout: DenseNet,
    pub k: usize,
    pub norm: NormStats,
    pub p_max: f64,
}

impl SqmGnnModel {
    pub fn new(
        n_layers: usize,
        k: usize,
        d_msg: usize,
        readout_dims: Vec<usize>,
        readout_acts: Vec<Activation>,
        norm: NormStats,
        p_max: f64,
        rng: &mut impl rand::Rng,
    ) -> Result<Self> {
        if n_layers == 0 || k == 0 {
            return Err(contract("model needs at least one layer and one slot"));
        }
        if readout_dims.first() != Some(&3) || readout_dims.last() != Some(&1) {
            return Err(contract("readout must map a Bloch triple to one unit"));
        }
        if readout_acts.last() != Some(&Activation::Sigmoid) {
            return Err(contract("readout head must be a sigmoid"));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(contract("p_max must be positive and finite"));
        }
        let mut readout = DenseNet::new(readout_dims, readout_acts)?;
        readout.init_uniform(rng);
        let layers = (0..n_layers).map(|_| QgclParams::init(d_msg, rng)).collect();
        Ok(SqmGnnModel { layers, readout, k, norm, p_max })
    }

    /// The reference configuration: two layers, six slots (13 qubits),
    /// two message reps, readout 3→64→32→1.
    pub fn default_model(norm: NormStats, p_max: f64, rng: &mut impl rand::Rng) -> Self {
        SqmGnnModel::new(
            2,
            6,
            2,
            vec![3, 64, 32, 1],
            vec![Activation::Relu, Activation::Relu, Activation::Sigmoid],
            norm,
            p_max,
            rng,
        )
        .unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn quantum_param_count(&self) -> usize {
        self.layers.iter().map(QgclParams::n_params).sum()
    }

    pub fn count_params(&self) -> usize {
        self.quantum_param_count() + self.readout.param_count()
    }

    /// Layer parameters in layer order, then the readout's.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for layer in &self.layers {
            out.extend(layer.flat());
        }
        out.extend(self.readout.params_flat());
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.count_params() {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.count_params(),
                p.len()
            )));
        }
        let mut at = 0;
        for layer in &mut self.layers {
            let n = layer.n_params();
            *layer = QgclParams::from_flat(layer.d_msg, &p[at..at + n])?;
            at += n;
        }
        self.readout.set_params_flat(&p[at..])
    }
}

/// Per-sample forward context kept for the backward pass: the sampled
/// stars, final states, scalar outputs of intermediate layers, the final
/// Bloch triples, and the readout tapes.
pub struct SqmTrace {
    pub subs: Vec<Vec<StarSubgraph>>,
    pub states: Vec<Vec<StateVector>>,
    pub h: Vec<Vec<f64>>,
    pub bloch: Vec<[f64; 3]>,
    pub read_tapes: Vec<Tape>,
}

/// Gradients in the same layout as [`SqmGnnModel::params_flat`].
pub struct SqmGrads {
    pub layers: Vec<Vec<f64>>,
    pub readout: Vec<f64>,
}

impl SqmGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l);
        }
        out.extend_from_slice(&self.readout);
        out
    }
}

/// Runs the full model on one graph. `seed` fixes every layer's neighbor
/// sampling; the same seed reproduces the run bit for bit.
pub fn sqm_forward(
    graph: &WirelessGraph,
    model: &SqmGnnModel,
    mode: SampleMode,
    seed: u64,
    counter: &CfeCounter,
) -> Result<Vec<f64>> {
    Ok(sqm_forward_traced(graph, model, mode, seed, counter)?.0)
}

pub fn sqm_forward_traced(
    graph: &WirelessGraph,
    model: &SqmGnnModel,
    mode: SampleMode,
    seed: u64,
    counter: &CfeCounter,
) -> Result<(Vec<f64>, SqmTrace)> {
    let n = graph.n_nodes();
    let l_count = model.n_layers();
    let edge_angles = EdgeAngles::from_graph(graph, &model.norm)?;
    let mut angles: Vec<f64> = (0..n)
        .map(|v| model.norm.node_angle(graph.node_gain(v)))
        .collect::<Result<_>>()?;

    let mut trace = SqmTrace {
        subs: Vec::with_capacity(l_count),
        states: Vec::with_capacity(l_count),
        h: Vec::with_capacity(l_count - 1),
        bloch: Vec::with_capacity(n),
        read_tapes: Vec::with_capacity(n),
    };

    for layer in 0..l_count {
        let params = &model.layers[layer];
        let mut subs = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        let mut h_out = Vec::with_capacity(n);
        for v in 0..n {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(&[seed, v as u64, layer as u64]));
            let sub = sample_star(
                graph,
                v,
                model.k,
                &angles,
                edge_angles.incoming(v),
                layer,
                mode,
                &mut rng,
            )?;
            if layer + 1 < l_count {
                let (h, state) = eval_z(&sub, params, counter)?;
                h_out.push(h);
                states.push(state);
            } else {
                let (b, state) = eval_bloch(&sub, params, counter)?;
                trace.bloch.push(b);
                states.push(state);
            }
            subs.push(sub);
        }
        trace.subs.push(subs);
        trace.states.push(states);
        if layer + 1 < l_count {
            angles = h_out.iter().map(|&h| reencode(h)).collect();
            trace.h.push(h_out);
        }
    }

    let mut powers = Vec::with_capacity(n);
    for b in &trace.bloch {
        let (y, tape) = model.readout.forward(b)?;
        powers.push(model.p_max * y[0]);
        trace.read_tapes.push(tape);
    }
    Ok((powers, trace))
}

/// Reverse-mode pass over a retained trace. Neighbor-encoding gradients at
/// layer ℓ chain into the producing node's layer ℓ−1 output; the fixed
/// input encodings of layer 0 and the edge features absorb the rest.
pub fn sqm_backward(
    graph: &WirelessGraph,
    model: &SqmGnnModel,
    trace: &SqmTrace,
    dl_dp: &[f64],
    counter: &CfeCounter,
) -> Result<SqmGrads> {
    let n = graph.n_nodes();
    let l_count = model.n_layers();
    if dl_dp.len() != n {
        return Err(contract("upstream gradient length differs from node count"));
    }
    if trace.subs.len() != l_count
        || trace.states.len() != l_count
        || trace.h.len() != l_count - 1
        || trace.bloch.len() != n
        || trace.read_tapes.len() != n
        || trace.subs.iter().any(|s| s.len() != n)
    {
        return Err(contract("forward trace does not match model and graph"));
    }

    let mut grads = SqmGrads {
        layers: model.layers.iter().map(|l| vec![0.0; l.n_params()]).collect(),
        readout: vec![0.0; model.readout.param_count()],
    };

    // Readout head, then the final quantum layer's Bloch gradients.
    let mut d_angle = vec![0.0; n];
    let last = l_count - 1;
    for v in 0..n {
        let (read_g, d_bloch) =
            model.readout.backward(&trace.read_tapes[v], &[dl_dp[v] * model.p_max])?;
        for (a, g) in grads.readout.iter_mut().zip(&read_g) {
            *a += g;
        }
        let up = [d_bloch[0], d_bloch[1], d_bloch[2]];
        let g = backward_bloch(
            &trace.subs[last][v],
            &model.layers[last],
            &trace.states[last][v],
            up,
            counter,
        )?;
        accumulate(&mut grads.layers[last], &mut d_angle, &trace.subs[last][v], &g);
    }

    // Intermediate layers, deepest first: the next layer's angle gradient
    // times the re-encoding slope drives each ⟨Z⟩ sweep.
    for layer in (0..last).rev() {
        let mut d_angle_prev = vec![0.0; n];
        for v in 0..n {
            let upstream = d_angle[v] * reencode_deriv(trace.h[layer][v]);
            let g = backward_z(
                &trace.subs[layer][v],
                &model.layers[layer],
                &trace.states[layer][v],
                upstream,
                counter,
            )?;
            accumulate(&mut grads.layers[layer], &mut d_angle_prev, &trace.subs[layer][v], &g);
        }
        d_angle = d_angle_prev;
    }
    Ok(grads)
}

fn accumulate(
    layer_grads: &mut [f64],
    d_angle: &mut [f64],
    sub: &StarSubgraph,
    g: &crate::qgcl::QgclGrads,
) {
    for (a, x) in layer_grads.iter_mut().zip(&g.trainable) {
        *a += x;
    }
    d_angle[sub.center] += g.center_angle;
    for (slot, &ga) in sub.slots.iter().zip(&g.neighbor_angles) {
        if let Some(u) = slot.neighbor {
            d_angle[u] += ga;
        }
    }
    // Edge angles are graph constants; their gradients stop here.
}

/// Classical message-passing baseline. Initial embeddings are the node
/// angle zero-padded to `embed_dim`; each round sends a message per
/// directed edge, aggregates by elementwise max, and updates. All
/// neighborhoods are full: the baseline never samples.
#[derive(Debug, Clone)]
pub struct ClassicalGnnModel {
    pub embed_dim: usize,
    pub message: DenseNet,
    pub update: DenseNet,
    pub readout: DenseNet,
    pub rounds: usize,
    pub norm: NormStats,
    pub p_max: f64,
}

impl ClassicalGnnModel {
    pub fn new(
        embed_dim: usize,
        message: DenseNet,
        update: DenseNet,
        readout: DenseNet,
        rounds: usize,
        norm: NormStats,
        p_max: f64,
    ) -> Result<Self> {
        if message.input_dim() != embed_dim + 1 {
            return Err(contract("message net input must be neighbor embed + edge feature"));
        }
        if update.input_dim() != embed_dim + message.output_dim()
            || update.output_dim() != embed_dim
        {
            return Err(contract("update net must map embed + aggregate back to embed"));
        }
        if readout.input_dim() != embed_dim || readout.output_dim() != 1 {
            return Err(contract("readout must map an embedding to one unit"));
        }
        if readout.acts().last() != Some(&Activation::Sigmoid) {
            return Err(contract("readout head must be a sigmoid"));
        }
        if rounds == 0 {
            return Err(contract("need at least one message round"));
        }
        Ok(ClassicalGnnModel { embed_dim, message, update, readout, rounds, norm, p_max })
    }

    /// Reference baseline: embed 64, message 65→128→64, update 128→128→64,
    /// readout 64→32→1, two rounds with shared nets.
    pub fn default_model(norm: NormStats, p_max: f64, rng: &mut impl rand::Rng) -> Self {
        let relu2 = vec![Activation::Relu, Activation::Relu];
        let mut message = DenseNet::new(vec![65, 128, 64], relu2.clone()).unwrap();
        let mut update = DenseNet::new(vec![128, 128, 64], relu2).unwrap();
        let mut readout =
            DenseNet::new(vec![64, 32, 1], vec![Activation::Relu, Activation::Sigmoid]).unwrap();
        message.init_uniform(rng);
        update.init_uniform(rng);
        readout.init_uniform(rng);
        ClassicalGnnModel::new(64, message, update, readout, 2, norm, p_max).unwrap()
    }

    pub fn count_params(&self) -> usize {
        self.message.param_count() + self.update.param_count() + self.readout.param_count()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.message.params_flat();
        out.extend(self.update.params_flat());
        out.extend(self.readout.params_flat());
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.count_params() {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.count_params(),
                p.len()
            )));
        }
        let (a, b) = (self.message.param_count(), self.update.param_count());
        self.message.set_params_flat(&p[..a])?;
        self.update.set_params_flat(&p[a..a + b])?;
        self.readout.set_params_flat(&p[a + b..])
    }
}

/// Forward context for the baseline: embeddings entering each round, one
/// message tape per directed edge, per-component argmax routing, and the
/// update/readout tapes.
pub struct GnnTrace {
    pub embeds: Vec<Vec<Vec<f64>>>,
    pub msg_tapes: Vec<Vec<Vec<(usize, Tape)>>>,
    pub argmax: Vec<Vec<Vec<usize>>>,
    pub upd_tapes: Vec<Vec<Tape>>,
    pub read_tapes: Vec<Tape>,
}

pub struct GnnGrads {
    pub message: Vec<f64>,
    pub update: Vec<f64>,
    pub readout: Vec<f64>,
}

impl GnnGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.message.clone();
        out.extend_from_slice(&self.update);
        out.extend_from_slice(&self.readout);
        out
    }
}

pub fn gnn_forward(graph: &WirelessGraph, model: &ClassicalGnnModel) -> Result<Vec<f64>> {
    Ok(gnn_forward_traced(graph, model)?.0)
}

pub fn gnn_forward_traced(
    graph: &WirelessGraph,
    model: &ClassicalGnnModel,
) -> Result<(Vec<f64>, GnnTrace)> {
    let n = graph.n_nodes();
    let dim = model.embed_dim;
    let mdim = model.message.output_dim();
    let edge_angles = EdgeAngles::from_graph(graph, &model.norm)?;

    let mut x: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut e = vec![0.0; dim];
            e[0] = model.norm.node_angle(graph.node_gain(v))?;
            Ok(e)
        })
        .collect::<Result<_>>()?;

    let mut trace = GnnTrace {
        embeds: Vec::with_capacity(model.rounds),
        msg_tapes: Vec::with_capacity(model.rounds),
        argmax: Vec::with_capacity(model.rounds),
        upd_tapes: Vec::with_capacity(model.rounds),
        read_tapes: Vec::with_capacity(n),
    };

    for _ in 0..model.rounds {
        let mut msg_tapes = Vec::with_capacity(n);
        let mut argmax = Vec::with_capacity(n);
        let mut upd_tapes = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let incoming = edge_angles.incoming(v);
            let mut tapes: Vec<(usize, Tape)> = Vec::with_capacity(n.saturating_sub(1));
            let mut agg = vec![0.0; mdim];
            let mut arg = vec![0usize; mdim];
            let mut first = true;
            for u in (0..n).filter(|&u| u != v) {
                let mut input = x[u].clone();
                input.push(incoming[u]);
                let (m, tape) = model.message.forward(&input)?;
                if first {
                    agg.copy_from_slice(&m);
                    arg.iter_mut().for_each(|a| *a = tapes.len());
                    first = false;
                } else {
                    for c in 0..mdim {
                        // strictly greater: ties keep the lowest index
                        if m[c] > agg[c] {
                            agg[c] = m[c];
                            arg[c] = tapes.len();
                        }
                    }
                }
                tapes.push((u, tape));
            }
            let mut upd_in = x[v].clone();
            upd_in.extend_from_slice(&agg);
            let (xv, upd_tape) = model.update.forward(&upd_in)?;
            next.push(xv);
            msg_tapes.push(tapes);
            argmax.push(arg);
            upd_tapes.push(upd_tape);
        }
        trace.embeds.push(x);
        trace.msg_tapes.push(msg_tapes);
        trace.argmax.push(argmax);
        trace.upd_tapes.push(upd_tapes);
        x = next;
    }

    let mut powers = Vec::with_capacity(n);
    for xv in &x {
        let (y, tape) = model.readout.forward(xv)?;
        powers.push(model.p_max * y[0]);
        trace.read_tapes.push(tape);
    }
    Ok((powers, trace))
}

pub fn gnn_backward(
    graph: &WirelessGraph,
    model: &ClassicalGnnModel,
    trace: &GnnTrace,
    dl_dp: &[f64],
) -> Result<GnnGrads> {
    let n = graph.n_nodes();
    let dim = model.embed_dim;
    let mdim = model.message.output_dim();
    if dl_dp.len() != n {
        return Err(contract("upstream gradient length differs from node count"));
    }
    if trace.embeds.len() != model.rounds || trace.read_tapes.len() != n {
        return Err(contract("forward trace does not match model and graph"));
    }

    let mut grads = GnnGrads {
        message: vec![0.0; model.message.param_count()],
        update: vec![0.0; model.update.param_count()],
        readout: vec![0.0; model.readout.param_count()],
    };

    let mut d_x: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let (g, dx) = model.readout.backward(&trace.read_tapes[v], &[dl_dp[v] * model.p_max])?;
            for (a, x) in grads.readout.iter_mut().zip(&g) {
                *a += x;
            }
            Ok(dx)
        })
        .collect::<Result<_>>()?;

    for round in (0..model.rounds).rev() {
        let mut d_prev: Vec<Vec<f64>> = vec![vec![0.0; dim]; n];
        for v in 0..n {
            let (upd_g, d_in) = model.update.backward(&trace.upd_tapes[round][v], &d_x[v])?;
            for (a, x) in grads.update.iter_mut().zip(&upd_g) {
                *a += x;
            }
            for c in 0..dim {
                d_prev[v][c] += d_in[c];
            }
            let tapes = &trace.msg_tapes[round][v];
            if tapes.is_empty() {
                continue;
            }
            // Max aggregation: each component's gradient flows only to the
            // message that won it.
            let mut d_msg: Vec<Vec<f64>> = vec![vec![0.0; mdim]; tapes.len()];
            for c in 0..mdim {
                d_msg[trace.argmax[round][v][c]][c] += d_in[dim + c];
            }
            for (entry, dm) in tapes.iter().zip(&d_msg) {
                if dm.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let (msg_g, d_min) = model.message.backward(&entry.1, dm)?;
                for (a, x) in grads.message.iter_mut().zip(&msg_g) {
                    *a += x;
                }
                for c in 0..dim {
                    d_prev[entry.0][c] += d_min[c];
                }
                // d_min[dim] is the edge feature: a fixed input.
            }
        }
        d_x = d_prev;
    }
    Ok(grads)
}

/// On-disk model format: a JSON manifest, plus a sibling `.bin` of
/// little-endian f64 parameters for the learned kinds.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckpointManifest {
    Sqm {
        n_layers: usize,
        k: usize,
        d_msg: usize,
        readout_dims: Vec<usize>,
        readout_acts: Vec<Activation>,
        norm: NormStats,
        p_max: f64,
        param_count: usize,
        bin_file: String,
    },
    Gnn {
        embed_dim: usize,
        message_dims: Vec<usize>,
        message_acts: Vec<Activation>,
        update_dims: Vec<usize>,
        update_acts: Vec<Activation>,
        readout_dims: Vec<usize>,
        readout_acts: Vec<Activation>,
        rounds: usize,
        norm: NormStats,
        p_max: f64,
        param_count: usize,
        bin_file: String,
    },
    /// A parameterless marker: evaluate this checkpoint by running the
    /// iterative solver on each test instance.
    WmmseOracle { iters: usize },
}

pub enum Checkpoint {
    Sqm(SqmGnnModel),
    Gnn(ClassicalGnnModel),
    WmmseOracle { iters: usize },
}

pub fn save_sqm_checkpoint(path: &Path, model: &SqmGnnModel) -> Result<()> {
    let d_msg = model.layers[0].d_msg;
    if model.layers.iter().any(|l| l.d_msg != d_msg) {
        return Err(contract("layers disagree on message depth"));
    }
    let manifest = CheckpointManifest::Sqm {
        n_layers: model.n_layers(),
        k: model.k,
        d_msg,
        readout_dims: model.readout.dims().to_vec(),
        readout_acts: model.readout.acts().to_vec(),
        norm: model.norm,
        p_max: model.p_max,
        param_count: model.count_params(),
        bin_file: bin_name(path)?,
    };
    write_manifest(path, &manifest)?;
    write_params(&path.with_extension("bin"), &model.params_flat())
}

pub fn save_gnn_checkpoint(path: &Path, model: &ClassicalGnnModel) -> Result<()> {
    let manifest = CheckpointManifest::Gnn {
        embed_dim: model.embed_dim,
        message_dims: model.message.dims().to_vec(),
        message_acts: model.message.acts().to_vec(),
        update_dims: model.update.dims().to_vec(),
        update_acts: model.update.acts().to_vec(),
        readout_dims: model.readout.dims().to_vec(),
        readout_acts: model.readout.acts().to_vec(),
        rounds: model.rounds,
        norm: model.norm,
        p_max: model.p_max,
        param_count: model.count_params(),
        bin_file: bin_name(path)?,
    };
    write_manifest(path, &manifest)?;
    write_params(&path.with_extension("bin"), &model.params_flat())
}

pub fn save_wmmse_checkpoint(path: &Path, iters: usize) -> Result<()> {
    write_manifest(path, &CheckpointManifest::WmmseOracle { iters })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| data_err(format!("cannot read {}: {e}", path.display())))?;
    let manifest: CheckpointManifest = serde_json::from_str(&raw)
        .map_err(|e| data_err(format!("bad manifest in {}: {e}", path.display())))?;
    match manifest {
        CheckpointManifest::Sqm {
            n_layers,
            k,
            d_msg,
            readout_dims,
            readout_acts,
            norm,
            p_max,
            param_count,
            bin_file,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let mut model = SqmGnnModel::new(
                n_layers,
                k,
                d_msg,
                readout_dims,
                readout_acts,
                norm,
                p_max,
                &mut rng,
            )?;
            let params = read_params(&path.with_file_name(&bin_file), param_count)?;
            model.set_params_flat(&params)?;
            Ok(Checkpoint::Sqm(model))
        }
        CheckpointManifest::Gnn {
            embed_dim,
            message_dims,
            message_acts,
            update_dims,
            update_acts,
            readout_dims,
            readout_acts,
            rounds,
            norm,
            p_max,
            param_count,
            bin_file,
        } => {
            let model = ClassicalGnnModel::new(
                embed_dim,
                DenseNet::new(message_dims, message_acts)?,
                DenseNet::new(update_dims, update_acts)?,
                DenseNet::new(readout_dims, readout_acts)?,
                rounds,
                norm,
                p_max,
            )?;
            let mut model = model;
            let params = read_params(&path.with_file_name(&bin_file), param_count)?;
            model.set_params_flat(&params)?;
            Ok(Checkpoint::Gnn(model))
        }
        CheckpointManifest::WmmseOracle { iters } => Ok(Checkpoint::WmmseOracle { iters }),
    }
}

fn bin_name(json_path: &Path) -> Result<String> {
    let p: PathBuf = json_path.with_extension("bin");
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| contract("checkpoint path has no file name"))
}

fn write_manifest(path: &Path, manifest: &CheckpointManifest) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn write_params(path: &Path, params: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for &p in params {
        f.write_all(&p.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

fn read_params(path: &Path, expect: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| data_err(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    if bytes.len() != expect * 8 {
        return Err(data_err(format!(
            "{}: expected {} parameters, found {} bytes",
            path.display(),
            expect,
            bytes.len()
        )));
    }
    Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
}
