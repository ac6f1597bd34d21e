//! The quantum graph convolution layer: a (2k+1)-qubit star circuit per
//! node. Qubit 0 carries the center, qubits 1..=k the sampled neighbors,
//! qubits k+1..=2k their edges. Each slot runs the same trainable message
//! block into its neighbor qubit; controlled rotations about a common axis
//! then fold every neighbor into the center, so slot order cannot matter.
//!
//! Intermediate layers read ⟨Z⟩ of the center and re-encode it as an angle
//! for the next layer; the final layer reads the center's full Bloch vector.

use qsim::{
    expectation, grad_adjoint_cached, run, AngleRef, Circuit, GateOp, Observable, Pauli, SlotRole,
    StateVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfe::CfeCounter;
use crate::graph::{sample_star, EdgeAngles, SampleMode, StarSubgraph, WirelessGraph};
use crate::{contract, mix_seed, Result};

/// Trainable angles of one layer: 6·d_msg for the message block (shared by
/// every slot of every subgraph), one shared aggregation angle, three final
/// center rotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QgclParams {
    pub d_msg: usize,
    pub msg_angles: Vec<f64>,
    pub upd_angle: f64,
    pub center_post: [f64; 3],
}

impl QgclParams {
    pub fn zeros(d_msg: usize) -> Self {
        assert!(d_msg >= 1);
        QgclParams { d_msg, msg_angles: vec![0.0; 6 * d_msg], upd_angle: 0.0, center_post: [0.0; 3] }
    }

    /// Uniform init in ±π/4, a quarter turn keeping early training away
    /// from both the identity and expectation plateaus.
    pub fn init(d_msg: usize, rng: &mut impl rand::Rng) -> Self {
        let mut p = QgclParams::zeros(d_msg);
        let b = std::f64::consts::FRAC_PI_4;
        for a in &mut p.msg_angles {
            *a = rng.gen_range(-b..b);
        }
        p.upd_angle = rng.gen_range(-b..b);
        for a in &mut p.center_post {
            *a = rng.gen_range(-b..b);
        }
        p
    }

    pub fn n_params(&self) -> usize {
        6 * self.d_msg + 4
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.msg_angles.clone();
        out.push(self.upd_angle);
        out.extend_from_slice(&self.center_post);
        out
    }

    pub fn from_flat(d_msg: usize, p: &[f64]) -> Result<Self> {
        if p.len() != 6 * d_msg + 4 {
            return Err(contract(format!(
                "expected {} layer parameters, got {}",
                6 * d_msg + 4,
                p.len()
            )));
        }
        Ok(QgclParams {
            d_msg,
            msg_angles: p[..6 * d_msg].to_vec(),
            upd_angle: p[6 * d_msg],
            center_post: [p[6 * d_msg + 1], p[6 * d_msg + 2], p[6 * d_msg + 3]],
        })
    }
}

/// Slot/qubit index arithmetic for a k-slot layer.
#[derive(Clone, Copy)]
struct Layout {
    k: usize,
    d_msg: usize,
}

impl Layout {
    fn n_qubits(self) -> usize {
        2 * self.k + 1
    }
    fn qb_neighbor(self, j: usize) -> usize {
        1 + j
    }
    fn qb_edge(self, j: usize) -> usize {
        1 + self.k + j
    }
    fn n_enc(self) -> usize {
        2 * self.k + 1
    }
    // Encoding slots mirror qubit indices: 0 center, 1+j neighbor, 1+k+j edge.
    fn base(self) -> usize {
        self.n_enc()
    }
    fn slot_msg(self, rep: usize, i: usize) -> usize {
        self.base() + 6 * rep + i
    }
    fn slot_upd(self) -> usize {
        self.base() + 6 * self.d_msg
    }
    fn slot_post(self, i: usize) -> usize {
        self.base() + 6 * self.d_msg + 1 + i
    }
    fn n_slots(self) -> usize {
        self.base() + 6 * self.d_msg + 4
    }
}

/// Builds the circuit for one star subgraph together with its bound
/// parameter vector (encoding angles first, trainable values after).
pub fn build_qgcl_circuit(sub: &StarSubgraph, params: &QgclParams) -> Result<(Circuit, Vec<f64>)> {
    let k = sub.slots.len();
    if k == 0 {
        return Err(contract("subgraph has no slots"));
    }
    let lay = Layout { k, d_msg: params.d_msg };

    let mut gates = Vec::with_capacity(lay.n_enc() + k * (7 * params.d_msg + 1) + 3);
    gates.push(GateOp::ry(0, AngleRef::Slot(0)));
    for j in 0..k {
        gates.push(GateOp::ry(lay.qb_neighbor(j), AngleRef::Slot(lay.qb_neighbor(j))));
    }
    for j in 0..k {
        gates.push(GateOp::ry(lay.qb_edge(j), AngleRef::Slot(lay.qb_edge(j))));
    }
    for j in 0..k {
        let (nb, ed) = (lay.qb_neighbor(j), lay.qb_edge(j));
        for rep in 0..params.d_msg {
            gates.push(GateOp::rz(nb, AngleRef::Slot(lay.slot_msg(rep, 0))));
            gates.push(GateOp::ry(nb, AngleRef::Slot(lay.slot_msg(rep, 1))));
            gates.push(GateOp::rz(nb, AngleRef::Slot(lay.slot_msg(rep, 2))));
            gates.push(GateOp::rz(ed, AngleRef::Slot(lay.slot_msg(rep, 3))));
            gates.push(GateOp::ry(ed, AngleRef::Slot(lay.slot_msg(rep, 4))));
            gates.push(GateOp::rz(ed, AngleRef::Slot(lay.slot_msg(rep, 5))));
            gates.push(GateOp::cx(ed, nb));
        }
    }
    for j in 0..k {
        gates.push(GateOp::crx(lay.qb_neighbor(j), 0, AngleRef::Slot(lay.slot_upd())));
    }
    gates.push(GateOp::rz(0, AngleRef::Slot(lay.slot_post(0))));
    gates.push(GateOp::ry(0, AngleRef::Slot(lay.slot_post(1))));
    gates.push(GateOp::rz(0, AngleRef::Slot(lay.slot_post(2))));

    let mut roles = vec![SlotRole::InputEncoding; lay.n_enc()];
    roles.extend(std::iter::repeat(SlotRole::Trainable).take(6 * params.d_msg + 4));
    let circuit = Circuit::new(lay.n_qubits(), gates, roles)?;

    let mut values = Vec::with_capacity(lay.n_slots());
    values.push(sub.center_angle);
    values.extend(sub.slots.iter().map(|s| s.node_angle));
    values.extend(sub.slots.iter().map(|s| s.edge_angle));
    values.extend(params.flat());
    debug_assert_eq!(values.len(), circuit.n_slots());
    Ok((circuit, values))
}

const Z0: Observable = Observable { pauli: Pauli::Z, target: 0 };
const X0: Observable = Observable { pauli: Pauli::X, target: 0 };
const Y0: Observable = Observable { pauli: Pauli::Y, target: 0 };

/// Runs the subgraph circuit; returns ⟨Z_center⟩ and the final state (kept
/// for the gradient sweep).
pub fn eval_z(
    sub: &StarSubgraph,
    params: &QgclParams,
    counter: &CfeCounter,
) -> Result<(f64, StateVector)> {
    let (circuit, values) = build_qgcl_circuit(sub, params)?;
    let state = run(&circuit, &values)?;
    counter.record_forward();
    Ok((expectation(&state, &Z0)?, state))
}

/// One execution, three expectations: the center qubit's Bloch vector.
pub fn eval_bloch(
    sub: &StarSubgraph,
    params: &QgclParams,
    counter: &CfeCounter,
) -> Result<([f64; 3], StateVector)> {
    let (circuit, values) = build_qgcl_circuit(sub, params)?;
    let state = run(&circuit, &values)?;
    counter.record_forward();
    let bloch =
        [expectation(&state, &X0)?, expectation(&state, &Y0)?, expectation(&state, &Z0)?];
    Ok((bloch, state))
}

/// Gradients of one subgraph evaluation, split by role. `neighbor_angles`
/// and `edge_angles` are indexed by slot; the caller maps slots to node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct QgclGrads {
    pub trainable: Vec<f64>,
    pub center_angle: f64,
    pub neighbor_angles: Vec<f64>,
    pub edge_angles: Vec<f64>,
}

impl QgclGrads {
    fn zeros(k: usize, n_train: usize) -> Self {
        QgclGrads {
            trainable: vec![0.0; n_train],
            center_angle: 0.0,
            neighbor_angles: vec![0.0; k],
            edge_angles: vec![0.0; k],
        }
    }
}

/// Adjoint sweep for upstream·⟨Z_center⟩. `final_state` must come from the
/// matching eval call.
pub fn backward_z(
    sub: &StarSubgraph,
    params: &QgclParams,
    final_state: &StateVector,
    upstream: f64,
    counter: &CfeCounter,
) -> Result<QgclGrads> {
    backward_weighted(sub, params, final_state, &[(upstream, Z0)], counter)
}

/// Adjoint sweep for upstream·(⟨X⟩,⟨Y⟩,⟨Z⟩) of the center, one pass.
pub fn backward_bloch(
    sub: &StarSubgraph,
    params: &QgclParams,
    final_state: &StateVector,
    upstream: [f64; 3],
    counter: &CfeCounter,
) -> Result<QgclGrads> {
    let terms = [(upstream[0], X0), (upstream[1], Y0), (upstream[2], Z0)];
    backward_weighted(sub, params, final_state, &terms, counter)
}

fn backward_weighted(
    sub: &StarSubgraph,
    params: &QgclParams,
    final_state: &StateVector,
    terms: &[(f64, Observable)],
    counter: &CfeCounter,
) -> Result<QgclGrads> {
    let k = sub.slots.len();
    let lay = Layout { k, d_msg: params.d_msg };
    if terms.iter().all(|&(c, _)| c == 0.0) {
        return Ok(QgclGrads::zeros(k, params.n_params()));
    }
    let (circuit, values) = build_qgcl_circuit(sub, params)?;
    let grads = grad_adjoint_cached(&circuit, &values, final_state, terms)?;
    counter.record_gradient();
    let mut out = QgclGrads::zeros(k, params.n_params());
    out.center_angle = grads[0];
    for j in 0..k {
        out.neighbor_angles[j] = grads[lay.qb_neighbor(j)];
        out.edge_angles[j] = grads[lay.qb_edge(j)];
    }
    out.trainable.copy_from_slice(&grads[lay.base()..lay.n_slots()]);
    Ok(out)
}

const REENCODE_EPS: f64 = 1e-6;

/// Maps a measured expectation back to an encoding angle, arccos with
/// ε-clamping so the derivative stays finite at |h| = 1.
pub fn reencode(h: f64) -> f64 {
    h.clamp(-1.0 + REENCODE_EPS, 1.0 - REENCODE_EPS).acos()
}

/// d reencode / d h: −1/√(1−h²) inside the clamp window, 0 outside.
pub fn reencode_deriv(h: f64) -> f64 {
    if h.abs() >= 1.0 - REENCODE_EPS {
        0.0
    } else {
        -1.0 / (1.0 - h * h).sqrt()
    }
}

/// One layer over a whole graph: per node, sample a star and measure ⟨Z⟩.
/// Exactly N circuit executions for N nodes, whatever the degrees.
#[allow(clippy::too_many_arguments)]
pub fn qgcl_forward(
    graph: &WirelessGraph,
    node_angles: &[f64],
    edge_angles: &EdgeAngles,
    params: &QgclParams,
    k: usize,
    layer_index: usize,
    mode: SampleMode,
    seed: u64,
    counter: &CfeCounter,
) -> Result<Vec<f64>> {
    (0..graph.n_nodes())
        .map(|v| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(&[seed, v as u64, layer_index as u64]));
            let sub =
                sample_star(graph, v, k, node_angles, edge_angles.incoming(v), layer_index, mode, &mut rng)?;
            Ok(eval_z(&sub, params, counter)?.0)
        })
        .collect()
}

/// Final-layer variant: Bloch triple per node.
#[allow(clippy::too_many_arguments)]
pub fn qgcl_final_measure(
    graph: &WirelessGraph,
    node_angles: &[f64],
    edge_angles: &EdgeAngles,
    params: &QgclParams,
    k: usize,
    layer_index: usize,
    mode: SampleMode,
    seed: u64,
    counter: &CfeCounter,
) -> Result<Vec<[f64; 3]>> {
    (0..graph.n_nodes())
        .map(|v| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(&[seed, v as u64, layer_index as u64]));
            let sub =
                sample_star(graph, v, k, node_angles, edge_angles.incoming(v), layer_index, mode, &mut rng)?;
            Ok(eval_bloch(&sub, params, counter)?.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, fit_normalization, StarSlot};
    use rand::Rng;

    fn padded_sub(k: usize, center_angle: f64) -> StarSubgraph {
        StarSubgraph {
            center: 0,
            center_angle,
            slots: vec![StarSlot { neighbor: None, node_angle: 0.0, edge_angle: 0.0 }; k],
            layer_index: 0,
        }
    }

    fn random_sub(k: usize, rng: &mut impl Rng) -> StarSubgraph {
        StarSubgraph {
            center: 0,
            center_angle: rng.gen_range(0.1..3.0),
            slots: (0..k)
                .map(|j| StarSlot {
                    neighbor: Some(j + 1),
                    node_angle: rng.gen_range(0.1..3.0),
                    edge_angle: rng.gen_range(0.1..3.0),
                })
                .collect(),
            layer_index: 0,
        }
    }

    #[test]
    fn circuit_shape_for_six_slots() {
        let sub = padded_sub(6, 0.0);
        let params = QgclParams::zeros(2);
        let (c, values) = build_qgcl_circuit(&sub, &params).unwrap();
        assert_eq!(c.n_qubits(), 13);
        assert_eq!(c.n_slots(), 29);
        assert_eq!(values.len(), 29);
        assert_eq!(c.gates().len(), 13 + 6 * (7 * 2) + 6 + 3);
    }

    #[test]
    fn all_zero_is_identity() {
        let counter = CfeCounter::new(1);
        let (h, _) = eval_z(&padded_sub(6, 0.0), &QgclParams::zeros(2), &counter).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(counter.forward_count(), 1);
    }

    #[test]
    fn center_encoding_alone_gives_cosine() {
        let counter = CfeCounter::new(1);
        for theta in [0.3, 1.2, 2.8] {
            let mut sub = random_sub(4, &mut ChaCha8Rng::seed_from_u64(8));
            sub.center_angle = theta;
            let (h, _) = eval_z(&sub, &QgclParams::zeros(2), &counter).unwrap();
            // Zero trainable params: message blocks only touch neighbor and
            // edge qubits, aggregation angle 0 leaves the center alone.
            assert!((h - theta.cos()).abs() < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn bloch_reference_points() {
        let counter = CfeCounter::new(1);
        let (b, _) = eval_bloch(&padded_sub(3, 0.0), &QgclParams::zeros(1), &counter).unwrap();
        assert!((b[0]).abs() < 1e-12 && (b[1]).abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);
        let (b, _) = eval_bloch(
            &padded_sub(3, std::f64::consts::FRAC_PI_2),
            &QgclParams::zeros(1),
            &counter,
        )
        .unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
    }

    #[test]
    fn bloch_vector_is_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let counter = CfeCounter::new(1);
        for _ in 0..20 {
            let sub = random_sub(3, &mut rng);
            let params = QgclParams::init(2, &mut rng);
            let (b, _) = eval_bloch(&sub, &params, &counter).unwrap();
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            assert!(norm <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn slot_permutation_leaves_center_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let counter = CfeCounter::new(1);
        for trial in 0..10 {
            let k = 2 + trial % 5;
            let sub = random_sub(k, &mut rng);
            let params = QgclParams::init(2, &mut rng);
            let (b0, _) = eval_bloch(&sub, &params, &counter).unwrap();
            let mut permuted = sub.clone();
            // rotate + swap: a nontrivial permutation of the slots
            permuted.slots.rotate_left(1);
            permuted.slots.swap(0, k - 1);
            let (b1, _) = eval_bloch(&permuted, &params, &counter).unwrap();
            for i in 0..3 {
                assert!(
                    (b0[i] - b1[i]).abs() < 1e-10,
                    "component {i}: {} vs {}",
                    b0[i],
                    b1[i]
                );
            }
        }
    }

    #[test]
    fn reencode_round_trip_and_edges() {
        assert!(reencode(1.0) < 2e-3);
        assert!((reencode(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        for i in 0..=40 {
            let h = -1.0 + i as f64 / 20.0;
            assert!((reencode(h).cos() - h).abs() < 2e-6);
        }
        assert_eq!(reencode_deriv(1.0), 0.0);
        assert_eq!(reencode_deriv(-1.0), 0.0);
        assert!((reencode_deriv(0.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_zero_upstream_short_circuits() {
        let counter = CfeCounter::new(1);
        let sub = random_sub(3, &mut ChaCha8Rng::seed_from_u64(2));
        let params = QgclParams::init(1, &mut ChaCha8Rng::seed_from_u64(3));
        let (_, state) = eval_z(&sub, &params, &counter).unwrap();
        let g = backward_z(&sub, &params, &state, 0.0, &counter).unwrap();
        assert!(g.trainable.iter().all(|&x| x == 0.0));
        assert_eq!(g.center_angle, 0.0);
        assert_eq!(counter.gradient_count(), 0);
    }

    #[test]
    fn backward_center_gate_analytic() {
        let counter = CfeCounter::new(1);
        let theta = 0.9;
        let sub = padded_sub(2, theta);
        let params = QgclParams::zeros(1);
        let (_, state) = eval_z(&sub, &params, &counter).unwrap();
        let g = backward_z(&sub, &params, &state, 2.0, &counter).unwrap();
        assert!((g.center_angle - 2.0 * (-theta.sin())).abs() < 1e-10);
        assert_eq!(counter.gradient_count(), 1);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let counter = CfeCounter::new(1);
        let sub = random_sub(3, &mut rng);
        let params = QgclParams::init(2, &mut rng);
        let (_, state) = eval_z(&sub, &params, &counter).unwrap();
        let g = backward_z(&sub, &params, &state, 1.0, &counter).unwrap();

        let eval = |sub: &StarSubgraph, params: &QgclParams| {
            eval_z(sub, params, &CfeCounter::new(1)).unwrap().0
        };
        let h = 1e-5;
        let base = params.flat();
        for i in 0..base.len() {
            let mut pp = base.clone();
            pp[i] += h;
            let mut pm = base.clone();
            pm[i] -= h;
            let fd = (eval(&sub, &QgclParams::from_flat(2, &pp).unwrap())
                - eval(&sub, &QgclParams::from_flat(2, &pm).unwrap()))
                / (2.0 * h);
            assert!(
                (g.trainable[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "trainable {i}: {} vs {}",
                g.trainable[i],
                fd
            );
        }
        let mut sp = sub.clone();
        sp.center_angle += h;
        let mut sm = sub.clone();
        sm.center_angle -= h;
        let fd = (eval(&sp, &params) - eval(&sm, &params)) / (2.0 * h);
        assert!((g.center_angle - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        for j in 0..3 {
            for edge in [false, true] {
                let mut sp = sub.clone();
                let mut sm = sub.clone();
                if edge {
                    sp.slots[j].edge_angle += h;
                    sm.slots[j].edge_angle -= h;
                } else {
                    sp.slots[j].node_angle += h;
                    sm.slots[j].node_angle -= h;
                }
                let fd = (eval(&sp, &params) - eval(&sm, &params)) / (2.0 * h);
                let got = if edge { g.edge_angles[j] } else { g.neighbor_angles[j] };
                assert!(
                    (got - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                    "slot {j} edge={edge}: {got} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn bloch_backward_is_weighted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let counter = CfeCounter::new(1);
        let sub = random_sub(2, &mut rng);
        let params = QgclParams::init(1, &mut rng);
        let (_, state) = eval_bloch(&sub, &params, &counter).unwrap();
        let up = [0.3, -1.1, 0.7];
        let g = backward_bloch(&sub, &params, &state, up, &counter).unwrap();

        // Finite differences on the weighted observable directly.
        let eval = |sub: &StarSubgraph| {
            let (b, _) = eval_bloch(sub, &params, &CfeCounter::new(1)).unwrap();
            up[0] * b[0] + up[1] * b[1] + up[2] * b[2]
        };
        let h = 1e-5;
        let mut sp = sub.clone();
        sp.slots[1].node_angle += h;
        let mut sm = sub.clone();
        sm.slots[1].node_angle -= h;
        let fd = (eval(&sp) - eval(&sm)) / (2.0 * h);
        assert!((g.neighbor_angles[1] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn gradient_reaches_every_live_slot() {
        // The final rep's trailing RZ on each message wire commutes past the
        // CX and the CRX control onto unmeasured qubits, so those two angles
        // are exactly dead for any center observable. Everything else must
        // see a generic nonzero gradient.
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let counter = CfeCounter::new(1);
        let sub = random_sub(3, &mut rng);
        let d_msg = 2;
        let params = QgclParams::init(d_msg, &mut rng);
        let (_, state) = eval_bloch(&sub, &params, &counter).unwrap();
        let g = backward_bloch(&sub, &params, &state, [0.4, 0.5, 0.6], &counter).unwrap();
        let dead = [6 * (d_msg - 1) + 2, 6 * (d_msg - 1) + 5];
        for (i, &x) in g.trainable.iter().enumerate() {
            if dead.contains(&i) {
                assert!(x.abs() < 1e-12, "slot {i} should be dead, got {x}");
            } else {
                assert!(x.abs() > 1e-12, "slot {i} unexpectedly zero");
            }
        }
        assert!(g.center_angle.abs() > 1e-12);
        assert!(g.neighbor_angles.iter().all(|&x| x.abs() > 1e-12));
        assert!(g.edge_angles.iter().all(|&x| x.abs() > 1e-12));
    }

    #[test]
    fn z_measurement_also_kills_final_center_rz() {
        // ⟨Z⟩ commutes with the last center RZ, so intermediate layers have
        // one more dead angle than the Bloch readout.
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let counter = CfeCounter::new(1);
        let sub = random_sub(2, &mut rng);
        let params = QgclParams::init(1, &mut rng);
        let (_, state) = eval_z(&sub, &params, &counter).unwrap();
        let g = backward_z(&sub, &params, &state, 1.0, &counter).unwrap();
        let n = params.n_params();
        assert!(g.trainable[n - 1].abs() < 1e-12);
        assert!(g.trainable[n - 2].abs() > 1e-12);
    }

    #[test]
    fn weight_sharing_couples_subgraphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let counter = CfeCounter::new(1);
        let a = random_sub(3, &mut rng);
        let b = random_sub(3, &mut rng);
        let params = QgclParams::init(1, &mut rng);
        let mut bumped = params.clone();
        bumped.msg_angles[1] += 0.2;
        let da = eval_z(&a, &params, &counter).unwrap().0 - eval_z(&a, &bumped, &counter).unwrap().0;
        let db = eval_z(&b, &params, &counter).unwrap().0 - eval_z(&b, &bumped, &counter).unwrap().0;
        assert!(da.abs() > 1e-9 && db.abs() > 1e-9);
    }

    #[test]
    fn layer_runs_one_circuit_per_node() {
        let n = 5;
        let mut gains = vec![1e-12; n * n];
        for v in 0..n {
            gains[v * n + v] = 1e-9;
        }
        let g = build_graph(&gains, n).unwrap();
        let stats = fit_normalization(&[g.clone()]).unwrap();
        let node_angles: Vec<f64> =
            (0..n).map(|v| stats.node_angle(g.node_gain(v)).unwrap()).collect();
        let ea = EdgeAngles::from_graph(&g, &stats).unwrap();
        let counter = CfeCounter::new(1);
        let params = QgclParams::init(2, &mut ChaCha8Rng::seed_from_u64(4));
        let h = qgcl_forward(
            &g,
            &node_angles,
            &ea,
            &params,
            3,
            0,
            SampleMode::Random,
            99,
            &counter,
        )
        .unwrap();
        assert_eq!(h.len(), n);
        assert_eq!(counter.forward_count(), n as u64);
        assert!(h.iter().all(|&x| (-1.0..=1.0).contains(&x)));

        // Same seed → identical outputs; the helper derives per-node streams.
        let h2 = qgcl_forward(
            &g,
            &node_angles,
            &ea,
            &params,
            3,
            0,
            SampleMode::Random,
            99,
            &counter,
        )
        .unwrap();
        assert_eq!(h, h2);
    }

    #[test]
    fn single_node_graph_all_padding() {
        let g = build_graph(&[1e-9], 1).unwrap();
        let stats = fit_normalization(&[g.clone()]).unwrap();
        let ea = EdgeAngles::from_graph(&g, &stats).unwrap();
        let counter = CfeCounter::new(1);
        // Zero params and a zero center angle leave the state at |0…0⟩.
        let h = qgcl_forward(
            &g,
            &[0.0],
            &ea,
            &QgclParams::zeros(1),
            4,
            0,
            SampleMode::Random,
            7,
            &counter,
        )
        .unwrap();
        assert!((h[0] - 1.0).abs() < 1e-12);
    }
}
