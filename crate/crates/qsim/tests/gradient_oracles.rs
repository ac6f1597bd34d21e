//! Property suite for the simulator: norm/unitarity invariants and the
//! gradient oracle chain. The finite-difference oracle below touches only
//! `run` + `expectation`, so it is independent of both gradient engines.

use qsim::{
    expectation, grad_adjoint, grad_parameter_shift, run, AngleRef, Circuit, GateOp, Observable,
    Pauli, SlotRole, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    circuit: Circuit,
    params: Vec<f64>,
    obs: Observable,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n_qubits = rng.gen_range(1..=6);
    let n_gates = rng.gen_range(1..=30);
    let n_slots = rng.gen_range(1..=10);
    let mut gates = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        let angle = if rng.gen_bool(0.85) {
            AngleRef::Slot(rng.gen_range(0..n_slots))
        } else {
            AngleRef::Bound(rng.gen_range(-3.0..3.0))
        };
        let target = rng.gen_range(0..n_qubits);
        let kind = rng.gen_range(0..5);
        gates.push(match kind {
            0 => GateOp::rx(target, angle),
            1 => GateOp::ry(target, angle),
            2 => GateOp::rz(target, angle),
            _ if n_qubits >= 2 => {
                let mut control = rng.gen_range(0..n_qubits);
                while control == target {
                    control = rng.gen_range(0..n_qubits);
                }
                if kind == 3 {
                    GateOp::cx(control, target)
                } else {
                    GateOp::crx(control, target, angle)
                }
            }
            _ => GateOp::ry(target, angle),
        });
    }
    let slot_roles = (0..n_slots)
        .map(|_| {
            if rng.gen_bool(0.5) {
                SlotRole::Trainable
            } else {
                SlotRole::InputEncoding
            }
        })
        .collect();
    let circuit = Circuit::new(n_qubits, gates, slot_roles).unwrap();
    let params = (0..n_slots).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let pauli = match rng.gen_range(0..3) {
        0 => Pauli::X,
        1 => Pauli::Y,
        _ => Pauli::Z,
    };
    let obs = Observable::new(pauli, rng.gen_range(0..n_qubits));
    Case { circuit, params, obs }
}

/// Central finite differences of ⟨obs⟩ over every slot; h=1e-5. Shared slots
/// are perturbed jointly, which is exactly the multivariate derivative the
/// engines must reproduce.
fn fd_gradient(case: &Case, h: f64) -> Vec<f64> {
    let mut grads = vec![0.0; case.params.len()];
    for s in 0..case.params.len() {
        let mut plus = case.params.clone();
        plus[s] += h;
        let mut minus = case.params.clone();
        minus[s] -= h;
        let ep = expectation(&run(&case.circuit, &plus).unwrap(), &case.obs).unwrap();
        let em = expectation(&run(&case.circuit, &minus).unwrap(), &case.obs).unwrap();
        grads[s] = (ep - em) / (2.0 * h);
    }
    grads
}

fn all_slots(circuit: &Circuit) -> Vec<usize> {
    (0..circuit.n_slots()).collect()
}

#[test]
fn gradient_oracle_chain_over_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for trial in 0..120 {
        let case = random_case(&mut rng);
        let fd = fd_gradient(&case, 1e-5);
        let shift =
            grad_parameter_shift(&case.circuit, &case.params, &case.obs, &all_slots(&case.circuit))
                .unwrap();
        let adjoint = grad_adjoint(&case.circuit, &case.params, &case.obs).unwrap();
        for s in 0..case.params.len() {
            // Relative tolerance with a unit floor: expectations are bounded
            // by 1, so near-zero gradients are compared absolutely.
            let tol = 1e-6 * fd[s].abs().max(1.0);
            assert!(
                (shift[s] - fd[s]).abs() <= tol,
                "trial {trial} slot {s}: shift {} vs fd {}",
                shift[s],
                fd[s]
            );
            assert!(
                (adjoint[s] - shift[s]).abs() <= 1e-9,
                "trial {trial} slot {s}: adjoint {} vs shift {}",
                adjoint[s],
                shift[s]
            );
        }
    }
}

#[test]
fn norm_preserved_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..200 {
        let case = random_case(&mut rng);
        let sv = run(&case.circuit, &case.params).unwrap();
        assert!((sv.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn unitarity_inverse_returns_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let n = case.circuit.n_qubits();

        // Forward circuit followed by its reversed, angle-negated inverse.
        let mut gates: Vec<GateOp> = case.circuit.gates().to_vec();
        let inverse: Vec<GateOp> = case
            .circuit
            .gates()
            .iter()
            .rev()
            .map(|g| {
                let mut inv = *g;
                inv.angle = g.angle.map(|a| match a {
                    AngleRef::Slot(s) => AngleRef::Bound(-case.params[s]),
                    AngleRef::Bound(b) => AngleRef::Bound(-b),
                });
                inv
            })
            .collect();
        gates.extend(inverse);
        let closed = Circuit::new(n, gates, case.circuit.slot_roles().to_vec()).unwrap();
        let sv = run(&closed, &case.params).unwrap();
        let zero = StateVector::zero(n).unwrap();
        for (a, b) in sv.amplitudes().iter().zip(zero.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn expectation_bounds_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..200 {
        let case = random_case(&mut rng);
        let sv = run(&case.circuit, &case.params).unwrap();
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            for q in 0..case.circuit.n_qubits() {
                let e = expectation(&sv, &Observable::new(pauli, q)).unwrap();
                assert!(e >= -1.0 - 1e-12 && e <= 1.0 + 1e-12);
            }
        }
    }
}

/// A slot driving m gates must see the sum of m single-occurrence gradients:
/// rebuild the circuit with each occurrence on its own fresh slot and compare.
#[test]
fn shared_slot_equals_sum_of_duplicated_slots() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..40 {
        let case = random_case(&mut rng);
        let shared = rng.gen_range(0..case.params.len());
        let occurrences = case
            .circuit
            .gates()
            .iter()
            .filter(|g| g.slot() == Some(shared))
            .count();
        if occurrences < 2 {
            continue;
        }

        let mut split_roles = case.circuit.slot_roles().to_vec();
        let mut split_params = case.params.clone();
        let mut split_slots = Vec::new();
        let split_gates: Vec<GateOp> = case
            .circuit
            .gates()
            .iter()
            .map(|g| {
                let mut out = *g;
                if g.slot() == Some(shared) {
                    let fresh = split_roles.len();
                    split_roles.push(SlotRole::Trainable);
                    split_params.push(case.params[shared]);
                    split_slots.push(fresh);
                    out.angle = Some(AngleRef::Slot(fresh));
                }
                out
            })
            .collect();
        let split = Circuit::new(case.circuit.n_qubits(), split_gates, split_roles).unwrap();

        let g_shared =
            grad_parameter_shift(&case.circuit, &case.params, &case.obs, &[shared]).unwrap()[shared];
        let g_split = grad_parameter_shift(&split, &split_params, &case.obs, &split_slots).unwrap();
        let summed: f64 = split_slots.iter().map(|&s| g_split[s]).sum();
        assert!((g_shared - summed).abs() < 1e-9);

        let a_shared = grad_adjoint(&case.circuit, &case.params, &case.obs).unwrap()[shared];
        assert!((a_shared - summed).abs() < 1e-9);
    }
}
