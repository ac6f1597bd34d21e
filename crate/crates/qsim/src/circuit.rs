use crate::{contract, Result, StateVector, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cx,
    Crx,
}

impl GateKind {
    pub fn is_parameterized(self) -> bool {
        !matches!(self, GateKind::Cx)
    }

    fn label(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cx => "CX",
            GateKind::Crx => "CRX",
        }
    }
}

/// Where a parameterized gate takes its angle from: a slot of the circuit's
/// parameter vector, or a constant bound at construction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleRef {
    Slot(usize),
    Bound(f64),
}

/// Role of a parameter slot; input-encoding slots carry data angles but are
/// differentiable all the same (needed to backpropagate through re-encoded
/// layer inputs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    Trainable,
    InputEncoding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub control: Option<usize>,
    pub target: usize,
    pub angle: Option<AngleRef>,
}

impl GateOp {
    pub fn rx(target: usize, angle: AngleRef) -> Self {
        GateOp { kind: GateKind::Rx, control: None, target, angle: Some(angle) }
    }

    pub fn ry(target: usize, angle: AngleRef) -> Self {
        GateOp { kind: GateKind::Ry, control: None, target, angle: Some(angle) }
    }

    pub fn rz(target: usize, angle: AngleRef) -> Self {
        GateOp { kind: GateKind::Rz, control: None, target, angle: Some(angle) }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        GateOp { kind: GateKind::Cx, control: Some(control), target, angle: None }
    }

    pub fn crx(control: usize, target: usize, angle: AngleRef) -> Self {
        GateOp { kind: GateKind::Crx, control: Some(control), target, angle: Some(angle) }
    }

    pub fn slot(&self) -> Option<usize> {
        match self.angle {
            Some(AngleRef::Slot(s)) => Some(s),
            _ => None,
        }
    }
}

/// Ordered gate sequence over a fixed qubit count; execution order is the
/// vector order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateOp>,
    slot_roles: Vec<SlotRole>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<GateOp>, slot_roles: Vec<SlotRole>) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(crate::QsimError::Capacity(n_qubits));
        }
        for (i, g) in gates.iter().enumerate() {
            if g.target >= n_qubits {
                return Err(contract(format!("gate {i}: target {} out of range", g.target)));
            }
            match (g.kind, g.control) {
                (GateKind::Cx | GateKind::Crx, Some(c)) => {
                    if c >= n_qubits {
                        return Err(contract(format!("gate {i}: control {c} out of range")));
                    }
                    if c == g.target {
                        return Err(contract(format!("gate {i}: control equals target")));
                    }
                }
                (GateKind::Cx | GateKind::Crx, None) => {
                    return Err(contract(format!("gate {i}: missing control qubit")));
                }
                (_, Some(_)) => {
                    return Err(contract(format!("gate {i}: unexpected control qubit")));
                }
                (_, None) => {}
            }
            match (g.kind.is_parameterized(), g.angle) {
                (true, None) => return Err(contract(format!("gate {i}: missing angle"))),
                (false, Some(_)) => return Err(contract(format!("gate {i}: CX takes no angle"))),
                _ => {}
            }
            if let Some(s) = g.slot() {
                if s >= slot_roles.len() {
                    return Err(contract(format!("gate {i}: slot {s} out of range")));
                }
            }
        }
        Ok(Circuit { n_qubits, gates, slot_roles })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn slot_roles(&self) -> &[SlotRole] {
        &self.slot_roles
    }

    pub fn n_slots(&self) -> usize {
        self.slot_roles.len()
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.slot_roles.len() {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.slot_roles.len(),
                params.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn angle_of(&self, gate: &GateOp, params: &[f64]) -> f64 {
        match gate.angle {
            Some(AngleRef::Slot(s)) => params[s],
            Some(AngleRef::Bound(a)) => a,
            None => 0.0,
        }
    }

    /// Human-readable dump, one gate per line; debugging aid only.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let angle = match g.angle {
                Some(AngleRef::Slot(s)) => format!(" slot{s}[{:?}]", self.slot_roles[s]),
                Some(AngleRef::Bound(a)) => format!(" {a:.6}"),
                None => String::new(),
            };
            match g.control {
                Some(c) => out.push_str(&format!("{} q{} -> q{}{angle}\n", g.kind.label(), c, g.target)),
                None => out.push_str(&format!("{} q{}{angle}\n", g.kind.label(), g.target)),
            }
        }
        out
    }
}

/// Applies the circuit to |0…0⟩ with the given parameter vector.
pub fn run(circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    circuit.check_params(params)?;
    let mut sv = StateVector::zero(circuit.n_qubits())?;
    for gate in circuit.gates() {
        apply(&mut sv, circuit, gate, params, None)?;
    }
    Ok(sv)
}

/// Applies one gate, optionally overriding the angle (used by the
/// parameter-shift engine to shift a single occurrence).
pub(crate) fn apply(
    sv: &mut StateVector,
    circuit: &Circuit,
    gate: &GateOp,
    params: &[f64],
    angle_override: Option<f64>,
) -> Result<()> {
    let angle = angle_override.unwrap_or_else(|| circuit.angle_of(gate, params));
    match gate.kind {
        GateKind::Rx => sv.apply_rx(gate.target, angle),
        GateKind::Ry => sv.apply_ry(gate.target, angle),
        GateKind::Rz => sv.apply_rz(gate.target, angle),
        GateKind::Cx => sv.apply_cx(gate.control.unwrap(), gate.target),
        GateKind::Crx => sv.apply_crx(gate.control.unwrap(), gate.target, angle),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{expectation, Observable, Pauli};

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3, vec![], vec![]).unwrap();
        let sv = run(&c, &[]).unwrap();
        assert_eq!(sv.amplitudes()[0].re, 1.0);
        assert_eq!(sv.amplitudes().iter().skip(1).map(|a| a.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn single_slot_ry() {
        let c = Circuit::new(
            1,
            vec![GateOp::ry(0, AngleRef::Slot(0))],
            vec![SlotRole::Trainable],
        )
        .unwrap();
        let sv = run(&c, &[std::f64::consts::PI]).unwrap();
        let z = expectation(&sv, &Observable::new(Pauli::Z, 0)).unwrap();
        assert!((z + 1.0).abs() < 1e-12);
    }

    #[test]
    fn param_length_mismatch_rejected() {
        let c = Circuit::new(
            1,
            vec![GateOp::ry(0, AngleRef::Slot(0))],
            vec![SlotRole::Trainable],
        )
        .unwrap();
        assert!(run(&c, &[]).is_err());
        assert!(run(&c, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn construction_contract_errors() {
        // Slot out of range.
        assert!(Circuit::new(1, vec![GateOp::ry(0, AngleRef::Slot(0))], vec![]).is_err());
        // Target out of range.
        assert!(Circuit::new(1, vec![GateOp::ry(1, AngleRef::Bound(0.0))], vec![]).is_err());
        // Control equals target.
        assert!(Circuit::new(2, vec![GateOp::cx(1, 1)], vec![]).is_err());
        // CX with an angle.
        let bad = GateOp { kind: GateKind::Cx, control: Some(0), target: 1, angle: Some(AngleRef::Bound(0.5)) };
        assert!(Circuit::new(2, vec![bad], vec![]).is_err());
        // Rotation without an angle.
        let bad = GateOp { kind: GateKind::Ry, control: None, target: 0, angle: None };
        assert!(Circuit::new(1, vec![bad], vec![]).is_err());
    }

    #[test]
    fn dump_lists_one_gate_per_line() {
        let c = Circuit::new(
            2,
            vec![
                GateOp::ry(0, AngleRef::Slot(0)),
                GateOp::cx(0, 1),
                GateOp::crx(0, 1, AngleRef::Bound(0.25)),
            ],
            vec![SlotRole::InputEncoding],
        )
        .unwrap();
        let dump = c.dump();
        assert_eq!(dump.lines().count(), 3);
        assert!(dump.contains("RY q0 slot0"));
        assert!(dump.contains("CX q0 -> q1"));
    }
}
