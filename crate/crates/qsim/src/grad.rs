use num_complex::Complex64;

use crate::circuit::{apply, run, Circuit, GateKind, GateOp};
use crate::state::{expectation, Observable, Pauli, StateVector};
use crate::{contract, Result};

// Four-term shift coefficients for controlled rotations (two-term rule per
// control branch): d/dθ f = d_plus·[f(θ+π/2) − f(θ−π/2)] − d_minus·[f(θ+3π/2) − f(θ−3π/2)].
const SQRT2: f64 = std::f64::consts::SQRT_2;
const CRX_D_PLUS: f64 = (SQRT2 + 1.0) / (4.0 * SQRT2);
const CRX_D_MINUS: f64 = (SQRT2 - 1.0) / (4.0 * SQRT2);

/// Gradient of ⟨obs⟩ w.r.t. the requested parameter slots via the
/// parameter-shift rule. Returns a vector of length `n_slots` with entries
/// filled for requested slots (others zero). A slot shared by several gates
/// accumulates one shift-pair (or CRX quadruple) per occurrence.
pub fn grad_parameter_shift(
    circuit: &Circuit,
    params: &[f64],
    obs: &Observable,
    which_slots: &[usize],
) -> Result<Vec<f64>> {
    circuit.check_params(params)?;
    let mut grads = vec![0.0; circuit.n_slots()];
    for &slot in which_slots {
        if slot >= circuit.n_slots() {
            return Err(contract(format!("slot index {slot} out of range")));
        }
        for (gi, gate) in circuit.gates().iter().enumerate() {
            if gate.slot() != Some(slot) {
                continue;
            }
            grads[slot] += match gate.kind {
                GateKind::Rx | GateKind::Ry | GateKind::Rz => {
                    let plus = shifted_expectation(circuit, params, obs, gi, PI_2)?;
                    let minus = shifted_expectation(circuit, params, obs, gi, -PI_2)?;
                    (plus - minus) / 2.0
                }
                GateKind::Crx => {
                    let p1 = shifted_expectation(circuit, params, obs, gi, PI_2)?;
                    let m1 = shifted_expectation(circuit, params, obs, gi, -PI_2)?;
                    let p3 = shifted_expectation(circuit, params, obs, gi, 3.0 * PI_2)?;
                    let m3 = shifted_expectation(circuit, params, obs, gi, -3.0 * PI_2)?;
                    CRX_D_PLUS * (p1 - m1) - CRX_D_MINUS * (p3 - m3)
                }
                GateKind::Cx => unreachable!("CX carries no slot"),
            };
        }
    }
    Ok(grads)
}

const PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// Expectation with gate `shift_idx`'s angle shifted by `delta` (that
/// occurrence only; other gates sharing the slot keep the base angle).
fn shifted_expectation(
    circuit: &Circuit,
    params: &[f64],
    obs: &Observable,
    shift_idx: usize,
    delta: f64,
) -> Result<f64> {
    let mut sv = StateVector::zero(circuit.n_qubits())?;
    for (gi, gate) in circuit.gates().iter().enumerate() {
        let angle_override = if gi == shift_idx {
            Some(circuit.angle_of(gate, params) + delta)
        } else {
            None
        };
        apply(&mut sv, circuit, gate, params, angle_override)?;
    }
    expectation(&sv, obs)
}

/// Adjoint-mode gradient for a single Pauli observable; all slots, one
/// reverse sweep, O(|gates|) state passes.
pub fn grad_adjoint(circuit: &Circuit, params: &[f64], obs: &Observable) -> Result<Vec<f64>> {
    grad_adjoint_weighted(circuit, params, &[(1.0, *obs)])
}

/// Adjoint-mode gradient of Σ_i c_i·⟨P_i⟩ (weighted Hermitian sum). Used to
/// chain several observables on one state in a single sweep.
pub fn grad_adjoint_weighted(
    circuit: &Circuit,
    params: &[f64],
    terms: &[(f64, Observable)],
) -> Result<Vec<f64>> {
    let final_state = run(circuit, params)?;
    grad_adjoint_cached(circuit, params, &final_state, terms)
}

/// Adjoint sweep reusing an already-computed final state (must equal
/// `run(circuit, params)`).
pub fn grad_adjoint_cached(
    circuit: &Circuit,
    params: &[f64],
    final_state: &StateVector,
    terms: &[(f64, Observable)],
) -> Result<Vec<f64>> {
    circuit.check_params(params)?;
    if final_state.n_qubits() != circuit.n_qubits() {
        return Err(contract("final state qubit count differs from circuit"));
    }
    let mut psi = final_state.clone();
    let mut phi = apply_weighted_paulis(final_state, terms)?;
    let mut grads = vec![0.0; circuit.n_slots()];

    for gate in circuit.gates().iter().rev() {
        let angle = circuit.angle_of(gate, params);
        let g = sweep_gate(phi.amplitudes_mut(), psi.amplitudes_mut(), gate, angle);
        if let Some(slot) = gate.slot() {
            grads[slot] += g;
        }
    }
    Ok(grads)
}

/// φ = Σ c_i·P_i|ψ⟩ for single-qubit Paulis P_i.
fn apply_weighted_paulis(state: &StateVector, terms: &[(f64, Observable)]) -> Result<StateVector> {
    let n = state.n_qubits();
    let src = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for &(coef, obs) in terms {
        if obs.target >= n {
            return Err(contract(format!("observable target {} out of range", obs.target)));
        }
        let bit = 1usize << obs.target;
        match obs.pauli {
            Pauli::X => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += coef * src[i ^ bit];
                }
            }
            Pauli::Y => {
                // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩.
                for (i, o) in out.iter_mut().enumerate() {
                    let partner = src[i ^ bit];
                    let rotated = if i & bit == 0 {
                        Complex64::new(partner.im, -partner.re) // -i · partner
                    } else {
                        Complex64::new(-partner.im, partner.re) // +i · partner
                    };
                    *o += coef * rotated;
                }
            }
            Pauli::Z => {
                for (i, o) in out.iter_mut().enumerate() {
                    let sign = if i & bit == 0 { coef } else { -coef };
                    *o += sign * src[i];
                }
            }
        }
    }
    StateVector::from_amplitudes_unchecked(n, out)
}

/// One reverse-sweep step, fused into a single pass over both arrays: the
/// occurrence gradient read off the pre-rewind pair values, then ψ and φ
/// rewound in place by U†. Returns 2·Re⟨φ|∂U·U†|ψ⟩ (0 for CX).
///
/// For every gate here ∂U·U† = −i·G/2 with a constant generator G (X, Y, Z,
/// or X restricted to the control-set subspace), so the gradient term is
/// Im⟨φ|G|ψ⟩ and needs no trigonometry of its own.
fn sweep_gate(phi: &mut [Complex64], psi: &mut [Complex64], gate: &GateOp, angle: f64) -> f64 {
    let (s, c) = (angle / 2.0).sin_cos();
    let step = 1usize << gate.target;
    let mut acc = 0.0;
    match gate.kind {
        GateKind::Ry => for_pairs2(phi, psi, step, |pa, pb, xa, xb| {
            acc += pb.re * xa.re + pb.im * xa.im - pa.re * xb.re - pa.im * xb.im;
            ry_rewind(pa, pb, s, c);
            ry_rewind(xa, xb, s, c);
        }),
        GateKind::Rx => for_pairs2(phi, psi, step, |pa, pb, xa, xb| {
            acc += rx_grad(pa, pb, xa, xb);
            rx_rewind(pa, pb, s, c);
            rx_rewind(xa, xb, s, c);
        }),
        GateKind::Rz => {
            // Diagonal: no pair coupling, so run two constant-sign strips per
            // block instead of strided pair access.
            let mut base = 0;
            while base < phi.len() {
                for (p, x) in phi[base..base + step].iter_mut().zip(&mut psi[base..base + step]) {
                    acc += p.re * x.im - p.im * x.re;
                    let (op, ox) = (*p, *x);
                    *p = Complex64::new(c * op.re - s * op.im, c * op.im + s * op.re);
                    *x = Complex64::new(c * ox.re - s * ox.im, c * ox.im + s * ox.re);
                }
                let (lo, hi) = (base + step, base + 2 * step);
                for (p, x) in phi[lo..hi].iter_mut().zip(&mut psi[lo..hi]) {
                    acc -= p.re * x.im - p.im * x.re;
                    let (op, ox) = (*p, *x);
                    *p = Complex64::new(c * op.re + s * op.im, c * op.im - s * op.re);
                    *x = Complex64::new(c * ox.re + s * ox.im, c * ox.im - s * ox.re);
                }
                base += 2 * step;
            }
        }
        GateKind::Crx => {
            let cmask = 1usize << gate.control.unwrap();
            for_controlled_pairs2(phi, psi, cmask, step, |pa, pb, xa, xb| {
                acc += rx_grad(pa, pb, xa, xb);
                rx_rewind(pa, pb, s, c);
                rx_rewind(xa, xb, s, c);
            });
        }
        GateKind::Cx => {
            let cmask = 1usize << gate.control.unwrap();
            for_controlled_pairs2(phi, psi, cmask, step, |pa, pb, xa, xb| {
                std::mem::swap(pa, pb);
                std::mem::swap(xa, xb);
            });
        }
    }
    acc
}

/// Im(conj(pa)·xb + conj(pb)·xa): the ⟨φ|X|ψ⟩ pair term.
#[inline]
fn rx_grad(pa: &Complex64, pb: &Complex64, xa: &Complex64, xb: &Complex64) -> f64 {
    pa.re * xb.im - pa.im * xb.re + pb.re * xa.im - pb.im * xa.re
}

/// RY(θ)† = [[c, s], [−s, c]], c = cos(θ/2), s = sin(θ/2).
#[inline]
fn ry_rewind(a: &mut Complex64, b: &mut Complex64, s: f64, c: f64) {
    let (oa, ob) = (*a, *b);
    *a = Complex64::new(c * oa.re + s * ob.re, c * oa.im + s * ob.im);
    *b = Complex64::new(c * ob.re - s * oa.re, c * ob.im - s * oa.im);
}

/// RX(θ)† = [[c, i·s], [i·s, c]].
#[inline]
fn rx_rewind(a: &mut Complex64, b: &mut Complex64, s: f64, c: f64) {
    let (oa, ob) = (*a, *b);
    *a = Complex64::new(c * oa.re - s * ob.im, c * oa.im + s * ob.re);
    *b = Complex64::new(c * ob.re - s * oa.im, c * ob.im + s * oa.re);
}

/// Pair iteration over two same-length arrays: f(pa, pb, xa, xb) for every
/// (i, i+step) pair, where p* come from `phi` and x* from `psi`.
#[inline]
fn for_pairs2(
    phi: &mut [Complex64],
    psi: &mut [Complex64],
    step: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64, &mut Complex64, &mut Complex64),
) {
    debug_assert_eq!(phi.len(), psi.len());
    if step == 1 {
        for (pp, xx) in phi.chunks_exact_mut(2).zip(psi.chunks_exact_mut(2)) {
            let (pa, pb) = pp.split_at_mut(1);
            let (xa, xb) = xx.split_at_mut(1);
            f(&mut pa[0], &mut pb[0], &mut xa[0], &mut xb[0]);
        }
        return;
    }
    let mut base = 0;
    while base < phi.len() {
        let (plo, phi_rest) = phi[base..].split_at_mut(step);
        let (xlo, xhi) = psi[base..].split_at_mut(step);
        for (((pa, pb), xa), xb) in plo
            .iter_mut()
            .zip(&mut phi_rest[..step])
            .zip(xlo.iter_mut())
            .zip(&mut xhi[..step])
        {
            f(pa, pb, xa, xb);
        }
        base += 2 * step;
    }
}

/// Like `for_pairs2` but restricted to pairs whose control bit is set. The
/// control bit is never the target bit, so blocks of 2·step indices are
/// either wholly selected (control above the pair stride) or filtered
/// per-element (control below it).
#[inline]
fn for_controlled_pairs2(
    phi: &mut [Complex64],
    psi: &mut [Complex64],
    cmask: usize,
    step: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64, &mut Complex64, &mut Complex64),
) {
    debug_assert_eq!(phi.len(), psi.len());
    let mut base = 0;
    while base < phi.len() {
        if cmask >= 2 * step {
            if base & cmask == 0 {
                base += 2 * step;
                continue;
            }
            let (plo, phi_rest) = phi[base..].split_at_mut(step);
            let (xlo, xhi) = psi[base..].split_at_mut(step);
            for (((pa, pb), xa), xb) in plo
                .iter_mut()
                .zip(&mut phi_rest[..step])
                .zip(xlo.iter_mut())
                .zip(&mut xhi[..step])
            {
                f(pa, pb, xa, xb);
            }
        } else {
            let (plo, phi_rest) = phi[base..].split_at_mut(step);
            let (xlo, xhi) = psi[base..].split_at_mut(step);
            for (i, (((pa, pb), xa), xb)) in plo
                .iter_mut()
                .zip(&mut phi_rest[..step])
                .zip(xlo.iter_mut())
                .zip(&mut xhi[..step])
                .enumerate()
            {
                if (base + i) & cmask != 0 {
                    f(pa, pb, xa, xb);
                }
            }
        }
        base += 2 * step;
    }
}
