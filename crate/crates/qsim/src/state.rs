use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::{QsimError, Result, MAX_QUBITS};

/// Dense statevector over `n_qubits` qubits: 2^n complex amplitudes,
/// little-endian (bit q of the index is qubit q).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(QsimError::Capacity(n_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Internal: wraps a raw amplitude vector (the adjoint engine's
    /// observable-applied vector is not norm-1, so no normalization check).
    pub(crate) fn from_amplitudes_unchecked(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(crate::contract("amplitude length does not match qubit count"));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(crate::contract(format!(
                "qubit index {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// RX(θ) = [[cos(θ/2), -i·sin(θ/2)], [-i·sin(θ/2), cos(θ/2)]]
    pub fn apply_rx(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (theta / 2.0).sin_cos();
        for_each_pair(&mut self.amps, q, |a, b| {
            let (va, vb) = (*a, *b);
            *a = Complex64::new(c * va.re + s * vb.im, c * va.im - s * vb.re);
            *b = Complex64::new(c * vb.re + s * va.im, c * vb.im - s * va.re);
        });
        Ok(())
    }

    /// RY(θ) = [[cos(θ/2), -sin(θ/2)], [sin(θ/2), cos(θ/2)]]
    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (theta / 2.0).sin_cos();
        for_each_pair(&mut self.amps, q, |a, b| {
            let (va, vb) = (*a, *b);
            *a = c * va - s * vb;
            *b = s * va + c * vb;
        });
        Ok(())
    }

    /// RZ(θ) = diag(e^{-iθ/2}, e^{iθ/2})
    pub fn apply_rz(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        // Diagonal gate: one branchless linear pass instead of strided pairs.
        let (s, c) = (theta / 2.0).sin_cos();
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            let t = if i & bit == 0 { s } else { -s };
            let va = *a;
            *a = Complex64::new(c * va.re + t * va.im, c * va.im - t * va.re);
        }
        Ok(())
    }

    /// CNOT: flips `target` where `control` is set.
    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(crate::contract("CX control equals target"));
        }
        let cbit = 1usize << control;
        for_each_controlled_pair(&mut self.amps, cbit, target, |a, b| {
            std::mem::swap(a, b);
        });
        Ok(())
    }

    /// Controlled RX: applies RX(θ) to `target` where `control` is set.
    pub fn apply_crx(&mut self, control: usize, target: usize, theta: f64) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(crate::contract("CRX control equals target"));
        }
        let (s, c) = (theta / 2.0).sin_cos();
        let cbit = 1usize << control;
        for_each_controlled_pair(&mut self.amps, cbit, target, |a, b| {
            let (va, vb) = (*a, *b);
            *a = Complex64::new(c * va.re + s * vb.im, c * va.im - s * vb.re);
            *b = Complex64::new(c * vb.re + s * va.im, c * vb.im - s * va.re);
        });
        Ok(())
    }
}

/// Visits each amplitude pair (i, i + 2^q) with bit q clear in i.
#[inline]
pub(crate) fn for_each_pair(
    amps: &mut [Complex64],
    q: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64),
) {
    let step = 1usize << q;
    if step == 1 {
        // Adjacent pairs: avoid per-block slicing on the hottest stride.
        for pair in amps.chunks_exact_mut(2) {
            let (a, b) = pair.split_at_mut(1);
            f(&mut a[0], &mut b[0]);
        }
        return;
    }
    let mut base = 0;
    while base < amps.len() {
        let (lo, hi) = amps[base..].split_at_mut(step);
        for (a, b) in lo.iter_mut().zip(&mut hi[..step]) {
            f(a, b);
        }
        base += step * 2;
    }
}

/// As `for_each_pair` over the target qubit, restricted to indices where the
/// control bit mask is set.
#[inline]
pub(crate) fn for_each_controlled_pair(
    amps: &mut [Complex64],
    control_mask: usize,
    target: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64),
) {
    let step = 1usize << target;
    let mut base = 0;
    while base < amps.len() {
        if base & control_mask != 0 {
            let (lo, hi) = amps[base..].split_at_mut(step);
            for (a, b) in lo.iter_mut().zip(&mut hi[..step]) {
                f(a, b);
            }
            base += step * 2;
        } else if control_mask < step {
            // Control bit varies inside this block; walk element-wise.
            let (lo, hi) = amps[base..].split_at_mut(step);
            for (i, (a, b)) in lo.iter_mut().zip(&mut hi[..step]).enumerate() {
                if (base + i) & control_mask != 0 {
                    f(a, b);
                }
            }
            base += step * 2;
        } else {
            base += step * 2;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Single-qubit Pauli observable; expectations lie in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observable {
    pub pauli: Pauli,
    pub target: usize,
}

impl Observable {
    pub fn new(pauli: Pauli, target: usize) -> Self {
        Observable { pauli, target }
    }
}

/// Exact (infinite-shot) expectation ⟨ψ|P|ψ⟩.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    if obs.target >= state.n_qubits() {
        return Err(crate::contract(format!(
            "observable target {} out of range for {} qubits",
            obs.target,
            state.n_qubits()
        )));
    }
    let amps = state.amplitudes();
    let bit = 1usize << obs.target;
    let value = match obs.pauli {
        Pauli::Z => amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let sign = if i & bit == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum(),
        // ⟨X⟩ = 2·Σ Re(conj(a_0)·a_1), ⟨Y⟩ = 2·Σ Im(conj(a_0)·a_1) over pairs.
        Pauli::X | Pauli::Y => {
            let step = bit;
            let mut acc = 0.0;
            let mut base = 0;
            while base < amps.len() {
                for i in base..base + step {
                    let z = amps[i].conj() * amps[i + step];
                    acc += match obs.pauli {
                        Pauli::X => z.re,
                        _ => z.im,
                    };
                }
                base += step * 2;
            }
            2.0 * acc
        }
    };
    Ok(value)
}

/// Finite-shot estimate of ⟨P⟩: draws `shots` eigenvalue samples from the
/// exact outcome distribution and averages them. Accounting/realism mode
/// only; gradients and defaults use `expectation`.
pub fn expectation_sampled(
    state: &StateVector,
    obs: &Observable,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(crate::contract("shots must be positive"));
    }
    let exact = expectation(state, obs)?;
    let p_plus = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p_plus)
        .map_err(|e| crate::contract(format!("invalid binomial: {e}")))?;
    let plus = dist.sample(rng);
    Ok((2.0 * plus as f64 - shots as f64) / shots as f64)
}
