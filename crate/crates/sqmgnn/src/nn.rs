//! Dense feed-forward networks with reverse-mode gradients, plus Adam.
//! Serves as the readout head of the quantum model and as the building block
//! of the classical message-passing baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully-connected network. Layer `l` maps `dims[l]` to `dims[l+1]` through
/// a row-major weight matrix, a bias vector, and `acts[l]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseNet {
    dims: Vec<usize>,
    acts: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Cached forward context: the input to every layer and the pre-activation
/// of every layer, exactly what backward needs.
#[derive(Debug, Clone)]
pub struct Tape {
    layer_inputs: Vec<Vec<f64>>,
    pre_acts: Vec<Vec<f64>>,
}

impl DenseNet {
    /// Zero-initialized net; call [`DenseNet::init_uniform`] for training.
    pub fn new(dims: Vec<usize>, acts: Vec<Activation>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(contract("dense net needs at least an input and an output layer"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(contract("zero-width dense layer"));
        }
        if acts.len() != dims.len() - 1 {
            return Err(contract(format!(
                "expected {} activations for {} dims, got {}",
                dims.len() - 1,
                dims.len(),
                acts.len()
            )));
        }
        let weights = (0..dims.len() - 1).map(|l| vec![0.0; dims[l + 1] * dims[l]]).collect();
        let biases = (0..dims.len() - 1).map(|l| vec![0.0; dims[l + 1]]).collect();
        Ok(DenseNet { dims, acts, weights, biases })
    }

    /// Symmetric uniform init, W ~ U(±√(6/(d_in+d_out))), biases zero.
    pub fn init_uniform(&mut self, rng: &mut impl Rng) {
        for l in 0..self.weights.len() {
            let bound = (6.0 / (self.dims[l] + self.dims[l + 1]) as f64).sqrt();
            for w in &mut self.weights[l] {
                *w = rng.gen_range(-bound..bound);
            }
            for b in &mut self.biases[l] {
                *b = 0.0;
            }
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn acts(&self) -> &[Activation] {
        &self.acts
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        (0..self.weights.len()).map(|l| self.dims[l] * self.dims[l + 1] + self.dims[l + 1]).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        if x.len() != self.dims[0] {
            return Err(contract(format!(
                "input length {} does not match input dim {}",
                x.len(),
                self.dims[0]
            )));
        }
        let mut layer_inputs = Vec::with_capacity(self.weights.len());
        let mut pre_acts = Vec::with_capacity(self.weights.len());
        let mut cur = x.to_vec();
        for l in 0..self.weights.len() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let mut z = self.biases[l].clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &self.weights[l][r * din..(r + 1) * din];
                *zr += row.iter().zip(&cur).map(|(w, xi)| w * xi).sum::<f64>();
            }
            layer_inputs.push(cur);
            let out: Vec<f64> = z.iter().map(|&v| self.acts[l].apply(v)).collect();
            pre_acts.push(z);
            cur = out;
            debug_assert_eq!(cur.len(), dout);
        }
        Ok((cur, Tape { layer_inputs, pre_acts }))
    }

    /// Reverse pass. Returns gradients flattened in [`DenseNet::params_flat`]
    /// order and the gradient w.r.t. the input vector.
    pub fn backward(&self, tape: &Tape, dl_dy: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if tape.layer_inputs.len() != self.weights.len()
            || tape
                .pre_acts
                .iter()
                .enumerate()
                .any(|(l, z)| z.len() != self.dims[l + 1])
            || tape
                .layer_inputs
                .iter()
                .enumerate()
                .any(|(l, x)| x.len() != self.dims[l])
        {
            return Err(contract("tape does not match this net's shape"));
        }
        if dl_dy.len() != self.output_dim() {
            return Err(contract("upstream gradient length mismatch"));
        }

        let mut flat = vec![0.0; self.param_count()];
        let mut offsets = Vec::with_capacity(self.weights.len());
        let mut off = 0;
        for l in 0..self.weights.len() {
            offsets.push(off);
            off += self.dims[l] * self.dims[l + 1] + self.dims[l + 1];
        }

        let mut delta = dl_dy.to_vec();
        for l in (0..self.weights.len()).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let z = &tape.pre_acts[l];
            let xin = &tape.layer_inputs[l];
            // δ_pre = δ ⊙ act'(z)
            let mut dpre = vec![0.0; dout];
            for r in 0..dout {
                dpre[r] = delta[r] * self.acts[l].deriv(z[r]);
            }
            let wslot = &mut flat[offsets[l]..offsets[l] + din * dout + dout];
            for r in 0..dout {
                for c in 0..din {
                    wslot[r * din + c] = dpre[r] * xin[c];
                }
                wslot[din * dout + r] = dpre[r];
            }
            let mut dx = vec![0.0; din];
            for r in 0..dout {
                let row = &self.weights[l][r * din..(r + 1) * din];
                for (dxc, w) in dx.iter_mut().zip(row) {
                    *dxc += dpre[r] * w;
                }
            }
            delta = dx;
        }
        Ok((flat, delta))
    }

    /// Parameters as one vector: per layer, weights row-major then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let mut off = 0;
        for l in 0..self.weights.len() {
            let nw = self.weights[l].len();
            self.weights[l].copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = self.biases[l].len();
            self.biases[l].copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

/// Adam with bias correction; one instance per flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(contract("optimizer state does not match parameter count"));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
        Ok(())
    }
}
