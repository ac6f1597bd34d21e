//! Quantum message-passing GNN for D2D power control.
//!
//! The pipeline: a D2D interference network becomes a complete weighted graph
//! ([`graph::WirelessGraph`]); each node runs a fixed-width quantum circuit
//! over a k-sampled star subgraph ([`qgcl`]); stacked layers plus a dense
//! readout form the full model ([`model::SqmGnnModel`]), trained against the
//! negative sum-rate ([`d2d`]) with WMMSE as the benchmark ([`train`]).

pub mod cfe;
pub mod d2d;
pub mod graph;
pub mod model;
pub mod nn;
pub mod qgcl;
pub mod train;

/// Crate-wide error; `category()` yields the stable one-word class used in
/// CLI diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum SqmError {
    #[error("contract: {0}")]
    Contract(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serde: {0}")]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Qsim(#[from] qsim::QsimError),
}

impl SqmError {
    pub fn category(&self) -> &'static str {
        match self {
            SqmError::Contract(_) => "contract",
            SqmError::Data(_) => "data",
            SqmError::Io(_) => "io",
            SqmError::Serde(_) => "serde",
            SqmError::Qsim(_) => "simulator",
        }
    }
}

pub type Result<T> = std::result::Result<T, SqmError>;

pub fn contract(msg: impl Into<String>) -> SqmError {
    SqmError::Contract(msg.into())
}

pub fn data_err(msg: impl Into<String>) -> SqmError {
    SqmError::Data(msg.into())
}

/// SplitMix64 finishing step; used to derive independent per-(epoch, sample,
/// node, layer) RNG streams from one master seed, so execution order and
/// parallelism cannot perturb results.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}
