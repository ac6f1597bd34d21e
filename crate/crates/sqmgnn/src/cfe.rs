//! Circuit-forward-evaluation (CFE) accounting.
//!
//! Every statevector execution of a node circuit counts as `shots_per_exec`
//! CFEs (shots = 1 models analytic expectations). Forward passes and
//! gradient sweeps are tallied separately; an adjoint sweep costs one
//! execution, which is what makes the training budget O(forward).

use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug)]
pub struct CfeCounter {
    shots_per_exec: u64,
    forward: AtomicU64,
    gradient: AtomicU64,
}

impl CfeCounter {
    pub fn new(shots_per_exec: u64) -> Self {
        assert!(shots_per_exec >= 1, "shots per execution must be >= 1");
        CfeCounter { shots_per_exec, forward: AtomicU64::new(0), gradient: AtomicU64::new(0) }
    }

    pub fn record_forward(&self) {
        self.forward.fetch_add(self.shots_per_exec, Ordering::Relaxed);
    }

    pub fn record_gradient(&self) {
        self.gradient.fetch_add(self.shots_per_exec, Ordering::Relaxed);
    }

    pub fn forward_count(&self) -> u64 {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn gradient_count(&self) -> u64 {
        self.gradient.load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.forward_count() + self.gradient_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_scale_with_shots() {
        let c = CfeCounter::new(3);
        c.record_forward();
        c.record_forward();
        c.record_gradient();
        assert_eq!(c.forward_count(), 6);
        assert_eq!(c.gradient_count(), 3);
        assert_eq!(c.total(), 9);
    }

    #[test]
    #[should_panic]
    fn zero_shots_rejected() {
        CfeCounter::new(0);
    }
}
