//! Asynchronous distributed Bayesian sampling over a network.
//!
//! Pairs of agents chosen by a randomized gossip protocol run unadjusted
//! Langevin updates on their local energies and fuse their samples, sending
//! a sample to the partner only when it has drifted far enough from the last
//! one they sent (event triggering). The crate contains:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`topology`] | graphs, activation probabilities, expected Laplacian, contraction factor |
//! | [`models`] | posterior models (tied-means Gaussian mixture, logistic regression), data I/O, partitioning |
//! | [`scheduler`] | gossip event stream and activation counters |
//! | [`sampler`] | event-triggered gossip, plain gossip, synchronous, centralized and isolated Langevin engines |
//! | [`analysis`] | consensus error, bound constants, condition checks, Wasserstein distances, accuracy, comm stats |
//! | [`harness`] | experiment configs and presets, multi-chain orchestration, persistence, reports |

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}

pub mod analysis;
pub mod error;
pub mod harness;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod scheduler;
pub mod topology;

pub use error::{Error, Result};
pub use topology::Graph;
