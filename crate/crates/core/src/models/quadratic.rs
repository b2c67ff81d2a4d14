use serde::{Deserialize, Serialize};

use super::{dot, PosteriorModel};

/// `E_i(w) = 1/2 c_i ||w||^2` with no separate prior. The full energy is
/// `1/2 (sum c_i) ||w||^2`, i.e. a centred Gaussian with precision `sum c_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub dim: usize,
    pub precisions: Vec<f64>,
}

impl QuadraticModel {
    pub fn new(dim: usize, precisions: Vec<f64>) -> Self {
        assert!(!precisions.is_empty());
        Self { dim, precisions }
    }

    /// Standard normal target split evenly over `n_agents`.
    pub fn standard_normal(dim: usize, n_agents: usize) -> Self {
        Self::new(dim, vec![1.0 / n_agents as f64; n_agents])
    }
}

impl PosteriorModel for QuadraticModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_agents(&self) -> usize {
        self.precisions.len()
    }

    fn shard_len(&self, _agent: usize) -> usize {
        0
    }

    fn energy_i(&self, agent: usize, w: &[f64]) -> f64 {
        0.5 * self.precisions[agent] * dot(w, w)
    }

    fn grad_energy_i_into(&self, agent: usize, w: &[f64], out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = self.precisions[agent] * wi;
        }
    }

    fn neg_log_prior(&self, _w: &[f64]) -> f64 {
        0.0
    }

    fn grad_neg_log_prior_into(&self, _w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn full_energy(&self, w: &[f64]) -> f64 {
        0.5 * self.precisions.iter().sum::<f64>() * dot(w, w)
    }

    fn full_grad_into(&self, w: &[f64], out: &mut [f64]) {
        let c: f64 = self.precisions.iter().sum();
        for (o, wi) in out.iter_mut().zip(w) {
            *o = c * wi;
        }
    }
}
