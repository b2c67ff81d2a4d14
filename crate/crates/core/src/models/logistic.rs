use serde::{Deserialize, Serialize};

use super::{dot, Dataset, PosteriorModel};

/// Bayesian logistic regression with an isotropic Gaussian prior
/// `w ~ N(0, prior_variance I)` and labels in `{-1, +1}`:
/// `E_i(w) = sum_{(x,y) in shard} log(1 + exp(-y <x, w>)) + ||w||^2 / (2 n v)`.
/// Prior normalizing constants are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub prior_variance: f64,
    shards: Vec<Dataset>,
}

impl LogisticRegression {
    pub const DEFAULT_PRIOR_VARIANCE: f64 = 10.0;

    pub fn new(shards: Vec<Dataset>, prior_variance: f64) -> Self {
        assert!(!shards.is_empty(), "at least one shard is required");
        assert!(prior_variance > 0.0, "prior variance must be positive");
        let dim = shards[0].dim();
        assert!(shards.iter().all(|s| s.dim() == dim), "shards disagree on dimension");
        Self {
            prior_variance,
            shards,
        }
    }

    pub fn shards(&self) -> &[Dataset] {
        &self.shards
    }

    fn nll(data: &Dataset, w: &[f64]) -> f64 {
        data.rows().map(|(x, y)| softplus(-y * dot(x, w))).sum()
    }

    fn add_nll_grad(data: &Dataset, w: &[f64], out: &mut [f64]) {
        for (x, y) in data.rows() {
            let coef = -y * sigmoid(-y * dot(x, w));
            for (o, xi) in out.iter_mut().zip(x) {
                *o += coef * xi;
            }
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl PosteriorModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.shards[0].dim()
    }

    fn n_agents(&self) -> usize {
        self.shards.len()
    }

    fn shard_len(&self, agent: usize) -> usize {
        self.shards[agent].len()
    }

    fn energy_i(&self, agent: usize, w: &[f64]) -> f64 {
        Self::nll(&self.shards[agent], w) + self.neg_log_prior(w) / self.n_agents() as f64
    }

    fn grad_energy_i_into(&self, agent: usize, w: &[f64], out: &mut [f64]) {
        let scale = 1.0 / (self.n_agents() as f64 * self.prior_variance);
        for (o, wi) in out.iter_mut().zip(w) {
            *o = scale * wi;
        }
        Self::add_nll_grad(&self.shards[agent], w, out);
    }

    fn neg_log_prior(&self, w: &[f64]) -> f64 {
        dot(w, w) / (2.0 * self.prior_variance)
    }

    fn grad_neg_log_prior_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = wi / self.prior_variance;
        }
    }

    fn full_energy(&self, w: &[f64]) -> f64 {
        let nll: f64 = self
            .shards
            .iter()
            .flat_map(|s| s.rows())
            .map(|(x, y)| softplus(-y * dot(x, w)))
            .sum();
        nll + self.neg_log_prior(w)
    }

    fn full_grad_into(&self, w: &[f64], out: &mut [f64]) {
        self.grad_neg_log_prior_into(w, out);
        for shard in &self.shards {
            Self::add_nll_grad(shard, w, out);
        }
    }
}
