use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PosteriorModel;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Two-component Gaussian mixture with tied means:
/// `theta1 ~ N(0, s1)`, `theta2 ~ N(0, s2)`,
/// `x ~ 1/2 N(theta1, sx) + 1/2 N(theta1 + theta2, sx)`, with `w = [theta1, theta2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub prior_var: [f64; 2],
    pub obs_var: f64,
    shards: Vec<Vec<f64>>,
}

impl GaussianMixture {
    pub const PRIOR_VAR: [f64; 2] = [10.0, 1.0];
    pub const OBS_VAR: f64 = 2.0;

    pub fn new(shards: Vec<Vec<f64>>) -> Self {
        Self::with_params(shards, Self::PRIOR_VAR, Self::OBS_VAR)
    }

    pub fn with_params(shards: Vec<Vec<f64>>, prior_var: [f64; 2], obs_var: f64) -> Self {
        assert!(!shards.is_empty(), "at least one shard is required");
        Self {
            prior_var,
            obs_var,
            shards,
        }
    }

    pub fn shards(&self) -> &[Vec<f64>] {
        &self.shards
    }

    /// `-sum_x log p(x | w)` over `data`.
    pub fn neg_log_likelihood(&self, data: &[f64], w: &[f64]) -> f64 {
        data.iter().map(|&x| -self.log_lik(x, w)).sum()
    }

    fn log_lik(&self, x: f64, w: &[f64]) -> f64 {
        let s = self.obs_var;
        let a = -(x - w[0]).powi(2) / (2.0 * s);
        let b = -(x - w[0] - w[1]).powi(2) / (2.0 * s);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln() - std::f64::consts::LN_2 - 0.5 * (LN_2PI + s.ln())
    }

    /// Accumulates `-grad log p(x | w)` over `data` into `out`.
    fn add_nll_grad(&self, data: &[f64], w: &[f64], out: &mut [f64]) {
        let s = self.obs_var;
        for &x in data {
            let ra = x - w[0];
            let rb = x - w[0] - w[1];
            let a = -ra * ra / (2.0 * s);
            let b = -rb * rb / (2.0 * s);
            // responsibility of the (theta1 + theta2) component
            let r = 1.0 / (1.0 + (a - b).exp());
            out[0] -= ((1.0 - r) * ra + r * rb) / s;
            out[1] -= r * rb / s;
        }
    }
}

impl PosteriorModel for GaussianMixture {
    fn dim(&self) -> usize {
        2
    }

    fn n_agents(&self) -> usize {
        self.shards.len()
    }

    fn shard_len(&self, agent: usize) -> usize {
        self.shards[agent].len()
    }

    fn energy_i(&self, agent: usize, w: &[f64]) -> f64 {
        self.neg_log_likelihood(&self.shards[agent], w) + self.neg_log_prior(w) / self.n_agents() as f64
    }

    fn grad_energy_i_into(&self, agent: usize, w: &[f64], out: &mut [f64]) {
        let n = self.n_agents() as f64;
        out[0] = w[0] / (self.prior_var[0] * n);
        out[1] = w[1] / (self.prior_var[1] * n);
        self.add_nll_grad(&self.shards[agent], w, out);
    }

    fn neg_log_prior(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(self.prior_var)
            .map(|(&t, v)| 0.5 * (t * t / v + LN_2PI + v.ln()))
            .sum()
    }

    fn grad_neg_log_prior_into(&self, w: &[f64], out: &mut [f64]) {
        out[0] = w[0] / self.prior_var[0];
        out[1] = w[1] / self.prior_var[1];
    }

    fn full_energy(&self, w: &[f64]) -> f64 {
        let pooled: Vec<f64> = self.shards.iter().flatten().copied().collect();
        self.neg_log_likelihood(&pooled, w) + self.neg_log_prior(w)
    }

    fn full_grad_into(&self, w: &[f64], out: &mut [f64]) {
        self.grad_neg_log_prior_into(w, out);
        let pooled: Vec<f64> = self.shards.iter().flatten().copied().collect();
        self.add_nll_grad(&pooled, w, out);
    }
}

/// `count` i.i.d. draws from the mixture at `(theta1, theta2)`.
pub fn gm_generate<R: Rng + ?Sized>(count: usize, theta: [f64; 2], obs_var: f64, rng: &mut R) -> Vec<f64> {
    let sd = obs_var.sqrt();
    (0..count)
        .map(|_| {
            let mean = if rng.random::<bool>() {
                theta[0] + theta[1]
            } else {
                theta[0]
            };
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        })
        .collect()
}
