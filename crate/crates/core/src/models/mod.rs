//! Posterior models split across agents.
//!
//! Every model exposes the per-agent energy
//! `E_i(w) = -log p(X_i | w) - (1/n) log p(w)`, whose sum over agents is the
//! full-data energy `E(w) = -log p(X | w) - log p(w)` up to a constant. Each
//! model also computes the full-data energy directly over the pooled data so
//! that the split can be checked against an independent route.

mod data;
mod gaussian_mixture;
mod logistic;
mod partition;
mod quadratic;

pub use data::{load_magic_csv, stratified_split, Dataset, Standardizer};
pub use gaussian_mixture::{gm_generate, GaussianMixture};
pub use logistic::{sigmoid, LogisticRegression};
pub use partition::{partition_equal, partition_heterogeneous};
pub use quadratic::QuadraticModel;

use rand::Rng;

use crate::error::{Error, Result};

pub trait PosteriorModel: Send + Sync {
    /// Parameter dimension `d_w`.
    fn dim(&self) -> usize;

    fn n_agents(&self) -> usize;

    /// Number of observations held by `agent`.
    fn shard_len(&self, agent: usize) -> usize;

    fn energy_i(&self, agent: usize, w: &[f64]) -> f64;

    /// Writes `grad E_i(w)` into `out`. No finiteness checks.
    fn grad_energy_i_into(&self, agent: usize, w: &[f64], out: &mut [f64]);

    /// `-log p(w)` of the full prior (up to a constant).
    fn neg_log_prior(&self, w: &[f64]) -> f64;

    fn grad_neg_log_prior_into(&self, w: &[f64], out: &mut [f64]);

    /// Full-data energy evaluated over the pooled observations.
    fn full_energy(&self, w: &[f64]) -> f64;

    fn full_grad_into(&self, w: &[f64], out: &mut [f64]);

    fn grad_energy_i(&self, agent: usize, w: &[f64]) -> Result<Vec<f64>> {
        check_finite(w, "grad_energy_i")?;
        let mut out = vec![0.0; self.dim()];
        self.grad_energy_i_into(agent, w, &mut out);
        Ok(out)
    }

    fn full_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_finite(w, "full_grad")?;
        let mut out = vec![0.0; self.dim()];
        self.full_grad_into(w, &mut out);
        Ok(out)
    }

    /// Energy of agent `agent` treated as a standalone problem: its own
    /// likelihood plus the full prior.
    fn isolated_energy(&self, agent: usize, w: &[f64]) -> f64 {
        let share = 1.0 - 1.0 / self.n_agents() as f64;
        self.energy_i(agent, w) + share * self.neg_log_prior(w)
    }

    fn isolated_grad_into(&self, agent: usize, w: &[f64], out: &mut [f64]) {
        self.grad_energy_i_into(agent, w, out);
        let share = 1.0 - 1.0 / self.n_agents() as f64;
        if share > 0.0 {
            let mut prior = vec![0.0; w.len()];
            self.grad_neg_log_prior_into(w, &mut prior);
            for (o, p) in out.iter_mut().zip(prior) {
                *o += share * p;
            }
        }
    }
}

pub(crate) fn check_finite(w: &[f64], ctx: &'static str) -> Result<()> {
    if w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericDomain(ctx))
    }
}

/// Relative error of the analytic gradient of `E_i` against central
/// differences with step `h * max(1, |w_k|)` per coordinate:
/// `||g_fd - g|| / max(||g||, ||g_fd||, 1e-8)`.
pub fn gradient_check<M: PosteriorModel + ?Sized>(model: &M, agent: usize, w: &[f64], h: f64) -> f64 {
    let analytic = {
        let mut g = vec![0.0; model.dim()];
        model.grad_energy_i_into(agent, w, &mut g);
        g
    };
    let mut probe = w.to_vec();
    let numeric: Vec<f64> = (0..w.len())
        .map(|k| {
            let step = h * w[k].abs().max(1.0);
            probe[k] = w[k] + step;
            let up = model.energy_i(agent, &probe);
            probe[k] = w[k] - step;
            let down = model.energy_i(agent, &probe);
            probe[k] = w[k];
            (up - down) / (2.0 * step)
        })
        .collect();
    let diff = norm(&analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect::<Vec<_>>());
    diff / norm(&analytic).max(norm(&numeric)).max(1e-8)
}

/// Largest observed `||grad E_i(a) - grad E_i(b)|| / ||a - b||` over `pairs`
/// random pairs drawn uniformly from the ball of radius `radius`.
pub fn empirical_lipschitz<M, R>(model: &M, agent: usize, radius: f64, pairs: usize, rng: &mut R) -> f64
where
    M: PosteriorModel + ?Sized,
    R: Rng + ?Sized,
{
    let d = model.dim();
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let a = random_in_ball(d, radius, rng);
        let b = random_in_ball(d, radius, rng);
        model.grad_energy_i_into(agent, &a, &mut ga);
        model.grad_energy_i_into(agent, &b, &mut gb);
        let num = norm(&ga.iter().zip(&gb).map(|(x, y)| x - y).collect::<Vec<_>>());
        let den = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    best
}

/// Uniform draw from the `d`-ball of the given radius.
pub fn random_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let len = norm(&dir).max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    dir.into_iter().map(|v| v * r / len).collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
