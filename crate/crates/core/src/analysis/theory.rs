//! Closed-form constants of the consensus bound, the recursive-sequence
//! bound behind it, the step-size and fusion-weight conditions, and the KL
//! convergence bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::SamplerConfig;
use crate::topology::{activation_probabilities, expected_laplacian, Graph};

/// Smallest `t >= max{0, ceil(delta/|ln sigma| - 1)}` with
/// `|ln sigma| - delta/(t+1) > 0`, from where `sigma^{k-t} / (t+1)^delta`
/// is strictly increasing in `t`.
pub fn recursion_t_bar(sigma: f64, delta: f64) -> u64 {
    let rate = sigma.ln().abs();
    let mut t = (delta / rate - 1.0).ceil().max(0.0) as u64;
    while rate - delta / (t + 1) as f64 <= 0.0 {
        t += 1;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionBound {
    /// Bound on `y_{k+1}`.
    pub value: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub t_bar: u64,
}

/// Bound `W1 sigma^{k+1} + W2/(k+1)^delta + W3` on the sequence
/// `y_{k+1} <= sigma y_k + mu_xi/(k+1)^delta + c`, with
///
/// * `W1 = y0 + mu_xi sum_{t<t_bar} sigma^{-(t+1)} / (t+1)^delta`
/// * `W2 = mu_xi / (sigma (|ln sigma| - delta/(t_bar+1)))`
/// * `W3 = c / (1 - sigma)`
pub fn recursion_bound(sigma: f64, delta: f64, mu_xi: f64, c: f64, y0: f64, k: u64) -> Result<RecursionBound> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if !(mu_xi > 0.0 && mu_xi.is_finite()) {
        return Err(Error::param("mu_xi", format!("must be positive, got {mu_xi}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("must be positive, got {c}")));
    }
    if !(y0 >= 0.0 && y0.is_finite()) {
        return Err(Error::param("y0", format!("must be non-negative, got {y0}")));
    }
    let t_bar = recursion_t_bar(sigma, delta);
    let head: f64 = (0..t_bar)
        .map(|t| sigma.powf(-((t + 1) as f64)) / ((t + 1) as f64).powf(delta))
        .sum();
    let w1 = y0 + mu_xi * head;
    let gap = sigma.ln().abs() - delta / (t_bar + 1) as f64;
    let w2 = mu_xi / (sigma * gap);
    let w3 = c / (1.0 - sigma);
    let value = w1 * sigma.powf((k + 1) as f64) + w2 / ((k + 1) as f64).powf(delta) + w3;
    Ok(RecursionBound {
        value,
        w1,
        w2,
        w3,
        t_bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub cond1: bool,
    pub cond2: bool,
    /// `8 alpha^3 L_bar^4 / (1 - exp(-alpha rho_U)) - rho_U`; negative when satisfied.
    pub margin1: f64,
    /// `beta (1 - beta) - 1 / (2 lambda_{n-1})`; negative when satisfied.
    pub margin2: f64,
}

pub fn check_conditions(alpha: f64, rho_u: f64, l_bar: f64, beta: f64, lambda_n_minus_1: f64) -> Result<ConditionReport> {
    for (name, v) in [("alpha", alpha), ("rho_U", rho_u), ("L_bar", l_bar), ("lambda_n_minus_1", lambda_n_minus_1)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
    }
    let lhs1 = 8.0 * alpha.powi(3) * l_bar.powi(4) / -(-alpha * rho_u).exp_m1();
    let margin1 = lhs1 - rho_u;
    let margin2 = beta * (1.0 - beta) - 1.0 / (2.0 * lambda_n_minus_1);
    Ok(ConditionReport {
        cond1: margin1 < 0.0,
        cond2: margin2 < 0.0,
        margin1,
        margin2,
    })
}

/// Everything the consensus-bound constants depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub d_w: usize,
    /// `min_i p_i`.
    pub p_m: f64,
    /// `max_i mu_i / (2n)^{delta_e}`.
    pub mu_e: f64,
    /// `min_i delta_i`.
    pub delta_e: f64,
    /// Bound on the squared local gradient norm.
    pub mu_g: f64,
    /// `E ||w_tilde(0)||^2`.
    pub initial_consensus_error: f64,
    pub lambda_n_minus_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// `1 - 2 beta (1 - beta) lambda_{n-1}`.
    pub lambda: f64,
    pub sqrt_lambda: f64,
    pub t_bar: u64,
    /// Coefficient of the decaying trigger term, `2 beta^2 n mu_e / (1 - sqrt(lambda))`.
    pub mu_xi: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub inputs: TheoryInputs,
}

impl TheoryConstants {
    pub fn from_inputs(inputs: TheoryInputs) -> Result<Self> {
        let TheoryInputs {
            alpha,
            beta,
            n,
            d_w,
            p_m,
            mu_e,
            delta_e,
            mu_g,
            initial_consensus_error,
            lambda_n_minus_1,
        } = inputs;
        let lhs = beta * (1.0 - beta);
        let rhs = 1.0 / (2.0 * lambda_n_minus_1);
        if !(beta > 0.0 && beta < 1.0) || !(lhs < rhs) || !(lambda_n_minus_1 > 0.0) {
            return Err(Error::Condition {
                beta,
                lambda_n_minus_1,
                lhs,
                rhs,
            });
        }
        if !(alpha > 0.0) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        if !(mu_e > 0.0 && mu_e.is_finite()) {
            return Err(Error::param("mu_e", format!("must be positive and finite, got {mu_e}")));
        }
        if !(delta_e > 0.0 && delta_e < 1.0) {
            return Err(Error::param("delta_e", format!("must lie in (0, 1), got {delta_e}")));
        }
        if !(mu_g >= 0.0 && mu_g.is_finite()) {
            return Err(Error::param("mu_g", format!("must be non-negative, got {mu_g}")));
        }
        if !(p_m > 0.0 && p_m <= 1.0) {
            return Err(Error::param("p_m", format!("must lie in (0, 1], got {p_m}")));
        }
        let lambda = 1.0 - 2.0 * lhs * lambda_n_minus_1;
        let sqrt_lambda = lambda.sqrt();
        let n_f = n as f64;
        let mu_xi = 2.0 * beta * beta * n_f * mu_e / (1.0 - sqrt_lambda);
        let c = 2.0 * alpha * n_f * n_f * (alpha * mu_g / (4.0 * p_m * p_m) + 2.0 * d_w as f64) / (1.0 - sqrt_lambda);
        let rb = recursion_bound(sqrt_lambda, delta_e, mu_xi, c, initial_consensus_error, 0)?;
        Ok(Self {
            lambda,
            sqrt_lambda,
            t_bar: rb.t_bar,
            mu_xi,
            y1: rb.w1,
            y2: rb.w2,
            y3: rb.w3,
            inputs,
        })
    }

    /// Bound on `E ||w_tilde(k)||^2`: `Y1 sqrt(lambda)^k + Y2 / k^delta_e + Y3`
    /// (the `k = 0` value uses `k = 1` in the middle term).
    pub fn envelope(&self, k: u64) -> f64 {
        self.y1 * self.sqrt_lambda.powf(k as f64)
            + self.y2 / (k.max(1) as f64).powf(self.inputs.delta_e)
            + self.y3
    }
}

/// Constants of the consensus bound for `graph` under `cfg`.
pub fn theory_constants(
    graph: &Graph,
    cfg: &SamplerConfig,
    d_w: usize,
    mu_g: f64,
    initial_consensus_error: f64,
) -> Result<TheoryConstants> {
    let n = graph.n();
    let delta_e = cfg.trigger.min_delta();
    let mu_e = cfg.trigger.max_mu() / (2.0 * n as f64).powf(delta_e);
    TheoryConstants::from_inputs(TheoryInputs {
        alpha: cfg.alpha,
        beta: cfg.beta,
        n,
        d_w,
        p_m: activation_probabilities(graph).p_min,
        mu_e,
        delta_e,
        mu_g,
        initial_consensus_error,
        lambda_n_minus_1: expected_laplacian(graph).lambda_n_minus_1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlBoundInputs {
    /// Log-Sobolev constant of the target.
    pub rho_u: f64,
    /// Second-moment bound of the gossip gradient noise.
    pub c_xi: f64,
    /// Second-moment bound of the average sample.
    pub c_wbar: f64,
    /// Largest local Lipschitz constant.
    pub l: f64,
    /// Lipschitz constant of the full energy.
    pub l_bar: f64,
    /// KL divergence at the start.
    pub f0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KlCase {
    /// `alpha rho_U + ln sqrt(lambda) < 0`: the KL contraction is the slower rate.
    Case1,
    /// `alpha rho_U + ln sqrt(lambda) > 0`: consensus is the slower rate.
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlBound {
    pub case: KlCase,
    pub value: f64,
    pub bias: f64,
    pub nu: f64,
    /// `3 alpha^3 L^2 L_bar^2 / (2 p_m) + alpha L^2 / p_m`.
    pub kappa: f64,
    /// Coefficient of the geometric transient (without its decay factor).
    pub y1_bar: f64,
    pub y2_bar: f64,
    pub k2_bar: u64,
}

/// KL bound on the average-sample law after `k + 1` ticks.
pub fn evaluate_kl_bound(inputs: &KlBoundInputs, constants: &TheoryConstants, k: u64) -> Result<KlBound> {
    let KlBoundInputs {
        rho_u,
        c_xi,
        c_wbar,
        l,
        l_bar,
        f0,
    } = *inputs;
    for (name, v) in [("rho_U", rho_u), ("C_xi", c_xi), ("C_wbar", c_wbar), ("L", l), ("L_bar", l_bar)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    if !(f0 >= 0.0 && f0.is_finite()) {
        return Err(Error::param("F0", format!("must be non-negative, got {f0}")));
    }
    let TheoryInputs {
        alpha,
        p_m,
        delta_e,
        d_w,
        ..
    } = constants.inputs;
    let ar = alpha * rho_u;
    let s = ar + constants.sqrt_lambda.ln();
    if s == 0.0 {
        return Err(Error::DegenerateCase);
    }
    let kappa = 3.0 * alpha.powi(3) * l * l * l_bar * l_bar / (2.0 * p_m) + alpha * l * l / p_m;

    let rate = ar;
    let mut t2 = (delta_e / rate - 1.0).ceil().max(0.0) as u64;
    while rate - delta_e / (t2 + 1) as f64 <= 0.0 {
        t2 += 1;
    }
    let k2_bar = t2 + 1;
    let y2_bar = kappa * constants.y2 / (rate - delta_e / k2_bar as f64);

    let (case, y1_bar, transient) = if s < 0.0 {
        let y1_bar = (1.0 - 1.0 / s) * kappa * constants.y1;
        (KlCase::Case1, y1_bar, y1_bar * (-ar * k as f64).exp())
    } else {
        let y1_bar = (1.0 + 1.0 / s) * kappa * constants.y1;
        (
            KlCase::Case2,
            y1_bar,
            y1_bar * constants.sqrt_lambda.powf((k + 1) as f64),
        )
    };

    let lb2 = l_bar * l_bar;
    let nu = 3.0 * alpha.powi(3) * lb2 * (c_xi + lb2 * c_wbar)
        + 2.0 * alpha * (c_xi + alpha * lb2 * d_w as f64)
        + kappa * constants.y3;
    let bias = nu / -(-ar).exp_m1();
    let value = (-ar * (k + 1) as f64).exp() * f0 + transient + y2_bar / ((k + 1) as f64).powf(delta_e) + bias;
    Ok(KlBound {
        case,
        value,
        bias,
        nu,
        kappa,
        y1_bar,
        y2_bar,
        k2_bar,
    })
}
