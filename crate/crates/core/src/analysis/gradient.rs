//! Exact edge-enumerated moments of the gossip gradient.

use crate::error::Result;
use crate::models::PosteriorModel;
use crate::sampler::GradientWeight;
use crate::topology::{activation_probabilities, Graph};

/// Gradient estimate of one active pair at a common point `w`:
/// `sum_{i in pair} weight(p_i) grad E_i(w)`.
fn pair_gradient<M: PosteriorModel + ?Sized>(
    model: &M,
    p: &[f64],
    pair: (usize, usize),
    w: &[f64],
    weight: GradientWeight,
) -> Vec<f64> {
    let d = model.dim();
    let mut out = vec![0.0; d];
    let mut g = vec![0.0; d];
    for a in [pair.0, pair.1] {
        model.grad_energy_i_into(a, w, &mut g);
        let c = weight.weight(p[a]);
        for (o, gi) in out.iter_mut().zip(&g) {
            *o += c * gi;
        }
    }
    out
}

/// `sum_edges P(edge) sum_{i in edge} weight(p_i) grad E_i(w)`.
pub fn expected_gossip_gradient<M: PosteriorModel + ?Sized>(
    model: &M,
    graph: &Graph,
    w: &[f64],
    weight: GradientWeight,
) -> Result<Vec<f64>> {
    crate::models::check_finite(w, "expected_gossip_gradient")?;
    let p = activation_probabilities(graph).p;
    let mut out = vec![0.0; model.dim()];
    for &(i, j) in graph.edges() {
        let pe = graph.edge_probability(i, j);
        for (o, g) in out.iter_mut().zip(pair_gradient(model, &p, (i, j), w, weight)) {
            *o += pe * g;
        }
    }
    Ok(out)
}

/// Gossip gradient noise of one pair: `grad E(w) - pair gradient`.
pub fn gossip_noise<M: PosteriorModel + ?Sized>(
    model: &M,
    graph: &Graph,
    pair: (usize, usize),
    w: &[f64],
    weight: GradientWeight,
) -> Result<Vec<f64>> {
    let full = model.full_grad(w)?;
    let p = activation_probabilities(graph).p;
    Ok(full
        .iter()
        .zip(pair_gradient(model, &p, pair, w, weight))
        .map(|(a, b)| a - b)
        .collect())
}

/// Largest edge-averaged `E ||xi||^2` over the given states.
pub fn estimate_c_xi<M: PosteriorModel + ?Sized>(
    model: &M,
    graph: &Graph,
    states: &[Vec<f64>],
    weight: GradientWeight,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for w in states {
        let mut second = 0.0;
        for &(i, j) in graph.edges() {
            let xi = gossip_noise(model, graph, (i, j), w, weight)?;
            second += graph.edge_probability(i, j) * xi.iter().map(|v| v * v).sum::<f64>();
        }
        best = best.max(second);
    }
    Ok(best)
}

/// `max_{i, w} ||grad E_i(w)||^2` over the given states, used as a plug-in
/// for the squared local gradient bound.
pub fn estimate_mu_g<M: PosteriorModel + ?Sized>(model: &M, states: &[Vec<f64>]) -> f64 {
    let mut g = vec![0.0; model.dim()];
    let mut best: f64 = 0.0;
    for w in states {
        for a in 0..model.n_agents() {
            model.grad_energy_i_into(a, w, &mut g);
            best = best.max(g.iter().map(|v| v * v).sum());
        }
    }
    best
}
