use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gossip_ula::analysis::grid_posterior;
use gossip_ula::models::{
    empirical_lipschitz, gm_generate, partition_equal, random_in_ball, Dataset, GaussianMixture, LogisticRegression,
    PosteriorModel, QuadraticModel,
};
use gossip_ula::sampler::{
    run, step_gossip_et, step_gossip_plain, Engine, Ensemble, GaussianNoise, Network, NoiseSource, SamplerConfig,
    Staleness,
};
use gossip_ula::scheduler::{next_event, GossipEvent};
use gossip_ula::topology::{activation_probabilities, Graph};

fn gm_model(n: usize, seed: u64) -> GaussianMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = gm_generate(100, [0.0, 1.0], GaussianMixture::OBS_VAR, &mut rng);
    let shards = partition_equal(data.len(), n, &mut rng).unwrap();
    GaussianMixture::new(shards.iter().map(|idx| idx.iter().map(|&i| data[i]).collect()).collect())
}

fn logistic_model(n: usize, seed: u64) -> LogisticRegression {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shards = (0..n)
        .map(|_| {
            let rows = 15;
            let x: Vec<f64> = (0..rows * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..rows).map(|_| if rng.random_bool(0.4) { 1.0 } else { -1.0 }).collect();
            Dataset::new(3, x, y).unwrap()
        })
        .collect();
    LogisticRegression::new(shards, LogisticRegression::DEFAULT_PRIOR_VARIANCE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn activation_probabilities_sum_to_two(n in 2usize..12, extra in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::random_connected(n, extra, &mut rng).unwrap();
        let p = activation_probabilities(&g);
        prop_assert!((p.p.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        prop_assert!(p.p.iter().all(|&v| v > 0.0 && v <= 1.0));
        prop_assert!((g.edge_probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // an agent is active exactly when one of its edges is
        for i in 0..n {
            let via_edges: f64 = g.neighbors(i).iter().map(|&j| g.edge_probability(i, j)).sum();
            prop_assert!((via_edges - p.p[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn scheduler_frequencies_match_the_activation_profile() {
    let g = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (1, 2)]).unwrap();
    let p = activation_probabilities(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let total = 1_000_000u64;
    let mut active = vec![0u64; g.n()];
    let mut edges: HashMap<(usize, usize), u64> = HashMap::new();
    for k in 0..total {
        let ev = next_event(&g, k, &mut rng);
        active[ev.initiator] += 1;
        active[ev.partner] += 1;
        *edges.entry(ev.pair()).or_default() += 1;
    }
    let within = |count: u64, prob: f64| {
        let se = (prob * (1.0 - prob) / total as f64).sqrt();
        (count as f64 / total as f64 - prob).abs() < 3.0 * se
    };
    for (i, &c) in active.iter().enumerate() {
        assert!(within(c, p.p[i]), "agent {i}: {} vs {}", c as f64 / total as f64, p.p[i]);
    }
    for &(i, j) in g.edges() {
        let c = edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0);
        assert!(within(c, g.edge_probability(i, j)), "edge ({i}, {j})");
    }
    assert_eq!(edges.len(), g.edges().len());
}

#[test]
fn larger_trigger_scale_broadcasts_less() {
    let g = Graph::ring(5).unwrap();
    let model = gm_model(5, 3);
    let broadcasts = |mu: f64| -> u64 {
        let cfg = SamplerConfig::new(1e-3, 0.4, mu, 0.51, 20_000, 99);
        (0..4)
            .map(|chain| {
                let t = run(Engine::GossipEventTriggered, &model, &g, &cfg, chain).unwrap();
                t.comm.iter().map(|c| c.broadcasts).sum::<u64>()
            })
            .sum()
    };
    let counts: Vec<u64> = [0.0, 0.01, 0.1, 1.0, 10.0].into_iter().map(broadcasts).collect();
    assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
    // mu = 0 broadcasts on every activity except each agent's first, where w = w_hat
    assert_eq!(counts[0], 2 * 20_000 * 4 - 5 * 4);
}

#[test]
fn silent_agents_stay_within_the_threshold() {
    let g = Graph::star(6).unwrap();
    let model = gm_model(6, 5);
    let cfg = SamplerConfig::new(1e-3, 0.3, 0.5, 0.6, 0, 0);
    let net = Network::new(&model, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let init: Vec<Vec<f64>> = (0..6).map(|_| random_in_ball(2, 1.0, &mut rng)).collect();
    let mut ens = Ensemble::new(init, Staleness::Global);
    let mut noise = GaussianNoise(ChaCha8Rng::seed_from_u64(12));
    let (mut silent, mut sent) = (0, 0);
    for k in 0..20_000 {
        let ev = next_event(&g, k, &mut rng);
        let before: Vec<(f64, u64, u64)> = [ev.initiator, ev.partner]
            .iter()
            .map(|&a| (ens.agents[a].drift_sq(), ens.agents[a].tau, ens.agents[a].broadcasts))
            .collect();
        step_gossip_et(&mut ens, &ev, &net, &cfg, &mut noise).unwrap();
        for (&a, &(drift, tau, b)) in [ev.initiator, ev.partner].iter().zip(&before) {
            let eps = cfg.trigger.threshold(a, tau);
            if ens.agents[a].broadcasts == b {
                assert!(drift <= eps, "tick {k} agent {a}: {drift} > {eps}");
                silent += 1;
            } else {
                assert!(drift > eps);
                assert_eq!(ens.agents[a].broadcasts, b + 1);
                sent += 1;
            }
        }
    }
    assert!(silent > 0 && sent > 0);
}

/// Replays a fixed sequence of normals and keeps what it handed out.
struct Recorded {
    draws: Vec<f64>,
    rng: ChaCha8Rng,
}

impl NoiseSource for Recorded {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        GaussianNoise(&mut self.rng).fill_standard_normal(out);
        self.draws.extend_from_slice(out);
    }
}

#[test]
fn average_moves_by_weighted_gradients_and_pair_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..20 {
        let n = 3 + trial % 5;
        let g = Graph::random_connected(n, 0.4, &mut rng).unwrap();
        let model = gm_model(n, trial as u64);
        let net = Network::new(&model, &g).unwrap();
        let cfg = SamplerConfig::new(1e-2, 0.35, 0.2, 0.6, 0, 0);
        let p = activation_probabilities(&g).p;
        let mut ens = Ensemble::new((0..n).map(|_| random_in_ball(2, 2.0, &mut rng)).collect(), Staleness::Global);
        // make the last broadcasts stale so the trigger fires for some agents
        for a in &mut ens.agents {
            a.w = a.w.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        }
        for k in 0..10u64 {
            let ev: GossipEvent = next_event(&g, k, &mut rng);
            let before = ens.samples();
            let mut noise = Recorded { draws: Vec::new(), rng: ChaCha8Rng::seed_from_u64(k) };
            if k % 2 == 0 {
                step_gossip_et(&mut ens, &ev, &net, &cfg, &mut noise).unwrap();
            } else {
                step_gossip_plain(&mut ens, &ev, &net, &cfg, &mut noise).unwrap();
            }
            let after = ens.samples();
            let (i, j) = (ev.initiator, ev.partner);
            for c in 0..2 {
                let delta: f64 = (0..n).map(|a| after[a][c] - before[a][c]).sum::<f64>() / n as f64;
                let grad: f64 = [i, j]
                    .iter()
                    .map(|&a| model.grad_energy_i(a, &before[a]).unwrap()[c] / (2.0 * p[a]))
                    .sum();
                // v_a = (n / sqrt 2) z_a
                let v: f64 = [0, 1].iter().map(|&s| n as f64 / 2f64.sqrt() * noise.draws[2 * s + c]).sum();
                let expected = -cfg.alpha * grad + (2.0 * cfg.alpha).sqrt() * v / n as f64;
                assert!((delta - expected).abs() < 1e-12, "trial {trial} tick {k}: {delta} vs {expected}");
            }
        }
    }
}

#[test]
fn local_energies_sum_to_the_full_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let gm = gm_model(5, 1);
    let lr = logistic_model(4, 2);
    let quad = QuadraticModel::new(3, vec![0.5, 1.5, 2.0]);
    let models: [&dyn PosteriorModel; 3] = [&gm, &lr, &quad];
    for model in models {
        for _ in 0..20 {
            let w = random_in_ball(model.dim(), 3.0, &mut rng);
            let sum: f64 = (0..model.n_agents()).map(|a| model.energy_i(a, &w)).sum();
            let full = model.full_energy(&w);
            assert!((sum - full).abs() < 1e-9 * full.abs().max(1.0), "{sum} vs {full}");
            let grads: Vec<Vec<f64>> = (0..model.n_agents()).map(|a| model.grad_energy_i(a, &w).unwrap()).collect();
            let full_grad = model.full_grad(&w).unwrap();
            for c in 0..model.dim() {
                let s: f64 = grads.iter().map(|g| g[c]).sum();
                assert!((s - full_grad[c]).abs() < 1e-9 * full_grad[c].abs().max(1.0));
            }
        }
    }
}

#[test]
fn empirical_lipschitz_is_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let gm = gm_model(5, 4);
    let lr = logistic_model(4, 5);
    let models: [&dyn PosteriorModel; 2] = [&gm, &lr];
    for model in models {
        for a in 0..model.n_agents() {
            let l = empirical_lipschitz(model, a, 5.0, 500, &mut rng);
            assert!(l.is_finite() && l > 0.0, "agent {a}: {l}");
        }
    }
}

#[test]
fn grid_posterior_integrates_to_one() {
    let model = gm_model(5, 6);
    let grid = grid_posterior(&model, [-12.0, -6.0], [12.0, 6.0], [240, 160]).unwrap();
    let total: f64 = grid.probabilities().iter().sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    for axis in 0..2 {
        assert!((grid.marginal(axis).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn runs_with_the_same_seed_share_the_schedule() {
    let g = Graph::ring(5).unwrap();
    let model = gm_model(5, 7);
    let mut cfg = SamplerConfig::new(1e-3, 0.4, 1.0, 0.51, 500, 8);
    cfg.log_events = true;
    let a = run(Engine::GossipEventTriggered, &model, &g, &cfg, 0).unwrap();
    cfg.trigger.mu = vec![5.0];
    let b = run(Engine::GossipEventTriggered, &model, &g, &cfg, 0).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.events.as_ref().map(Vec::len), Some(500));
}
