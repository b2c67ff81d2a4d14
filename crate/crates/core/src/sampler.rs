//! Langevin update engines.
//!
//! * [`Engine::GossipEventTriggered`]: the active pair fuses the samples each
//!   agent last broadcast, and an agent broadcasts only when
//!   `||w_i - w_hat_i||^2 > mu_i / (tau_i + 1)^delta_i`.
//! * [`Engine::Gossip`]: the active pair exchanges current samples every tick.
//! * [`Engine::Synchronous`]: every agent fuses with all neighbours each round.
//! * [`Engine::Centralized`]: plain ULA on the pooled energy.
//! * [`Engine::Isolated`]: active agents run ULA on their own data only.
//!
//! In the gossip engines an active agent `i` moves by
//! `-beta (w_hat_i - w_hat_j) - (n alpha / (2 p_i)) grad E_i(w_i) + sqrt(2 alpha) v_i`
//! with `v_i ~ N(0, (n^2/2) I)`. Since agent `i` is active with probability
//! `p_i`, the `1/(2 p_i)` weight yields half the full gradient in expectation;
//! [`GradientWeight::Inverse`] switches to the unbiased `1/p_i` weight.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::consensus_error;
use crate::error::{Error, Result};
use crate::models::PosteriorModel;
use crate::rng::{stream, Stream, StreamRng};
use crate::scheduler::{GossipEvent, Scheduler};
use crate::topology::{activation_probabilities, ActivationProfile, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[serde(rename = "gossip-et")]
    GossipEventTriggered,
    Gossip,
    Synchronous,
    Centralized,
    Isolated,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::GossipEventTriggered => "gossip-et",
            Engine::Gossip => "gossip",
            Engine::Synchronous => "synchronous",
            Engine::Centralized => "centralized",
            Engine::Isolated => "isolated",
        }
    }

    pub fn is_asynchronous(self) -> bool {
        matches!(
            self,
            Engine::GossipEventTriggered | Engine::Gossip | Engine::Isolated
        )
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gossip-et" => Engine::GossipEventTriggered,
            "gossip" => Engine::Gossip,
            "synchronous" => Engine::Synchronous,
            "centralized" => Engine::Centralized,
            "isolated" => Engine::Isolated,
            other => return Err(Error::Config(format!("unknown engine `{other}`"))),
        })
    }
}

/// How the partner's last-broadcast sample is seen by an agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Staleness {
    /// One global last-broadcast value per agent.
    #[default]
    Global,
    /// Each agent caches the last value it actually received from each
    /// neighbour; a broadcast only reaches the current partner.
    PerNeighborCopies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub w: Vec<f64>,
    /// Last broadcast sample.
    pub w_hat: Vec<f64>,
    pub tau: u64,
    pub broadcasts: u64,
}

impl AgentState {
    pub fn new(w: Vec<f64>) -> Self {
        Self {
            w_hat: w.clone(),
            w,
            tau: 0,
            broadcasts: 0,
        }
    }

    pub fn drift_sq(&self) -> f64 {
        self.w
            .iter()
            .zip(&self.w_hat)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }
}

/// All agents of one chain, plus per-neighbour caches when enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub agents: Vec<AgentState>,
    /// `received[r * n + s]`: last sample of `s` held by `r`.
    received: Option<Vec<Vec<f64>>>,
}

impl Ensemble {
    pub fn new(initial: Vec<Vec<f64>>, staleness: Staleness) -> Self {
        let n = initial.len();
        let received = match staleness {
            Staleness::Global => None,
            Staleness::PerNeighborCopies => Some(
                (0..n * n)
                    .map(|idx| initial[idx % n].clone())
                    .collect(),
            ),
        };
        Self {
            agents: initial.into_iter().map(AgentState::new).collect(),
            received,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn samples(&self) -> Vec<Vec<f64>> {
        self.agents.iter().map(|a| a.w.clone()).collect()
    }

    /// The value of `sender`'s sample as seen by `receiver`.
    fn view(&self, receiver: usize, sender: usize) -> &[f64] {
        match &self.received {
            None => &self.agents[sender].w_hat,
            Some(r) => &r[receiver * self.agents.len() + sender],
        }
    }
}

/// Source of standard normal draws. Tests substitute deterministic sources.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [f64]);
}

pub struct GaussianNoise<R>(pub R);

impl<R: Rng> NoiseSource for GaussianNoise<R> {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.0.sample(StandardNormal);
        }
    }
}

/// Always zero: turns every engine into its deterministic drift.
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// Weight of an active agent's local gradient relative to `n alpha`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientWeight {
    /// `1 / (2 p_i)`. The pair's expected gradient is then half the full
    /// gradient, so the average sample targets `exp(-E/2)`.
    #[default]
    HalfInverse,
    /// `1 / p_i`: the pair's gradient is an unbiased estimate of `grad E`.
    Inverse,
}

impl GradientWeight {
    pub fn weight(self, p_i: f64) -> f64 {
        match self {
            GradientWeight::HalfInverse => 1.0 / (2.0 * p_i),
            GradientWeight::Inverse => 1.0 / p_i,
        }
    }
}

/// Event-trigger parameters `(mu_i, delta_i)`; a single entry is shared by
/// all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Trigger {
    pub fn uniform(mu: f64, delta: f64) -> Self {
        Self {
            mu: vec![mu],
            delta: vec![delta],
        }
    }

    pub fn mu(&self, agent: usize) -> f64 {
        self.mu[if self.mu.len() == 1 { 0 } else { agent }]
    }

    pub fn delta(&self, agent: usize) -> f64 {
        self.delta[if self.delta.len() == 1 { 0 } else { agent }]
    }

    /// `epsilon_i = mu_i / (tau + 1)^delta_i`.
    pub fn threshold(&self, agent: usize, tau: u64) -> f64 {
        self.mu(agent) / ((tau + 1) as f64).powf(self.delta(agent))
    }

    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_delta(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub trigger: Trigger,
    /// Fusion weight of the synchronous baseline; defaults to
    /// `beta / max_degree` so that `I - beta_sync L` stays a contraction.
    pub sync_beta: Option<f64>,
    pub ticks: u64,
    pub seed: u64,
    /// Record every `thin` ticks.
    pub thin: u64,
    /// Samples recorded before this tick are dropped.
    pub burn_in: u64,
    pub staleness: Staleness,
    pub gradient_weight: GradientWeight,
    pub log_events: bool,
}

impl SamplerConfig {
    pub fn new(alpha: f64, beta: f64, mu_e: f64, delta_e: f64, ticks: u64, seed: u64) -> Self {
        Self {
            alpha,
            beta,
            trigger: Trigger::uniform(mu_e, delta_e),
            sync_beta: None,
            ticks,
            seed,
            thin: 1,
            burn_in: 0,
            staleness: Staleness::Global,
            gradient_weight: GradientWeight::HalfInverse,
            log_events: false,
        }
    }

    pub fn validate(&self, n_agents: usize) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be non-negative, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::param(
                "beta",
                format!("must lie in [0, 1), got {}", self.beta),
            ));
        }
        for (name, values) in [("mu_e", &self.trigger.mu), ("delta_e", &self.trigger.delta)] {
            if values.is_empty() || (values.len() != 1 && values.len() != n_agents) {
                return Err(Error::param(
                    name,
                    format!("needs 1 or {n_agents} entries, got {}", values.len()),
                ));
            }
            if values.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err(Error::param(name, "entries must be non-negative"));
            }
        }
        if self.thin == 0 {
            return Err(Error::param("thin", "must be at least 1"));
        }
        if let Some(b) = self.sync_beta {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::param("sync_beta", format!("must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }

    pub fn sync_beta_for(&self, graph: &Graph) -> f64 {
        self.sync_beta.unwrap_or_else(|| {
            let max_deg = (0..graph.n()).map(|i| graph.degree(i)).max().unwrap_or(1);
            self.beta / max_deg as f64
        })
    }
}

/// Shared read-only context of one network.
pub struct Network<'a, M: ?Sized> {
    pub model: &'a M,
    pub graph: &'a Graph,
    pub profile: ActivationProfile,
}

impl<'a, M: PosteriorModel + ?Sized> Network<'a, M> {
    pub fn new(model: &'a M, graph: &'a Graph) -> Result<Self> {
        if model.n_agents() != graph.n() {
            return Err(Error::Config(format!(
                "model has {} shards but the graph has {} agents",
                model.n_agents(),
                graph.n()
            )));
        }
        Ok(Self {
            model,
            graph,
            profile: activation_probabilities(graph),
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

fn ensure_finite(w: &[f64], tick: u64, agent: usize) -> Result<()> {
    if w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { tick, agent })
    }
}

/// Langevin move of one gossiping agent given its fusion difference.
fn gossip_move<M, N>(
    net: &Network<'_, M>,
    agent: usize,
    w: &[f64],
    fusion: &[f64],
    cfg: &SamplerConfig,
    noise: &mut N,
) -> Vec<f64>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let d = w.len();
    let n = net.n() as f64;
    let mut grad = vec![0.0; d];
    net.model.grad_energy_i_into(agent, w, &mut grad);
    let mut z = vec![0.0; d];
    noise.fill_standard_normal(&mut z);
    let scale = n * cfg.alpha * cfg.gradient_weight.weight(net.profile.p[agent]);
    // v ~ N(0, n^2/2 I)
    let noise_sd = (2.0 * cfg.alpha).sqrt() * n / std::f64::consts::SQRT_2;
    (0..d)
        .map(|k| w[k] - cfg.beta * fusion[k] - scale * grad[k] + noise_sd * z[k])
        .collect()
}

/// One tick of event-triggered gossip. The trigger check uses `tau` counted
/// before this tick, and both agents fuse with the post-trigger broadcast
/// values (triggered samples are exchanged within the tick).
pub fn step_gossip_et<M, N>(
    ens: &mut Ensemble,
    event: &GossipEvent,
    net: &Network<'_, M>,
    cfg: &SamplerConfig,
    noise: &mut N,
) -> Result<()>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let (i, j) = (event.initiator, event.partner);
    let n = ens.len();
    for (a, b) in [(i, j), (j, i)] {
        let agent = &mut ens.agents[a];
        if agent.drift_sq() > cfg.trigger.threshold(a, agent.tau) {
            agent.w_hat.clone_from(&agent.w);
            agent.broadcasts += 1;
            if let Some(received) = &mut ens.received {
                received[b * n + a].clone_from(&agent.w);
            }
        }
    }
    let fusion = |ens: &Ensemble, a: usize, b: usize| -> Vec<f64> {
        ens.agents[a]
            .w_hat
            .iter()
            .zip(ens.view(a, b))
            .map(|(x, y)| x - y)
            .collect()
    };
    let fi = fusion(ens, i, j);
    let fj = fusion(ens, j, i);
    let new_i = gossip_move(net, i, &ens.agents[i].w, &fi, cfg, noise);
    let new_j = gossip_move(net, j, &ens.agents[j].w, &fj, cfg, noise);
    commit_pair(ens, event, new_i, new_j)
}

/// One tick of plain gossip: the pair exchanges current samples.
pub fn step_gossip_plain<M, N>(
    ens: &mut Ensemble,
    event: &GossipEvent,
    net: &Network<'_, M>,
    cfg: &SamplerConfig,
    noise: &mut N,
) -> Result<()>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let (i, j) = (event.initiator, event.partner);
    let (wi, wj) = (ens.agents[i].w.clone(), ens.agents[j].w.clone());
    let fi: Vec<f64> = wi.iter().zip(&wj).map(|(a, b)| a - b).collect();
    let fj: Vec<f64> = fi.iter().map(|v| -v).collect();
    let new_i = gossip_move(net, i, &wi, &fi, cfg, noise);
    let new_j = gossip_move(net, j, &wj, &fj, cfg, noise);
    let n = ens.len();
    for (a, b, w) in [(i, j, &wi), (j, i, &wj)] {
        ens.agents[a].w_hat.clone_from(w);
        ens.agents[a].broadcasts += 1;
        if let Some(received) = &mut ens.received {
            received[b * n + a].clone_from(w);
        }
    }
    commit_pair(ens, event, new_i, new_j)
}

/// Active agents take a standalone Langevin step on their own data (full
/// prior, unit noise). No fusion, no communication.
pub fn step_isolated<M, N>(
    ens: &mut Ensemble,
    event: &GossipEvent,
    net: &Network<'_, M>,
    cfg: &SamplerConfig,
    noise: &mut N,
) -> Result<()>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let mut moved = [Vec::new(), Vec::new()];
    for (slot, a) in [event.initiator, event.partner].into_iter().enumerate() {
        let w = &ens.agents[a].w;
        let d = w.len();
        let mut grad = vec![0.0; d];
        net.model.isolated_grad_into(a, w, &mut grad);
        let mut z = vec![0.0; d];
        noise.fill_standard_normal(&mut z);
        let sd = (2.0 * cfg.alpha).sqrt();
        moved[slot] = (0..d).map(|k| w[k] - cfg.alpha * grad[k] + sd * z[k]).collect();
    }
    let [new_i, new_j] = moved;
    commit_pair(ens, event, new_i, new_j)
}

fn commit_pair(ens: &mut Ensemble, event: &GossipEvent, new_i: Vec<f64>, new_j: Vec<f64>) -> Result<()> {
    ensure_finite(&new_i, event.tick, event.initiator)?;
    ensure_finite(&new_j, event.tick, event.partner)?;
    for (a, w) in [(event.initiator, new_i), (event.partner, new_j)] {
        ens.agents[a].w = w;
        ens.agents[a].tau += 1;
    }
    Ok(())
}

/// One synchronous round: every agent fuses with all neighbours,
/// `w_i - beta sum_j (w_i - w_j) - alpha n grad E_i(w_i) + sqrt(2 alpha) v_i`,
/// `v_i ~ N(0, n I)`, all from pre-round values.
pub fn step_synchronous<M, N>(
    ens: &mut Ensemble,
    net: &Network<'_, M>,
    alpha: f64,
    beta: f64,
    tick: u64,
    noise: &mut N,
) -> Result<()>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let n = net.n();
    let d = ens.agents[0].w.len();
    let sd = (2.0 * alpha * n as f64).sqrt();
    let mut next = Vec::with_capacity(n);
    let mut grad = vec![0.0; d];
    let mut z = vec![0.0; d];
    for i in 0..n {
        let wi = &ens.agents[i].w;
        net.model.grad_energy_i_into(i, wi, &mut grad);
        noise.fill_standard_normal(&mut z);
        let mut out = wi.clone();
        for &j in net.graph.neighbors(i) {
            for (o, (a, b)) in out.iter_mut().zip(wi.iter().zip(&ens.agents[j].w)) {
                *o -= beta * (a - b);
            }
        }
        for k in 0..d {
            out[k] += -alpha * n as f64 * grad[k] + sd * z[k];
        }
        ensure_finite(&out, tick, i)?;
        next.push(out);
    }
    for (agent, w) in ens.agents.iter_mut().zip(next) {
        agent.w_hat.clone_from(&agent.w);
        agent.w = w;
        agent.tau += 1;
        agent.broadcasts += 1;
    }
    Ok(())
}

/// Centralized ULA step `w - alpha grad E(w) + sqrt(2 alpha) v`, `v ~ N(0, I)`.
pub fn step_centralized<M, N>(w: &mut [f64], model: &M, alpha: f64, tick: u64, noise: &mut N) -> Result<()>
where
    M: PosteriorModel + ?Sized,
    N: NoiseSource + ?Sized,
{
    let d = w.len();
    let mut grad = vec![0.0; d];
    model.full_grad_into(w, &mut grad);
    let mut z = vec![0.0; d];
    noise.fill_standard_normal(&mut z);
    let sd = (2.0 * alpha).sqrt();
    for k in 0..d {
        w[k] += -alpha * grad[k] + sd * z[k];
    }
    ensure_finite(w, tick, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub tick: u64,
    pub agent: usize,
    /// Local update count `tau_i` when the sample was recorded.
    pub updates: u64,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentComm {
    pub active: u64,
    pub broadcasts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub engine: Engine,
    pub chain: u32,
    /// Ticks actually executed.
    pub ticks: u64,
    /// `(tick, ||w_tilde||^2)` every `thin` ticks.
    pub consensus_error: Vec<(u64, f64)>,
    pub samples: Vec<SampleRecord>,
    pub comm: Vec<AgentComm>,
    pub events: Option<Vec<GossipEvent>>,
    pub final_states: Vec<AgentState>,
}

impl RunTrace {
    /// Recorded samples of one agent, in tick order.
    pub fn agent_samples(&self, agent: usize) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .filter(|s| s.agent == agent)
            .map(|s| s.w.clone())
            .collect()
    }

    pub fn n_agents(&self) -> usize {
        self.comm.len()
    }
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunError {
    pub error: Error,
    pub partial: Box<RunTrace>,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} ticks)", self.error, self.partial.ticks)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Initial samples `w_i(0) ~ N(0, I)` for chain `chain`.
pub fn initial_samples(seed: u64, chain: u32, n_agents: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, Stream::Init, chain);
    (0..n_agents)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

pub fn run<M: PosteriorModel + ?Sized>(
    engine: Engine,
    model: &M,
    graph: &Graph,
    cfg: &SamplerConfig,
    chain: u32,
) -> std::result::Result<RunTrace, RunError> {
    run_observed(engine, model, graph, cfg, chain, |_, _| {})
}

/// Runs `cfg.ticks` steps of `engine`. `observer` sees the agents at tick 0
/// and after every `thin`-th tick.
pub fn run_observed<M, F>(
    engine: Engine,
    model: &M,
    graph: &Graph,
    cfg: &SamplerConfig,
    chain: u32,
    mut observer: F,
) -> std::result::Result<RunTrace, RunError>
where
    M: PosteriorModel + ?Sized,
    F: FnMut(u64, &[AgentState]),
{
    let n_agents = if engine == Engine::Centralized { 1 } else { model.n_agents() };
    let mut trace = RunTrace {
        engine,
        chain,
        ticks: 0,
        consensus_error: Vec::new(),
        samples: Vec::new(),
        comm: vec![
            AgentComm {
                active: 0,
                broadcasts: 0
            };
            n_agents
        ],
        events: cfg.log_events.then(Vec::new),
        final_states: Vec::new(),
    };
    let fail = |error: Error, trace: RunTrace| RunError {
        error,
        partial: Box::new(trace),
    };
    if let Err(e) = cfg.validate(model.n_agents()) {
        return Err(fail(e, trace));
    }
    let net = match Network::new(model, graph) {
        Ok(net) => net,
        Err(e) => return Err(fail(e, trace)),
    };

    let mut ens = Ensemble::new(
        initial_samples(cfg.seed, chain, n_agents, model.dim()),
        cfg.staleness,
    );
    let mut scheduler: Scheduler<StreamRng> = Scheduler::new(stream(cfg.seed, Stream::Schedule, chain));
    let mut noise = GaussianNoise(stream(cfg.seed, Stream::Noise, chain));
    let sync_beta = cfg.sync_beta_for(graph);

    let record = |tick: u64, ens: &Ensemble, trace: &mut RunTrace, observer: &mut F| {
        if !tick.is_multiple_of(cfg.thin) {
            return;
        }
        trace
            .consensus_error
            .push((tick, consensus_error(&ens.samples())));
        if tick >= cfg.burn_in {
            for (agent, st) in ens.agents.iter().enumerate() {
                trace.samples.push(SampleRecord {
                    tick,
                    agent,
                    updates: st.tau,
                    w: st.w.clone(),
                });
            }
        }
        observer(tick, &ens.agents);
    };
    record(0, &ens, &mut trace, &mut observer);

    for tick in 0..cfg.ticks {
        let outcome = match engine {
            Engine::Centralized => step_centralized(&mut ens.agents[0].w, model, cfg.alpha, tick, &mut noise).map(|_| {
                let a = &mut ens.agents[0];
                a.tau += 1;
            }),
            Engine::Synchronous => step_synchronous(&mut ens, &net, cfg.alpha, sync_beta, tick, &mut noise),
            _ => {
                let event = scheduler.next(graph);
                if let Some(log) = &mut trace.events {
                    log.push(event);
                }
                match engine {
                    Engine::GossipEventTriggered => step_gossip_et(&mut ens, &event, &net, cfg, &mut noise),
                    Engine::Gossip => step_gossip_plain(&mut ens, &event, &net, cfg, &mut noise),
                    _ => step_isolated(&mut ens, &event, &net, cfg, &mut noise),
                }
            }
        };
        if let Err(e) = outcome {
            finish(&mut trace, &ens);
            return Err(fail(e, trace));
        }
        trace.ticks = tick + 1;
        record(tick + 1, &ens, &mut trace, &mut observer);
    }
    finish(&mut trace, &ens);
    Ok(trace)
}

fn finish(trace: &mut RunTrace, ens: &Ensemble) {
    trace.comm = ens
        .agents
        .iter()
        .map(|a| AgentComm {
            active: a.tau,
            broadcasts: a.broadcasts,
        })
        .collect();
    trace.final_states = ens.agents.clone();
}
