//! Experiment configuration (TOML) and the two built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Engine, GradientWeight, SamplerConfig, Staleness, Trigger};
use crate::topology::Graph;

/// A scalar shared by all agents, or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerAgent {
    pub fn values(&self) -> Vec<f64> {
        match self {
            PerAgent::Shared(v) => vec![*v],
            PerAgent::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Tied-means two-component mixture on synthetic data.
    GaussianMixture {
        #[serde(default = "defaults::gm_points")]
        data_points: usize,
        #[serde(default = "defaults::gm_theta")]
        theta: [f64; 2],
        #[serde(default = "defaults::gm_prior_var")]
        prior_var: [f64; 2],
        #[serde(default = "defaults::gm_obs_var")]
        obs_var: f64,
    },
    /// Bayesian logistic regression on a MAGIC-format CSV.
    Logistic {
        /// Relative paths resolve against the data root.
        #[serde(default = "defaults::magic_file")]
        data_file: PathBuf,
        #[serde(default = "defaults::train_fraction")]
        train_fraction: f64,
        /// Dirichlet concentration of the label-skewed split; absent means
        /// an equal random split.
        #[serde(default)]
        concentration: Option<f64>,
        #[serde(default = "defaults::prior_variance")]
        prior_variance: f64,
        #[serde(default = "defaults::yes")]
        standardize: bool,
        /// Append a constant-1 feature.
        #[serde(default)]
        bias: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Ring,
    Complete,
    Star,
    Path,
    EdgeList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub kind: GraphKind,
    #[serde(default)]
    pub n: Option<usize>,
    /// Edge-list file for `kind = "edge-list"`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl GraphSpec {
    pub fn ring(n: usize) -> Self {
        Self {
            kind: GraphKind::Ring,
            n: Some(n),
            file: None,
        }
    }

    pub fn build(&self) -> Result<Graph> {
        let need_n = || {
            self.n
                .ok_or_else(|| Error::Config(format!("graph kind {:?} needs `n`", self.kind)))
        };
        match self.kind {
            GraphKind::Ring => Graph::ring(need_n()?),
            GraphKind::Complete => Graph::complete(need_n()?),
            GraphKind::Star => Graph::star(need_n()?),
            GraphKind::Path => Graph::path(need_n()?),
            GraphKind::EdgeList => {
                let file = self
                    .file
                    .as_ref()
                    .ok_or_else(|| Error::Config("graph kind edge-list needs `file`".into()))?;
                let g = Graph::from_edge_list_file(file)?;
                if let Some(n) = self.n {
                    if n != g.n() {
                        return Err(Error::Config(format!(
                            "graph file {} has {} agents but n = {n}",
                            file.display(),
                            g.n()
                        )));
                    }
                }
                Ok(g)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub alpha: f64,
    pub beta: f64,
    pub mu_e: PerAgent,
    pub delta_e: PerAgent,
    pub ticks: u64,
    #[serde(default = "defaults::one_u64")]
    pub thin: u64,
    #[serde(default)]
    pub sync_beta: Option<f64>,
    #[serde(default)]
    pub staleness: Staleness,
    #[serde(default)]
    pub gradient_weight: GradientWeight,
    #[serde(default)]
    pub log_events: bool,
}

impl SamplerSpec {
    pub fn to_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            alpha: self.alpha,
            beta: self.beta,
            trigger: Trigger {
                mu: self.mu_e.values(),
                delta: self.delta_e.values(),
            },
            sync_beta: self.sync_beta,
            ticks: self.ticks,
            seed,
            thin: self.thin,
            burn_in: 0,
            staleness: self.staleness,
            gradient_weight: self.gradient_weight,
            log_events: self.log_events,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Fraction of each agent's recorded samples dropped before posterior summaries.
    #[serde(default = "defaults::burn_in_fraction")]
    pub burn_in_fraction: f64,
    #[serde(default = "defaults::grid_lo")]
    pub grid_lo: [f64; 2],
    #[serde(default = "defaults::grid_hi")]
    pub grid_hi: [f64; 2],
    #[serde(default = "defaults::grid_resolution")]
    pub grid_resolution: [usize; 2],
    #[serde(default = "defaults::reference_samples")]
    pub reference_samples: usize,
    #[serde(default = "defaults::projections")]
    pub projections: usize,
    /// Accuracy is evaluated every this many recorded samples ...
    #[serde(default = "defaults::accuracy_every")]
    pub accuracy_every: usize,
    /// ... over the most recent this many recorded samples.
    #[serde(default = "defaults::accuracy_window")]
    pub accuracy_window: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            burn_in_fraction: defaults::burn_in_fraction(),
            grid_lo: defaults::grid_lo(),
            grid_hi: defaults::grid_hi(),
            grid_resolution: defaults::grid_resolution(),
            reference_samples: defaults::reference_samples(),
            projections: defaults::projections(),
            accuracy_every: defaults::accuracy_every(),
            accuracy_window: defaults::accuracy_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::one_u32")]
    pub chains: u32,
    pub engines: Vec<Engine>,
    /// Draw a fresh data partition for every chain instead of sharing one.
    #[serde(default)]
    pub repartition_per_chain: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub model: ModelSpec,
    pub graph: GraphSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

mod defaults {
    use std::path::PathBuf;

    pub fn gm_points() -> usize {
        100
    }
    pub fn gm_theta() -> [f64; 2] {
        [0.0, 1.0]
    }
    pub fn gm_prior_var() -> [f64; 2] {
        [10.0, 1.0]
    }
    pub fn gm_obs_var() -> f64 {
        2.0
    }
    pub fn magic_file() -> PathBuf {
        PathBuf::from("magic04.data")
    }
    pub fn train_fraction() -> f64 {
        0.9
    }
    pub fn prior_variance() -> f64 {
        10.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn one_u64() -> u64 {
        1
    }
    pub fn one_u32() -> u32 {
        1
    }
    pub fn seed() -> u64 {
        2024
    }
    pub fn burn_in_fraction() -> f64 {
        0.2
    }
    pub fn grid_lo() -> [f64; 2] {
        [-3.0, -4.0]
    }
    pub fn grid_hi() -> [f64; 2] {
        [3.0, 4.0]
    }
    pub fn grid_resolution() -> [usize; 2] {
        [400, 400]
    }
    pub fn reference_samples() -> usize {
        20_000
    }
    pub fn projections() -> usize {
        500
    }
    pub fn accuracy_every() -> usize {
        5
    }
    pub fn accuracy_window() -> usize {
        10
    }
}

/// Desk-scale GM ticks per agent; `full_scale` multiplies by five.
pub const GM_DESK_TICKS_PER_AGENT: u64 = 20_000;
pub const GM_FULL_TICKS_PER_AGENT: u64 = 100_000;

impl ExperimentConfig {
    /// Tied-means mixture on a 5-agent ring, event-triggered gossip only.
    pub fn gm_preset(full_scale: bool) -> Self {
        let n = 5;
        let per_agent = if full_scale {
            GM_FULL_TICKS_PER_AGENT
        } else {
            GM_DESK_TICKS_PER_AGENT
        };
        Self {
            id: "gm".into(),
            seed: defaults::seed(),
            chains: 1,
            engines: vec![Engine::GossipEventTriggered],
            repartition_per_chain: false,
            out: None,
            model: ModelSpec::GaussianMixture {
                data_points: defaults::gm_points(),
                theta: defaults::gm_theta(),
                prior_var: defaults::gm_prior_var(),
                obs_var: defaults::gm_obs_var(),
            },
            graph: GraphSpec::ring(n),
            sampler: SamplerSpec {
                alpha: 1e-4,
                beta: 0.1,
                mu_e: PerAgent::Shared(8.0),
                delta_e: PerAgent::Shared(0.51),
                ticks: per_agent * n as u64,
                thin: 10,
                sync_beta: None,
                staleness: Staleness::Global,
                gradient_weight: GradientWeight::HalfInverse,
                log_events: false,
            },
            analysis: AnalysisSpec::default(),
        }
    }

    /// Logistic regression on MAGIC over a 6-agent ring with a label-skewed
    /// split, comparing event-triggered gossip with the baselines.
    pub fn logistic_preset() -> Self {
        Self {
            id: "logistic".into(),
            seed: defaults::seed(),
            chains: 10,
            engines: vec![
                Engine::GossipEventTriggered,
                Engine::Synchronous,
                Engine::Centralized,
                Engine::Isolated,
            ],
            repartition_per_chain: false,
            out: None,
            model: ModelSpec::Logistic {
                data_file: defaults::magic_file(),
                train_fraction: defaults::train_fraction(),
                concentration: Some(0.5),
                prior_variance: defaults::prior_variance(),
                standardize: true,
                bias: false,
            },
            graph: GraphSpec::ring(6),
            sampler: SamplerSpec {
                alpha: 1e-5,
                beta: 0.5,
                mu_e: PerAgent::Shared(2.0),
                delta_e: PerAgent::Shared(0.46),
                ticks: 1000,
                thin: 5,
                sync_beta: None,
                staleness: Staleness::Global,
                gradient_weight: GradientWeight::HalfInverse,
                log_events: false,
            },
            analysis: AnalysisSpec {
                burn_in_fraction: 0.5,
                ..AnalysisSpec::default()
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config, or the `config` entry of a run manifest (`.json`).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)?;
            let config = manifest
                .get("config")
                .ok_or_else(|| Error::Config(format!("{} has no `config` entry", path.display())))?;
            return serde_json::from_value(config.clone()).map_err(|e| Error::Config(e.to_string()));
        }
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without data, including the
    /// fusion-weight condition on the configured graph.
    pub fn validate(&self) -> Result<Graph> {
        if self.engines.is_empty() {
            return Err(Error::Config("`engines` must name at least one engine".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("`chains` must be at least 1".into()));
        }
        let graph = self.graph.build()?;
        let s = &self.sampler;
        if !(s.beta > 0.0 && s.beta < 1.0) {
            let spectral = crate::topology::expected_laplacian(&graph);
            return Err(Error::Config(format!(
                "fusion weight beta = {} must lie in (0, 1) and satisfy beta(1-beta) < 1/(2 lambda_(n-1)) = {:.6}",
                s.beta,
                1.0 / (2.0 * spectral.lambda_n_minus_1)
            )));
        }
        let lambda2 = crate::topology::expected_laplacian(&graph).lambda_n_minus_1;
        let lhs = s.beta * (1.0 - s.beta);
        let rhs = 1.0 / (2.0 * lambda2);
        if lhs >= rhs {
            return Err(Error::Condition {
                beta: s.beta,
                lambda_n_minus_1: lambda2,
                lhs,
                rhs,
            });
        }
        s.to_config(self.seed).validate(graph.n())?;
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.burn_in_fraction) {
            return Err(Error::Config(format!(
                "burn_in_fraction must lie in [0, 1), got {}",
                a.burn_in_fraction
            )));
        }
        if a.accuracy_every == 0 || a.accuracy_window == 0 || a.projections == 0 || a.reference_samples == 0 {
            return Err(Error::Config(
                "accuracy_every, accuracy_window, projections and reference_samples must be positive".into(),
            ));
        }
        match &self.model {
            ModelSpec::GaussianMixture {
                data_points,
                prior_var,
                obs_var,
                ..
            } => {
                if *data_points < graph.n() {
                    return Err(Error::Config(format!(
                        "{data_points} data points cannot fill {} shards",
                        graph.n()
                    )));
                }
                if prior_var.iter().any(|v| *v <= 0.0) || *obs_var <= 0.0 {
                    return Err(Error::Config("variances must be positive".into()));
                }
            }
            ModelSpec::Logistic {
                train_fraction,
                concentration,
                prior_variance,
                ..
            } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "train_fraction must lie in (0, 1), got {train_fraction}"
                    )));
                }
                if concentration.is_some_and(|c| !(c > 0.0)) {
                    return Err(Error::Config("concentration must be positive".into()));
                }
                if *prior_variance <= 0.0 {
                    return Err(Error::Config("prior_variance must be positive".into()));
                }
            }
        }
        Ok(graph)
    }
}
