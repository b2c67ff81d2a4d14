//! Data preparation, multi-chain execution and posterior summaries.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::artifacts;
use super::config::{ExperimentConfig, ModelSpec};
use crate::analysis::{
    accuracy, grid_posterior, random_directions, wasserstein1_1d, wasserstein_projected, PosteriorGrid,
};
use crate::error::{Error, Result};
use crate::models::{
    gm_generate, load_magic_csv, partition_equal, partition_heterogeneous, stratified_split, Dataset,
    GaussianMixture, LogisticRegression, PosteriorModel, Standardizer,
};
use crate::rng::{stream, Stream};
use crate::sampler::{self, Engine, RunTrace, SampleRecord};
use crate::topology::Graph;

/// Environment variable naming the dataset directory.
pub const DATA_ENV: &str = "GOSSIP_ULA_DATA";

/// `$GOSSIP_ULA_DATA`, else `./data` when it exists, else the `data/`
/// directory of the source checkout.
pub fn data_root() -> PathBuf {
    if let Some(dir) = std::env::var_os(DATA_ENV) {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("data");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Models and held-out data ready for sampling.
pub enum Problem {
    GaussianMixture {
        data: Vec<f64>,
        /// Per-chain shard assignment (a single entry unless repartitioning).
        shards: Vec<Vec<Vec<usize>>>,
        models: Vec<GaussianMixture>,
    },
    Logistic {
        train: Dataset,
        test: Dataset,
        shards: Vec<Vec<Vec<usize>>>,
        models: Vec<LogisticRegression>,
        input: InputFile,
    },
}

impl Problem {
    /// Model used by `chain`.
    pub fn model(&self, chain: u32) -> &dyn PosteriorModel {
        let pick = |len: usize| (chain as usize).min(len - 1);
        match self {
            Problem::GaussianMixture { models, .. } => &models[pick(models.len())],
            Problem::Logistic { models, .. } => &models[pick(models.len())],
        }
    }

    pub fn dim(&self) -> usize {
        self.model(0).dim()
    }

    pub fn inputs(&self) -> Vec<InputFile> {
        match self {
            Problem::Logistic { input, .. } => vec![input.clone()],
            Problem::GaussianMixture { .. } => Vec::new(),
        }
    }

    pub fn test_set(&self) -> Option<&Dataset> {
        match self {
            Problem::Logistic { test, .. } => Some(test),
            Problem::GaussianMixture { .. } => None,
        }
    }
}

/// Generates or loads the data and builds the per-chain models.
pub fn prepare(cfg: &ExperimentConfig, graph: &Graph) -> Result<Problem> {
    let n = graph.n();
    let partitions = if cfg.repartition_per_chain { cfg.chains } else { 1 };
    match &cfg.model {
        ModelSpec::GaussianMixture {
            data_points,
            theta,
            prior_var,
            obs_var,
        } => {
            let data = gm_generate(*data_points, *theta, *obs_var, &mut stream(cfg.seed, Stream::Data, 0));
            let mut shards = Vec::new();
            let mut models = Vec::new();
            for c in 0..partitions {
                let split = partition_equal(data.len(), n, &mut stream(cfg.seed, Stream::Partition, c))?;
                let local = split
                    .iter()
                    .map(|idx| idx.iter().map(|&i| data[i]).collect())
                    .collect();
                models.push(GaussianMixture::with_params(local, *prior_var, *obs_var));
                shards.push(split);
            }
            Ok(Problem::GaussianMixture { data, shards, models })
        }
        ModelSpec::Logistic {
            data_file,
            train_fraction,
            concentration,
            prior_variance,
            standardize,
            bias,
        } => {
            let path = if data_file.is_absolute() {
                data_file.clone()
            } else {
                data_root().join(data_file)
            };
            let raw = load_magic_csv(&path)?;
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let input = InputFile {
                path: path.clone(),
                sha256: sha256_hex(&bytes),
            };
            let (train_idx, test_idx) =
                stratified_split(raw.labels(), *train_fraction, &mut stream(cfg.seed, Stream::Split, 0))?;
            let mut train = raw.subset(&train_idx);
            let mut test = raw.subset(&test_idx);
            if *standardize {
                let st = Standardizer::fit(&train)?;
                train = st.apply(&train);
                test = st.apply(&test);
            }
            if *bias {
                train = train.with_bias();
                test = test.with_bias();
            }
            let mut shards = Vec::new();
            let mut models = Vec::new();
            for c in 0..partitions {
                let mut rng = stream(cfg.seed, Stream::Partition, c);
                let split = match concentration {
                    Some(conc) => partition_heterogeneous(train.labels(), n, *conc, &mut rng)?,
                    None => partition_equal(train.len(), n, &mut rng)?,
                };
                models.push(LogisticRegression::new(
                    split.iter().map(|idx| train.subset(idx)).collect(),
                    *prior_variance,
                ));
                shards.push(split);
            }
            Ok(Problem::Logistic {
                train,
                test,
                shards,
                models,
                input,
            })
        }
    }
}

/// Distances from one agent's samples to the grid oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinEntry {
    pub engine: Engine,
    pub chain: u32,
    pub agent: usize,
    pub samples: usize,
    pub sliced: f64,
    /// Per-coordinate 1D distances.
    pub marginal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinReport {
    pub burn_in_fraction: f64,
    pub reference_samples: usize,
    pub projections: usize,
    pub grid_mean: [f64; 2],
    pub grid_covariance: [[f64; 2]; 2],
    pub entries: Vec<WassersteinEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyBasis {
    /// Every recorded sample after burn-in.
    Final,
    /// Only samples taken with at most as many local updates as the
    /// event-triggered gossip agents made on average.
    MatchedUpdates,
}

/// Accuracy over a sliding window of recent samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub engine: Engine,
    pub chain: u32,
    pub agent: usize,
    pub tick: u64,
    pub updates: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyFinal {
    pub engine: Engine,
    pub chain: u32,
    pub agent: usize,
    pub basis: AccuracyBasis,
    /// Local updates at the last sample used.
    pub updates: u64,
    pub samples: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub curve: Vec<AccuracyPoint>,
    pub finals: Vec<AccuracyFinal>,
    /// Mean final local update count of the event-triggered gossip agents.
    pub matched_updates: Option<f64>,
}

impl AccuracyReport {
    /// Mean accuracy over agents and chains of one engine.
    pub fn mean(&self, engine: Engine, basis: AccuracyBasis) -> Option<f64> {
        let vals: Vec<f64> = self
            .finals
            .iter()
            .filter(|f| f.engine == engine && f.basis == basis)
            .map(|f| f.accuracy)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    /// `ticks = 0`: only the initial state was written.
    InitialOnly,
    Diverged,
}

/// Everything a run produced, in memory.
#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub graph: Graph,
    pub out_dir: PathBuf,
    /// Engine-major, chain-minor.
    pub traces: Vec<RunTrace>,
    pub grid: Option<PosteriorGrid>,
    pub wasserstein: Option<WassersteinReport>,
    pub accuracy: Option<AccuracyReport>,
    pub status: RunStatus,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn traces_of(&self, engine: Engine) -> Vec<&RunTrace> {
        self.traces.iter().filter(|t| t.engine == engine).collect()
    }
}

/// Drops the first `fraction` of the records.
fn after_burn_in(records: &[&SampleRecord], fraction: f64) -> Vec<Vec<f64>> {
    let skip = (records.len() as f64 * fraction).floor() as usize;
    records[skip.min(records.len().saturating_sub(1))..]
        .iter()
        .map(|r| r.w.clone())
        .collect()
}

fn agent_records(trace: &RunTrace, agent: usize) -> Vec<&SampleRecord> {
    trace.samples.iter().filter(|s| s.agent == agent).collect()
}

/// Sliced and marginal W1 from every agent of every trace to draws from `grid`.
pub fn wasserstein_report(
    traces: &[RunTrace],
    grid: &PosteriorGrid,
    cfg: &ExperimentConfig,
) -> Result<WassersteinReport> {
    let a = &cfg.analysis;
    let reference = grid.sample(a.reference_samples, &mut stream(cfg.seed, Stream::Reference, 0));
    let directions = random_directions(2, a.projections, cfg.seed);
    let column = |pts: &[Vec<f64>], k: usize| pts.iter().map(|p| p[k]).collect::<Vec<_>>();
    let jobs: Vec<(usize, usize)> = traces
        .iter()
        .enumerate()
        .flat_map(|(t, tr)| (0..tr.n_agents()).map(move |agent| (t, agent)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(t, agent)| {
            let trace = &traces[t];
            let samples = after_burn_in(&agent_records(trace, agent), a.burn_in_fraction);
            Ok(WassersteinEntry {
                engine: trace.engine,
                chain: trace.chain,
                agent,
                samples: samples.len(),
                sliced: wasserstein_projected(&samples, &reference, &directions)?,
                marginal: [
                    wasserstein1_1d(&column(&samples, 0), &column(&reference, 0))?,
                    wasserstein1_1d(&column(&samples, 1), &column(&reference, 1))?,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WassersteinReport {
        burn_in_fraction: a.burn_in_fraction,
        reference_samples: a.reference_samples,
        projections: a.projections,
        grid_mean: grid.mean(),
        grid_covariance: grid.covariance(),
        entries,
    })
}

/// Accuracy curves by local update count and final accuracies.
pub fn accuracy_report(traces: &[RunTrace], test: &Dataset, cfg: &ExperimentConfig) -> Result<AccuracyReport> {
    let a = &cfg.analysis;
    let gossip: Vec<u64> = traces
        .iter()
        .filter(|t| t.engine == Engine::GossipEventTriggered)
        .flat_map(|t| t.comm.iter().map(|c| c.active))
        .collect();
    let matched_updates = (!gossip.is_empty()).then(|| gossip.iter().sum::<u64>() as f64 / gossip.len() as f64);

    let jobs: Vec<(usize, usize)> = traces
        .iter()
        .enumerate()
        .flat_map(|(t, tr)| (0..tr.n_agents()).map(move |agent| (t, agent)))
        .collect();
    let per_agent = jobs
        .par_iter()
        .map(|&(t, agent)| {
            let trace = &traces[t];
            let records = agent_records(trace, agent);
            let mut curve = Vec::new();
            for m in (a.accuracy_every - 1..records.len()).step_by(a.accuracy_every) {
                let start = (m + 1).saturating_sub(a.accuracy_window);
                let window: Vec<Vec<f64>> = records[start..=m].iter().map(|r| r.w.clone()).collect();
                curve.push(AccuracyPoint {
                    engine: trace.engine,
                    chain: trace.chain,
                    agent,
                    tick: records[m].tick,
                    updates: records[m].updates,
                    accuracy: accuracy(&window, test)?,
                });
            }
            let mut finals = Vec::new();
            let mut push = |basis, recs: &[&SampleRecord]| -> Result<()> {
                if recs.is_empty() {
                    return Ok(());
                }
                let samples = after_burn_in(recs, a.burn_in_fraction);
                finals.push(AccuracyFinal {
                    engine: trace.engine,
                    chain: trace.chain,
                    agent,
                    basis,
                    updates: recs[recs.len() - 1].updates,
                    samples: samples.len(),
                    accuracy: accuracy(&samples, test)?,
                });
                Ok(())
            };
            push(AccuracyBasis::Final, &records)?;
            if let Some(u) = matched_updates {
                let upto: Vec<&SampleRecord> =
                    records.iter().copied().filter(|r| r.updates as f64 <= u).collect();
                push(AccuracyBasis::MatchedUpdates, &upto)?;
            }
            Ok((curve, finals))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = AccuracyReport {
        curve: Vec::new(),
        finals: Vec::new(),
        matched_updates,
    };
    for (curve, finals) in per_agent {
        report.curve.extend(curve);
        report.finals.extend(finals);
    }
    Ok(report)
}

/// Runs every engine on every chain in parallel. Traces come back
/// engine-major; the first failure is returned alongside all traces.
pub fn run_chains(
    cfg: &ExperimentConfig,
    graph: &Graph,
    problem: &Problem,
) -> (Vec<RunTrace>, Option<Error>) {
    let sampler_cfg = cfg.sampler.to_config(cfg.seed);
    let jobs: Vec<(Engine, u32)> = cfg
        .engines
        .iter()
        .flat_map(|&e| (0..cfg.chains).map(move |c| (e, c)))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(engine, chain)| sampler::run(engine, problem.model(chain), graph, &sampler_cfg, chain))
        .collect();
    let mut traces = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(t) => traces.push(t),
            Err(e) => {
                traces.push(*e.partial);
                first_error.get_or_insert(e.error);
            }
        }
    }
    (traces, first_error)
}

/// Validates `cfg`, runs it and writes the artifacts into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentResult> {
    let started = Instant::now();
    let graph = cfg.validate()?;
    let problem = prepare(cfg, &graph)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut cfg = cfg.clone();
    cfg.out = Some(out.to_path_buf());

    let mut result = ExperimentResult {
        config: cfg.clone(),
        graph: graph.clone(),
        out_dir: out.to_path_buf(),
        traces: Vec::new(),
        grid: None,
        wasserstein: None,
        accuracy: None,
        status: RunStatus::Complete,
        wall_time_s: 0.0,
    };

    if cfg.sampler.ticks == 0 {
        result.status = RunStatus::InitialOnly;
        let outputs = artifacts::write_initial_states(out, &cfg, &graph, problem.dim())?;
        result.wall_time_s = started.elapsed().as_secs_f64();
        artifacts::write_manifest(out, &result, &problem, &outputs, None)?;
        return Ok(result);
    }

    let (traces, failure) = run_chains(&cfg, &graph, &problem);
    result.traces = traces;
    if let Some(error) = failure {
        result.status = RunStatus::Diverged;
        let outputs = artifacts::write_traces(out, &result)?;
        result.wall_time_s = started.elapsed().as_secs_f64();
        artifacts::write_manifest(out, &result, &problem, &outputs, Some(&error))?;
        return Err(error);
    }

    match &problem {
        Problem::GaussianMixture { .. } => {
            let a = &cfg.analysis;
            let grid = grid_posterior(problem.model(0), a.grid_lo, a.grid_hi, a.grid_resolution)?;
            result.wasserstein = Some(wasserstein_report(&result.traces, &grid, &cfg)?);
            result.grid = Some(grid);
        }
        Problem::Logistic { test, .. } => {
            result.accuracy = Some(accuracy_report(&result.traces, test, &cfg)?);
        }
    }

    let mut outputs = artifacts::write_traces(out, &result)?;
    outputs.extend(artifacts::write_problem_data(out, &problem)?);
    outputs.extend(artifacts::write_analysis(out, &result)?);
    result.wall_time_s = started.elapsed().as_secs_f64();
    artifacts::write_manifest(out, &result, &problem, &outputs, None)?;
    Ok(result)
}

/// Re-runs the configuration stored in a run manifest into `out`.
pub fn rerun_from_manifest(manifest: &Path, out: &Path) -> Result<ExperimentResult> {
    if !manifest.exists() {
        return Err(Error::MissingManifest(manifest.to_path_buf()));
    }
    let cfg = ExperimentConfig::from_file(manifest)?;
    run_experiment(&cfg, out)
}
