use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gossip_ula::analysis::{check_conditions, estimate_mu_g, theory_constants};
use gossip_ula::harness::{self, ExperimentConfig, GraphKind, GraphSpec};
use gossip_ula::models::empirical_lipschitz;
use gossip_ula::rng::{stream, Stream};
use gossip_ula::sampler::initial_samples;
use gossip_ula::topology::{activation_probabilities, expected_laplacian};
use gossip_ula::Error;

#[derive(Parser)]
#[command(name = "gossip-ula", version, about = "Event-triggered gossip Langevin sampling: experiments and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tied-means Gaussian mixture on a 5-agent ring.
    RunGm {
        #[command(flatten)]
        common: Overrides,
        /// Run 100000 ticks per agent instead of 20000.
        #[arg(long)]
        full_scale: bool,
    },
    /// Logistic regression on MAGIC with all four engines.
    RunLogistic {
        #[command(flatten)]
        common: Overrides,
        /// Draw a fresh data partition for every chain.
        #[arg(long)]
        repartition_per_chain: bool,
    },
    /// Run a TOML config (or the config stored in a run manifest).
    RunCustom {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
    },
    /// Rebuild tables and plot CSVs from a run directory.
    Report { dir: PathBuf },
    /// Evaluate the step-size and fusion-weight conditions.
    CheckConditions {
        #[command(flatten)]
        source: ConfigSource,
        /// Log-Sobolev constant of the target (needed for the step-size condition).
        #[arg(long)]
        rho_u: Option<f64>,
        /// Lipschitz constant of the full energy; estimated from random gradient
        /// pairs on the ball of radius 5 when absent.
        #[arg(long)]
        l_bar: Option<f64>,
    },
    /// Print the consensus-bound constants and the envelope at a few ticks.
    TheoryConstants {
        #[command(flatten)]
        source: ConfigSource,
        /// Squared local gradient bound; estimated at the initial states when absent.
        #[arg(long)]
        mu_g: Option<f64>,
        /// Ticks at which to print the envelope.
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1000, 10000, 100000])]
        at: Vec<u64>,
        /// Print the constants as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    chains: Option<u32>,
    /// Output directory (default `runs/<id>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Edge-list file replacing the configured graph.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// Write every gossip event to `events_<engine>_<chain>.jsonl`.
    #[arg(long)]
    log_events: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Gm,
    Logistic,
}

#[derive(Args)]
struct ConfigSource {
    /// TOML config or run manifest.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gm")]
    preset: Preset,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        match (&self.config, self.preset) {
            (Some(path), _) => ExperimentConfig::from_file(path),
            (None, Preset::Gm) => Ok(ExperimentConfig::gm_preset(false)),
            (None, Preset::Logistic) => Ok(ExperimentConfig::logistic_preset()),
        }
    }
}

fn apply(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(ticks) = o.ticks {
        cfg.sampler.ticks = ticks;
    }
    if let Some(chains) = o.chains {
        cfg.chains = chains;
    }
    if let Some(file) = &o.graph_file {
        cfg.graph = GraphSpec {
            kind: GraphKind::EdgeList,
            n: None,
            file: Some(file.clone()),
        };
    }
    if o.log_events {
        cfg.sampler.log_events = true;
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.clone());
    }
}

fn run(mut cfg: ExperimentConfig, o: &Overrides) -> Result<(), Error> {
    apply(&mut cfg, o);
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(&cfg.id));
    let result = harness::run_experiment(&cfg, &out)?;
    let summary = harness::report(&out)?;
    print!("{}", summary.text);
    eprintln!(
        "wrote {} ({:.1} s)",
        result.out_dir.display(),
        result.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::RunGm { common, full_scale } => run(ExperimentConfig::gm_preset(full_scale), &common),
        Command::RunLogistic {
            common,
            repartition_per_chain,
        } => {
            let mut cfg = ExperimentConfig::logistic_preset();
            cfg.repartition_per_chain = repartition_per_chain;
            run(cfg, &common)
        }
        Command::RunCustom { config, common } => ExperimentConfig::from_file(&config).and_then(|c| run(c, &common)),
        Command::Report { dir } => harness::report(&dir).map(|r| print!("{}", r.text)),
        Command::CheckConditions { source, rho_u, l_bar } => conditions(&source, rho_u, l_bar),
        Command::TheoryConstants { source, mu_g, at, json } => constants(&source, mu_g, &at, json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn conditions(source: &ConfigSource, rho_u: Option<f64>, l_bar: Option<f64>) -> Result<(), Error> {
    let cfg = source.load()?;
    let graph = cfg.graph.build()?;
    let spectral = expected_laplacian(&graph);
    let beta = cfg.sampler.beta;
    let lhs = beta * (1.0 - beta);
    let rhs = 1.0 / (2.0 * spectral.lambda_n_minus_1);
    println!("lambda_(n-1) = {:.6}", spectral.lambda_n_minus_1);
    println!(
        "fusion weight: beta(1-beta) = {lhs:.6} < 1/(2 lambda_(n-1)) = {rhs:.6}: {}",
        if lhs < rhs { "satisfied" } else { "VIOLATED" }
    );
    if let Some(rho) = rho_u {
        let l = match l_bar {
            Some(l) => l,
            None => {
                // sum of the local estimates bounds the full-energy constant
                let problem = harness::prepare(&cfg, &graph)?;
                let model = problem.model(0);
                let mut rng = stream(cfg.seed, Stream::Reference, 0);
                let l: f64 = (0..model.n_agents())
                    .map(|a| empirical_lipschitz(model, a, 5.0, 1000, &mut rng))
                    .sum();
                println!("L_bar estimate = {l:.6e}");
                l
            }
        };
        let r = check_conditions(cfg.sampler.alpha, rho, l, beta, spectral.lambda_n_minus_1)?;
        println!(
            "step size: margin {:.6e}: {}",
            r.margin1,
            if r.cond1 { "satisfied" } else { "VIOLATED" }
        );
    } else {
        println!("step size: pass --rho-u to evaluate");
    }
    cfg.validate().map(|_| ())
}

fn constants(source: &ConfigSource, mu_g: Option<f64>, at: &[u64], json: bool) -> Result<(), Error> {
    let cfg = source.load()?;
    let graph = cfg.validate()?;
    let sampler = cfg.sampler.to_config(cfg.seed);
    let problem = harness::prepare(&cfg, &graph)?;
    let d = problem.dim();
    let n = graph.n();
    let mu_g = match mu_g {
        Some(v) => v,
        None => estimate_mu_g(problem.model(0), &initial_samples(cfg.seed, 0, n, d)),
    };
    // w_i(0) ~ N(0, I) independently, so E ||w_tilde(0)||^2 = (n - 1) d
    let init = ((n - 1) * d) as f64;
    let t = theory_constants(&graph, &sampler, d, mu_g, init)?;
    if json {
        let envelope: Vec<_> = at.iter().map(|&k| serde_json::json!({ "k": k, "value": t.envelope(k) })).collect();
        let report = serde_json::json!({ "constants": t, "envelope": envelope });
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("p_m = {:.6}", activation_probabilities(&graph).p_min);
    println!("lambda = {:.8}", t.lambda);
    println!("sqrt(lambda) = {:.8}", t.sqrt_lambda);
    println!("t_bar = {}", t.t_bar);
    println!("mu_g = {mu_g:.6e}");
    println!("Y1 = {:.6e}", t.y1);
    println!("Y2 = {:.6e}", t.y2);
    println!("Y3 = {:.6e}", t.y3);
    for &k in at {
        println!("envelope({k}) = {:.6e}", t.envelope(k));
    }
    Ok(())
}
