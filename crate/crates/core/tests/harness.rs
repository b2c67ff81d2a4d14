use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gossip_ula::harness::{
    report, rerun_from_manifest, run_experiment, AccuracyBasis, ExperimentConfig, GraphSpec, GraphKind, ModelSpec,
    RunStatus, MANIFEST,
};
use gossip_ula::sampler::Engine;
use gossip_ula::Error;

fn small_gm(ticks: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::gm_preset(false);
    cfg.sampler.ticks = ticks;
    cfg.analysis.reference_samples = 2000;
    cfg.analysis.projections = 50;
    cfg
}

fn small_logistic(ticks: u64, chains: u32) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::logistic_preset();
    cfg.sampler.ticks = ticks;
    cfg.chains = chains;
    cfg
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap()
}

#[test]
fn zero_ticks_writes_manifest_and_initial_state_only() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run_experiment(&small_gm(0), tmp.path()).unwrap();
    assert_eq!(result.status, RunStatus::InitialOnly);
    let mut names: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["initial_state.csv", "manifest.json"]);
    let text = fs::read_to_string(tmp.path().join("initial_state.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 5);
    assert_eq!(manifest(tmp.path())["status"], "initial-only");
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    for cfg in [small_gm(3000), small_logistic(120, 2)] {
        let a = tmp.path().join(format!("{}-a", cfg.id));
        let b = tmp.path().join(format!("{}-b", cfg.id));
        run_experiment(&cfg, &a).unwrap();
        run_experiment(&cfg, &b).unwrap();
        let (fa, fb) = (files(&a), files(&b));
        assert!(fa.contains_key("samples.csv") && fa.contains_key("comm_stats.csv"));
        assert_eq!(fa, fb, "outputs of {} differ", cfg.id);
        assert_eq!(manifest(&a)["outputs"], manifest(&b)["outputs"]);
    }
}

#[test]
fn different_seeds_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(2000);
    run_experiment(&cfg, &tmp.path().join("a")).unwrap();
    cfg.seed += 1;
    run_experiment(&cfg, &tmp.path().join("b")).unwrap();
    assert_ne!(
        files(&tmp.path().join("a"))["samples.csv"],
        files(&tmp.path().join("b"))["samples.csv"]
    );
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let mut cfg = small_logistic(100, 2);
    cfg.repartition_per_chain = true;
    run_experiment(&cfg, &first).unwrap();
    let m = manifest(&first);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["seeds"]["chains"].as_array().unwrap().len(), 2);

    let second = tmp.path().join("second");
    rerun_from_manifest(&first.join(MANIFEST), &second).unwrap();
    assert_eq!(files(&first), files(&second));
    assert_eq!(m["outputs"], manifest(&second)["outputs"]);
}

#[test]
fn report_needs_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let err = report(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::MissingManifest(_)));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn report_has_per_chain_and_pooled_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(2000);
    cfg.chains = 2;
    run_experiment(&cfg, tmp.path()).unwrap();
    let r = report(tmp.path()).unwrap();
    for needle in ["gossip-et, chain 0", "gossip-et, chain 1", "gossip-et, pooled", "%gos", "%ET", "sliced"] {
        assert!(r.text.contains(needle), "report lacks `{needle}`:\n{}", r.text);
    }
    let curve = fs::read_to_string(tmp.path().join("consensus_error_vs_k.csv")).unwrap();
    assert!(curve.starts_with("engine,k,mean,min,max,chains"));
    assert!(curve.lines().nth(1).unwrap().ends_with(",2"));
    assert!(tmp.path().join("report.txt").exists());
}

#[test]
fn logistic_run_emits_accuracy_curves_keyed_by_updates() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run_experiment(&small_logistic(150, 1), tmp.path()).unwrap();
    let acc = result.accuracy.as_ref().unwrap();
    let matched = acc.matched_updates.unwrap();
    assert!(matched > 30.0 && matched < 70.0, "{matched}");
    for engine in [Engine::Synchronous, Engine::Centralized] {
        let f = acc
            .finals
            .iter()
            .find(|f| f.engine == engine && f.basis == AccuracyBasis::MatchedUpdates)
            .unwrap();
        assert!(f.updates as f64 <= matched);
    }
    report(tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("accuracy_vs_updates.csv")).unwrap();
    assert!(text.starts_with("engine,updates_from,updates_to,mean_accuracy,points"));
    for engine in ["gossip-et", "synchronous", "centralized", "isolated"] {
        assert!(text.contains(engine));
    }
}

#[test]
fn complete_graph_logistic_variant_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_logistic(100, 1);
    cfg.engines = vec![Engine::GossipEventTriggered];
    cfg.graph = GraphSpec {
        kind: GraphKind::Complete,
        n: Some(6),
        file: None,
    };
    let result = run_experiment(&cfg, tmp.path()).unwrap();
    assert_eq!(result.status, RunStatus::Complete);
    assert_eq!(result.traces[0].ticks, 100);
}

#[test]
fn out_of_range_beta_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(100);
    cfg.sampler.beta = 1.5;
    let err = run_experiment(&cfg, &tmp.path().join("never")).unwrap_err();
    assert!(err.to_string().contains("beta(1-beta) < 1/(2 lambda_(n-1))"), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!tmp.path().join("never").exists());
}

#[test]
fn synchronous_engine_on_the_mixture() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(2000);
    cfg.engines = vec![Engine::GossipEventTriggered, Engine::Synchronous];
    let result = run_experiment(&cfg, tmp.path()).unwrap();
    let sync = result.traces_of(Engine::Synchronous)[0];
    assert!(sync.comm.iter().all(|c| c.active == 2000));
    let gossip = result.traces_of(Engine::GossipEventTriggered)[0];
    let mean: f64 = gossip.comm.iter().map(|c| c.active as f64).sum::<f64>() / 5.0;
    assert!((mean - 800.0).abs() < 80.0, "{mean}");
    let w = result.wasserstein.as_ref().unwrap();
    assert_eq!(w.entries.len(), 10);
}

#[test]
fn missing_dataset_is_reported_with_a_pointer() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_logistic(10, 1);
    cfg.model = match cfg.model {
        ModelSpec::Logistic {
            train_fraction,
            concentration,
            prior_variance,
            standardize,
            bias,
            ..
        } => ModelSpec::Logistic {
            data_file: tmp.path().join("absent.data"),
            train_fraction,
            concentration,
            prior_variance,
            standardize,
            bias,
        },
        other => other,
    };
    let err = run_experiment(&cfg, &tmp.path().join("out")).unwrap_err();
    assert!(matches!(err, Error::MissingData { .. }));
    assert!(err.to_string().contains("archive.ics.uci.edu"));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn divergence_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(5000);
    cfg.sampler.alpha = 10.0;
    let err = run_experiment(&cfg, tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }));
    assert_eq!(err.exit_code(), 3);
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "diverged");
    assert!(m["error"].as_str().unwrap().contains("diverged"));
    assert!(tmp.path().join("metrics.csv").exists());
}

#[test]
fn event_log_has_one_line_per_tick() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_gm(300);
    cfg.sampler.log_events = true;
    run_experiment(&cfg, tmp.path()).unwrap();
    let log = fs::read_to_string(tmp.path().join("events_gossip-et_0.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 300);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["k"], 0);
}
