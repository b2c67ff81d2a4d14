//! On-disk layout of a run.
//!
//! ```text
//! manifest.json        config echo, seeds, input hashes, status, output hashes
//! metrics.csv          engine,chain,tick,agent,metric,value
//! samples.csv          engine,chain,tick,agent,updates,w0..
//! comm_stats.csv       per chain and pooled
//! comm_table.txt
//! events_<engine>_<chain>.jsonl   with log_events
//! data.csv, grid.json, grid.bin, wasserstein.json      mixture runs
//! accuracy.csv, accuracy_final.csv                     logistic runs
//! initial_state.csv    ticks = 0 only
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::experiment::{sha256_hex, ExperimentResult, InputFile, Problem};
use crate::analysis::{comm_stats, format_comm_table, pooled_comm_stats, CommRow};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::sampler::{initial_samples, Engine, RunTrace};
use crate::topology::Graph;

pub const MANIFEST: &str = "manifest.json";

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<File>> {
    let path = dir.join(name);
    csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{other:?}")),
    })
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(name.to_string())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String> {
    write_text(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn flush(mut w: csv::Writer<File>, dir: &Path, name: &str) -> Result<String> {
    w.flush().map_err(|e| Error::io(dir.join(name), e))?;
    Ok(name.to_string())
}

fn w_header(dim: usize) -> Vec<String> {
    (0..dim).map(|k| format!("w{k}")).collect()
}

pub(crate) fn write_initial_states(
    dir: &Path,
    cfg: &ExperimentConfig,
    graph: &Graph,
    dim: usize,
) -> Result<Vec<String>> {
    let name = "initial_state.csv";
    let mut w = writer(dir, name)?;
    let mut header = vec!["chain".to_string(), "agent".to_string()];
    header.extend(w_header(dim));
    w.write_record(&header)?;
    for chain in 0..cfg.chains {
        for (agent, s) in initial_samples(cfg.seed, chain, graph.n(), dim).iter().enumerate() {
            let mut row = vec![chain.to_string(), agent.to_string()];
            row.extend(s.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    Ok(vec![flush(w, dir, name)?])
}

pub(crate) fn write_problem_data(dir: &Path, problem: &Problem) -> Result<Vec<String>> {
    let name = "data.csv";
    let mut w = writer(dir, name)?;
    match problem {
        Problem::GaussianMixture { data, shards, .. } => {
            w.write_record(["partition", "agent", "index", "x"])?;
            for (p, split) in shards.iter().enumerate() {
                for (agent, idx) in split.iter().enumerate() {
                    for &i in idx {
                        w.write_record([p.to_string(), agent.to_string(), i.to_string(), data[i].to_string()])?;
                    }
                }
            }
        }
        Problem::Logistic { shards, train, .. } => {
            // shard membership only; rows refer to the processed training set
            w.write_record(["partition", "agent", "index", "label"])?;
            for (p, split) in shards.iter().enumerate() {
                for (agent, idx) in split.iter().enumerate() {
                    for &i in idx {
                        w.write_record([p.to_string(), agent.to_string(), i.to_string(), train.label(i).to_string()])?;
                    }
                }
            }
        }
    }
    Ok(vec![flush(w, dir, name)?])
}

fn comm_rows(result: &ExperimentResult) -> Vec<(Engine, String, Vec<CommRow>)> {
    let mut out = Vec::new();
    for &engine in &result.config.engines {
        let traces: Vec<RunTrace> = result.traces_of(engine).into_iter().cloned().collect();
        for t in &traces {
            out.push((engine, t.chain.to_string(), comm_stats(t)));
        }
        if traces.len() > 1 {
            out.push((engine, "pooled".to_string(), pooled_comm_stats(&traces)));
        }
    }
    out
}

pub(crate) fn write_traces(dir: &Path, result: &ExperimentResult) -> Result<Vec<String>> {
    let mut outputs = Vec::new();

    let mut w = writer(dir, "metrics.csv")?;
    w.write_record(["engine", "chain", "tick", "agent", "metric", "value"])?;
    for t in &result.traces {
        let (e, c) = (t.engine.name(), t.chain.to_string());
        for (tick, err) in &t.consensus_error {
            w.write_record([e, &c, &tick.to_string(), "", "consensus_error", &err.to_string()])?;
        }
        for (agent, comm) in t.comm.iter().enumerate() {
            let (tick, agent) = (t.ticks.to_string(), agent.to_string());
            w.write_record([e, &c, &tick, &agent, "updates", &comm.active.to_string()])?;
            w.write_record([e, &c, &tick, &agent, "broadcasts", &comm.broadcasts.to_string()])?;
        }
    }
    outputs.push(flush(w, dir, "metrics.csv")?);

    let dim = result
        .traces
        .iter()
        .find_map(|t| t.samples.first().map(|s| s.w.len()))
        .unwrap_or(0);
    let mut w = writer(dir, "samples.csv")?;
    let mut header: Vec<String> = ["engine", "chain", "tick", "agent", "updates"].map(String::from).to_vec();
    header.extend(w_header(dim));
    w.write_record(&header)?;
    for t in &result.traces {
        for s in &t.samples {
            let mut row = vec![
                t.engine.name().to_string(),
                t.chain.to_string(),
                s.tick.to_string(),
                s.agent.to_string(),
                s.updates.to_string(),
            ];
            row.extend(s.w.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    outputs.push(flush(w, dir, "samples.csv")?);

    let tables = comm_rows(result);
    let mut w = writer(dir, "comm_stats.csv")?;
    w.write_record(["engine", "chain", "agent", "gos", "pct_gos", "et", "pct_et", "never_active"])?;
    let mut text = String::new();
    for (engine, chain, rows) in &tables {
        for r in rows {
            w.write_record([
                engine.name(),
                chain,
                &(r.agent + 1).to_string(),
                &r.gos.to_string(),
                &r.pct_gos.to_string(),
                &r.et.to_string(),
                &r.pct_et.to_string(),
                &r.never_active.to_string(),
            ])?;
        }
        let _ = writeln!(text, "[{} chain {chain}]", engine.name());
        text.push_str(&format_comm_table(rows));
        text.push('\n');
    }
    outputs.push(flush(w, dir, "comm_stats.csv")?);
    outputs.push(write_text(dir, "comm_table.txt", &text)?);

    for t in &result.traces {
        if let Some(events) = &t.events {
            let name = format!("events_{}_{}.jsonl", t.engine.name(), t.chain);
            let path = dir.join(&name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = BufWriter::new(file);
            for ev in events {
                serde_json::to_writer(&mut out, ev)?;
                out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            out.flush().map_err(|e| Error::io(&path, e))?;
            outputs.push(name);
        }
    }
    Ok(outputs)
}

pub(crate) fn write_analysis(dir: &Path, result: &ExperimentResult) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    if let Some(grid) = &result.grid {
        grid.save(dir, "grid")?;
        outputs.push("grid.json".to_string());
        outputs.push("grid.bin".to_string());
    }
    if let Some(report) = &result.wasserstein {
        outputs.push(write_json(dir, "wasserstein.json", report)?);
    }
    if let Some(report) = &result.accuracy {
        let mut w = writer(dir, "accuracy.csv")?;
        w.write_record(["engine", "chain", "agent", "tick", "updates", "accuracy"])?;
        for p in &report.curve {
            w.write_record([
                p.engine.name(),
                &p.chain.to_string(),
                &p.agent.to_string(),
                &p.tick.to_string(),
                &p.updates.to_string(),
                &p.accuracy.to_string(),
            ])?;
        }
        outputs.push(flush(w, dir, "accuracy.csv")?);

        let mut w = writer(dir, "accuracy_final.csv")?;
        w.write_record(["engine", "chain", "agent", "basis", "updates", "samples", "accuracy"])?;
        for f in &report.finals {
            let basis = match f.basis {
                super::experiment::AccuracyBasis::Final => "final",
                super::experiment::AccuracyBasis::MatchedUpdates => "matched-updates",
            };
            w.write_record([
                f.engine.name(),
                &f.chain.to_string(),
                &f.agent.to_string(),
                basis,
                &f.updates.to_string(),
                &f.samples.to_string(),
                &f.accuracy.to_string(),
            ])?;
        }
        outputs.push(flush(w, dir, "accuracy_final.csv")?);
    }
    Ok(outputs)
}

fn stream_ids(chain: u32) -> serde_json::Value {
    let id = |s: Stream| ((chain as u64) << 8) | s as u64;
    json!({
        "chain": chain,
        "schedule": id(Stream::Schedule),
        "noise": id(Stream::Noise),
        "init": id(Stream::Init),
        "partition": id(Stream::Partition),
    })
}

pub(crate) fn write_manifest(
    dir: &Path,
    result: &ExperimentResult,
    problem: &Problem,
    outputs: &[String],
    error: Option<&Error>,
) -> Result<PathBuf> {
    let mut hashes = serde_json::Map::new();
    for name in outputs {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hashes.insert(name.clone(), json!(sha256_hex(&bytes)));
    }
    let inputs: Vec<InputFile> = problem.inputs();
    let manifest = json!({
        "toolkit": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": result.config,
        "seeds": {
            "master": result.config.seed,
            "shared": { "data": Stream::Data as u64, "split": Stream::Split as u64, "reference": Stream::Reference as u64 },
            "chains": (0..result.config.chains).map(stream_ids).collect::<Vec<_>>(),
        },
        "inputs": inputs,
        "status": result.status,
        "error": error.map(|e| e.to_string()),
        "wall_time_s": result.wall_time_s,
        "outputs": hashes,
    });
    let path = dir.join(MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
