//! Summaries rebuilt from the files of a finished run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::artifacts::MANIFEST;
use crate::analysis::{format_comm_table, CommRow};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct CommLine {
    engine: String,
    chain: String,
    agent: usize,
    gos: u64,
    pct_gos: f64,
    et: u64,
    pct_et: f64,
    never_active: bool,
}

#[derive(Debug, Deserialize)]
struct MetricLine {
    engine: String,
    tick: u64,
    metric: String,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct AccuracyLine {
    engine: String,
    updates: u64,
    accuracy: f64,
}

#[derive(Debug, Deserialize)]
struct FinalLine {
    engine: String,
    chain: u32,
    basis: String,
    updates: u64,
    accuracy: f64,
}

/// Files written by [`report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub text: String,
    pub written: Vec<PathBuf>,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<Vec<T>>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path)?;
    Ok(Some(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Number of accuracy bins along the update axis.
const UPDATE_BINS: u64 = 40;

/// Writes `report.txt`, `consensus_error_vs_k.csv` and, for logistic runs,
/// `accuracy_vs_updates.csv` into `dir`.
pub fn report(dir: &Path) -> Result<ReportFiles> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(Error::MissingManifest(dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: serde_json::Value = serde_json::from_str(&text)?;
    let mut out = String::new();
    let mut written = Vec::new();
    let _ = writeln!(
        out,
        "run {} (seed {}, status {})",
        manifest["config"]["id"].as_str().unwrap_or("?"),
        manifest["config"]["seed"],
        manifest["status"].as_str().unwrap_or("?")
    );

    if let Some(lines) = read_csv::<CommLine>(&dir.join("comm_stats.csv"))? {
        let mut groups: BTreeMap<(String, String), Vec<CommRow>> = BTreeMap::new();
        for l in lines {
            groups.entry((l.engine, l.chain)).or_default().push(CommRow {
                agent: l.agent - 1,
                gos: l.gos,
                pct_gos: l.pct_gos,
                et: l.et,
                pct_et: l.pct_et,
                never_active: l.never_active,
            });
        }
        for ((engine, chain), rows) in &groups {
            let label = if chain == "pooled" { "pooled".to_string() } else { format!("chain {chain}") };
            let _ = writeln!(out, "\ncommunication, {engine}, {label}");
            out.push_str(&format_comm_table(rows));
        }
    }

    if let Some(lines) = read_csv::<MetricLine>(&dir.join("metrics.csv"))? {
        let mut by_tick: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for l in lines.into_iter().filter(|l| l.metric == "consensus_error") {
            by_tick.entry((l.engine, l.tick)).or_default().push(l.value);
        }
        let path = dir.join("consensus_error_vs_k.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["engine", "k", "mean", "min", "max", "chains"])?;
        for ((engine, k), v) in &by_tick {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            w.write_record([
                engine.as_str(),
                &k.to_string(),
                &mean(v).to_string(),
                &lo.to_string(),
                &hi.to_string(),
                &v.len().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if let Some(lines) = read_csv::<AccuracyLine>(&dir.join("accuracy.csv"))? {
        let max_updates = lines.iter().map(|l| l.updates).max().unwrap_or(0);
        let width = max_updates.div_ceil(UPDATE_BINS).max(1);
        let mut bins: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for l in lines {
            bins.entry((l.engine, l.updates / width * width)).or_default().push(l.accuracy);
        }
        let path = dir.join("accuracy_vs_updates.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["engine", "updates_from", "updates_to", "mean_accuracy", "points"])?;
        for ((engine, from), v) in &bins {
            w.write_record([
                engine.as_str(),
                &from.to_string(),
                &(from + width).to_string(),
                &mean(v).to_string(),
                &v.len().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if let Some(lines) = read_csv::<FinalLine>(&dir.join("accuracy_final.csv"))? {
        // (basis, engine, chain) -> (accuracies, updates)
        type Group = (Vec<f64>, Vec<f64>);
        let mut per_chain: BTreeMap<(String, String, u32), Group> = BTreeMap::new();
        for l in &lines {
            let e = per_chain.entry((l.basis.clone(), l.engine.clone(), l.chain)).or_default();
            e.0.push(l.accuracy);
            e.1.push(l.updates as f64);
        }
        let _ = writeln!(out, "\nposterior-predictive accuracy (mean over agents)");
        let _ = writeln!(out, "{:<16} {:<12} {:>7} {:>9} {:>10}", "basis", "engine", "chain", "accuracy", "updates");
        let mut pooled: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for ((basis, engine, chain), (acc, upd)) in &per_chain {
            let _ = writeln!(out, "{basis:<16} {engine:<12} {chain:>7} {:>9.4} {:>10.1}", mean(acc), mean(upd));
            pooled.entry((basis.clone(), engine.clone())).or_default().extend(acc);
        }
        for ((basis, engine), acc) in &pooled {
            let _ = writeln!(out, "{basis:<16} {engine:<12} {:>7} {:>9.4}", "pooled", mean(acc));
        }
    }

    let wpath = dir.join("wasserstein.json");
    if wpath.exists() {
        let text = std::fs::read_to_string(&wpath).map_err(|e| Error::io(&wpath, e))?;
        let report: super::experiment::WassersteinReport = serde_json::from_str(&text)?;
        let _ = writeln!(out, "\nW1 to the grid posterior (after {:.0}% burn-in)", 100.0 * report.burn_in_fraction);
        let _ = writeln!(out, "{:<12} {:>5} {:>5} {:>9} {:>9} {:>9}", "engine", "chain", "agent", "sliced", "w0", "w1");
        for e in &report.entries {
            let _ = writeln!(
                out,
                "{:<12} {:>5} {:>5} {:>9.4} {:>9.4} {:>9.4}",
                e.engine.name(),
                e.chain,
                e.agent + 1,
                e.sliced,
                e.marginal[0],
                e.marginal[1]
            );
        }
    }

    let path = dir.join("report.txt");
    std::fs::write(&path, &out).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(ReportFiles { text: out, written })
}
