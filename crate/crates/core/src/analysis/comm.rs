use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sampler::RunTrace;

/// Per-agent communication summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommRow {
    pub agent: usize,
    /// Ticks in which the agent was active.
    pub gos: u64,
    /// `gos / ticks`, in percent.
    pub pct_gos: f64,
    /// Broadcasts sent.
    pub et: u64,
    /// `et / gos`, in percent; 0 when the agent was never active.
    pub pct_et: f64,
    pub never_active: bool,
}

fn row(agent: usize, gos: f64, et: f64, ticks: f64) -> CommRow {
    let never_active = gos == 0.0;
    CommRow {
        agent,
        gos: gos.round() as u64,
        pct_gos: if ticks > 0.0 { 100.0 * gos / ticks } else { 0.0 },
        et: et.round() as u64,
        pct_et: if never_active { 0.0 } else { 100.0 * et / gos },
        never_active,
    }
}

pub fn comm_stats(trace: &RunTrace) -> Vec<CommRow> {
    trace
        .comm
        .iter()
        .enumerate()
        .map(|(a, c)| row(a, c.active as f64, c.broadcasts as f64, trace.ticks as f64))
        .collect()
}

/// Per-agent sums over chains; percentages are ratios of the pooled counts.
pub fn pooled_comm_stats(traces: &[RunTrace]) -> Vec<CommRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let ticks: u64 = traces.iter().map(|t| t.ticks).sum();
    (0..first.comm.len())
        .map(|a| {
            let gos: u64 = traces.iter().map(|t| t.comm[a].active).sum();
            let et: u64 = traces.iter().map(|t| t.comm[a].broadcasts).sum();
            row(a, gos as f64, et as f64, ticks as f64)
        })
        .collect()
}

/// Plain-text table with columns `agent gos %gos ET %ET`.
pub fn format_comm_table(rows: &[CommRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>5} {:>10} {:>7} {:>10} {:>7}", "agent", "gos", "%gos", "ET", "%ET");
    for r in rows {
        let flag = if r.never_active { "  (never active)" } else { "" };
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>6.1}% {:>10} {:>6.1}%{flag}",
            r.agent + 1,
            r.gos,
            r.pct_gos,
            r.et,
            r.pct_et
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{AgentComm, Engine};

    fn trace(comm: Vec<(u64, u64)>, ticks: u64) -> RunTrace {
        RunTrace {
            engine: Engine::GossipEventTriggered,
            chain: 0,
            ticks,
            consensus_error: Vec::new(),
            samples: Vec::new(),
            comm: comm
                .into_iter()
                .map(|(active, broadcasts)| AgentComm { active, broadcasts })
                .collect(),
            events: None,
            final_states: Vec::new(),
        }
    }

    #[test]
    fn percentages_and_never_active_flag() {
        let rows = comm_stats(&trace(vec![(40, 40), (60, 15), (0, 0)], 100));
        assert_close!(rows[0].pct_et, 100.0, 0.0);
        assert_close!(rows[1].pct_gos, 60.0, 1e-12);
        assert_close!(rows[1].pct_et, 25.0, 1e-12);
        assert!(rows[2].never_active);
        assert_eq!(rows[2].pct_et, 0.0);
        let table = format_comm_table(&rows);
        assert!(table.lines().next().unwrap().contains("%ET"));
        assert!(table.contains("never active"));
    }

    #[test]
    fn pooling_sums_counts() {
        let rows = pooled_comm_stats(&[trace(vec![(10, 5), (10, 1)], 10), trace(vec![(30, 5), (10, 9)], 30)]);
        assert_eq!(rows[0].gos, 40);
        assert_close!(rows[0].pct_gos, 100.0, 1e-12);
        assert_close!(rows[1].pct_et, 50.0, 1e-12);
    }
}
