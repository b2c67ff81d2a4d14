//! Gossip event stream.
//!
//! Local Poisson clocks are not simulated in continuous time. Only their
//! order statistics matter: each universal tick belongs to an agent chosen
//! uniformly at random, and that agent picks a partner uniformly from its
//! neighbours. Ticks never coincide.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::topology::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GossipEvent {
    /// Universal tick index `k`.
    #[serde(rename = "k")]
    pub tick: u64,
    /// Agent whose local clock ticked.
    #[serde(rename = "i")]
    pub initiator: usize,
    /// Neighbour chosen by the initiator.
    #[serde(rename = "j")]
    pub partner: usize,
}

impl GossipEvent {
    /// The active pair as `(min, max)`.
    pub fn pair(&self) -> (usize, usize) {
        (
            self.initiator.min(self.partner),
            self.initiator.max(self.partner),
        )
    }

    pub fn involves(&self, agent: usize) -> bool {
        self.initiator == agent || self.partner == agent
    }
}

pub fn next_event<R: Rng + ?Sized>(graph: &Graph, tick: u64, rng: &mut R) -> GossipEvent {
    let initiator = rng.random_range(0..graph.n());
    let nbrs = graph.neighbors(initiator);
    let partner = nbrs[rng.random_range(0..nbrs.len())];
    GossipEvent {
        tick,
        initiator,
        partner,
    }
}

/// Per-agent count `tau_i` of ticks in which the agent was active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationCounters {
    pub tau: Vec<u64>,
    pub ticks: u64,
}

impl ActivationCounters {
    pub fn new(n: usize) -> Self {
        Self {
            tau: vec![0; n],
            ticks: 0,
        }
    }

    pub fn record(&mut self, event: &GossipEvent) {
        self.tau[event.initiator] += 1;
        self.tau[event.partner] += 1;
        self.ticks += 1;
    }
}

/// A graph-bound event source owning its random stream.
#[derive(Debug, Clone)]
pub struct Scheduler<R> {
    rng: R,
    tick: u64,
}

impl<R: Rng> Scheduler<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, tick: 0 }
    }

    pub fn next(&mut self, graph: &Graph) -> GossipEvent {
        let ev = next_event(graph, self.tick, &mut self.rng);
        self.tick += 1;
        ev
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn single_edge_always_pairs_the_two_agents() {
        let g = Graph::complete(2).unwrap();
        let mut s = Scheduler::new(stream(1, Stream::Schedule, 0));
        for _ in 0..100 {
            assert_eq!(s.next(&g).pair(), (0, 1));
        }
    }

    #[test]
    fn partner_is_a_neighbour() {
        let g = Graph::ring(7).unwrap();
        let mut s = Scheduler::new(stream(1, Stream::Schedule, 0));
        for k in 0..1000 {
            let ev = s.next(&g);
            assert_eq!(ev.tick, k);
            assert_ne!(ev.initiator, ev.partner);
            assert!(g.neighbors(ev.initiator).contains(&ev.partner));
        }
    }

    #[test]
    fn counters_track_pairs() {
        let mut c = ActivationCounters::new(4);
        c.record(&GossipEvent {
            tick: 0,
            initiator: 1,
            partner: 0,
        });
        assert_eq!(c.tau, vec![1, 1, 0, 0]);
        let g = Graph::star(4).unwrap();
        let mut s = Scheduler::new(stream(2, Stream::Schedule, 0));
        for _ in 0..99 {
            c.record(&s.next(&g));
        }
        assert_eq!(c.tau.iter().sum::<u64>(), 200);
        assert_eq!(c.tau[0], 99 + 1);
        assert!(c.tau.iter().all(|&t| t <= c.ticks));
    }

    #[test]
    fn same_seed_same_stream() {
        let g = Graph::ring(5).unwrap();
        let mut a = Scheduler::new(stream(3, Stream::Schedule, 0));
        let mut b = Scheduler::new(stream(3, Stream::Schedule, 0));
        for _ in 0..500 {
            assert_eq!(a.next(&g), b.next(&g));
        }
    }

    #[test]
    fn event_serializes_as_k_i_j() {
        let ev = GossipEvent {
            tick: 3,
            initiator: 1,
            partner: 2,
        };
        assert_eq!(serde_json::to_string(&ev).unwrap(), r#"{"k":3,"i":1,"j":2}"#);
    }
}
