//! Communication graphs and the quantities the gossip protocol derives from
//! them: per-agent activation probabilities, per-edge activation
//! probabilities, the expected gossip Laplacian and its spectral gap.
//!
//! At every universal tick one agent `i` is chosen uniformly among the `n`
//! agents and picks a neighbour `j` uniformly from `N(i)`. Edge `{i, j}` is
//! therefore active with probability `(1/n)(1/|N(i)| + 1/|N(j)|)` and agent
//! `i` participates with probability `p_i = (1/n)(1 + sum_{j in N(i)} 1/|N(j)|)`.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static, connected, undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidTopology(format!(
                "a ring needs at least 3 agents, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "a complete graph needs at least 2 agents, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// Star with agent 0 as the hub.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "a star needs at least 2 agents, got {n}"
            )));
        }
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "a path needs at least 2 agents, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges)
    }

    /// Validates an undirected edge list. Edges may be given in either
    /// orientation; duplicates (in either orientation), self-loops and
    /// out-of-range endpoints are rejected, as are disconnected graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "at least 2 agents are required, got {n}"
            )));
        }
        let mut seen = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a == b {
                return Err(Error::MalformedEdge(a, b, "self-loop".into()));
            }
            if a >= n || b >= n {
                return Err(Error::MalformedEdge(
                    a,
                    b,
                    format!("endpoint out of range for n = {n}"),
                ));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::MalformedEdge(a, b, "duplicate edge".into()));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let components = count_components(&neighbors);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(Self {
            n,
            neighbors,
            edges: seen.into_iter().collect(),
        })
    }

    /// Parses the edge-list text format: first non-empty line `n`, then one
    /// whitespace-separated `i j` pair per line (0-indexed). Lines starting
    /// with `#` are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    reason: format!("`{s}`: {e}"),
                })
            };
            match (n, fields.as_slice()) {
                (None, [count]) => n = Some(parse(count)?),
                (None, _) => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "expected the agent count on the first line".into(),
                    })
                }
                (Some(_), [a, b]) => edges.push((parse(a)?, parse(b)?)),
                (Some(_), _) => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("expected `i j`, got {} fields", fields.len()),
                    })
                }
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            reason: "empty edge list".into(),
        })?;
        Self::from_edges(n, &edges)
    }

    pub fn from_edge_list_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    /// Random connected graph: a uniformly shuffled spanning path plus each
    /// remaining pair independently with probability `extra`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra: f64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "at least 2 agents are required, got {n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut set: BTreeSet<(usize, usize)> = order
            .windows(2)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < extra {
                    set.insert((i, j));
                }
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }

    /// Probability that edge `{i, j}` is the active pair at a given tick.
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        (1.0 / self.degree(i) as f64 + 1.0 / self.degree(j) as f64) / self.n as f64
    }

    /// Activation probabilities of all edges, aligned with [`Graph::edges`].
    pub fn edge_probabilities(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(i, j)| self.edge_probability(i, j))
            .collect()
    }

    pub fn activation_profile(&self) -> ActivationProfile {
        activation_probabilities(self)
    }
}

fn count_components(neighbors: &[Vec<usize>]) -> usize {
    let n = neighbors.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationProfile {
    pub p: Vec<f64>,
    pub p_min: f64,
}

pub fn activation_probabilities(g: &Graph) -> ActivationProfile {
    let n = g.n() as f64;
    let p: Vec<f64> = (0..g.n())
        .map(|i| {
            let inv: f64 = g
                .neighbors(i)
                .iter()
                .map(|&j| 1.0 / g.degree(j) as f64)
                .sum();
            (1.0 + inv) / n
        })
        .collect();
    let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
    ActivationProfile { p, p_min }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// `E[L_k] = sum_edges P(edge) (e_i - e_j)(e_i - e_j)^T`.
    pub expected_laplacian: DMatrix<f64>,
    /// Eigenvalues of the expected Laplacian in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Second-smallest eigenvalue (algebraic connectivity of `E[L_k]`).
    pub lambda_n_minus_1: f64,
}

impl SpectralSummary {
    /// Contraction factor `1 - 2 beta (1 - beta) lambda_(n-1)`.
    pub fn lambda_contraction(&self, beta: f64) -> Result<f64> {
        contraction_from_gap(self.lambda_n_minus_1, beta)
    }
}

pub fn expected_laplacian(g: &Graph) -> SpectralSummary {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let p = g.edge_probability(i, j);
        l[(i, i)] += p;
        l[(j, j)] += p;
        l[(i, j)] -= p;
        l[(j, i)] -= p;
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(l.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    SpectralSummary {
        expected_laplacian: l,
        lambda_n_minus_1: eigenvalues[1],
        eigenvalues,
    }
}

pub fn lambda_contraction(g: &Graph, beta: f64) -> Result<f64> {
    expected_laplacian(g).lambda_contraction(beta)
}

pub(crate) fn contraction_from_gap(lambda_n_minus_1: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
    }
    Ok(1.0 - 2.0 * beta * (1.0 - beta) * lambda_n_minus_1)
}

/// Exact `E ||W_k x||^2` over the active pair, where
/// `W_k = I - beta (e_i - e_j)(e_i - e_j)^T` acts on every coordinate of the
/// per-agent vectors in `x` (`x[agent][coordinate]`). Computed by enumerating
/// every edge with its activation probability.
pub fn expected_mixing_energy(g: &Graph, beta: f64, x: &[Vec<f64>]) -> f64 {
    let base: f64 = x.iter().flatten().map(|v| v * v).sum();
    g.edges()
        .iter()
        .map(|&(i, j)| {
            let p = g.edge_probability(i, j);
            // Only rows i and j change: x_i - beta (x_i - x_j), x_j + beta (x_i - x_j).
            let delta: f64 = x[i]
                .iter()
                .zip(&x[j])
                .map(|(&a, &b)| {
                    let d = a - b;
                    let na = a - beta * d;
                    let nb = b + beta * d;
                    na * na + nb * nb - a * a - b * b
                })
                .sum();
            p * (base + delta)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ring_neighbors_and_degrees() {
        let g = Graph::ring(5).unwrap();
        assert_eq!(g.neighbors(0), &[1, 4]);
        assert!((0..5).all(|i| g.degree(i) == 2));
        let g6 = Graph::ring(6).unwrap();
        assert_eq!(g6.edges().len(), 6);
        assert_eq!(Graph::ring(3).unwrap(), Graph::complete(3).unwrap());
        assert!(matches!(Graph::ring(2), Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn complete_graph_edges() {
        assert_eq!(Graph::complete(2).unwrap().edges(), &[(0, 1)]);
        assert_eq!(Graph::complete(4).unwrap().edges().len(), 6);
        assert!(Graph::complete(4).unwrap().neighbors(2).len() == 3);
        assert!(matches!(Graph::complete(1), Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn edge_list_validation() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.neighbors(1), &[0, 2]);
        assert!(matches!(
            Graph::from_edges(4, &[(0, 1), (2, 3)]),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 0)]),
            Err(Error::MalformedEdge(0, 0, _))
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]),
            Err(Error::MalformedEdge(..))
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 3)]),
            Err(Error::MalformedEdge(..))
        ));
    }

    #[test]
    fn edge_list_text_round_trip() {
        let g = Graph::ring(5).unwrap();
        let text = g.to_edge_list();
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        let parsed = Graph::parse_edge_list("# comment\n3\n0 1\n\n1 2\n").unwrap();
        assert_eq!(parsed.edges(), &[(0, 1), (1, 2)]);
        let err = Graph::parse_edge_list("3\n0 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(
            Graph::parse_edge_list("3\n0 1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn activation_probability_examples() {
        let ring = Graph::ring(5).unwrap().activation_profile();
        for p in &ring.p {
            assert_close!(*p, 0.4, 1e-15);
        }
        let complete = Graph::complete(4).unwrap().activation_profile();
        for p in &complete.p {
            assert_close!(*p, 0.5, 1e-15);
        }
        let star = Graph::star(4).unwrap().activation_profile();
        assert_close!(star.p[0], 1.0, 1e-15);
        for p in &star.p[1..] {
            assert_close!(*p, 1.0 / 3.0, 1e-15);
        }
        assert_close!(star.p_min, 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn expected_laplacian_ring_matches_closed_form() {
        let g = Graph::ring(5).unwrap();
        let s = expected_laplacian(&g);
        for p in g.edge_probabilities() {
            assert_close!(p, 0.2, 1e-15);
        }
        let scaled = g.laplacian() * 0.2;
        assert!((&s.expected_laplacian - scaled).abs().max() < 1e-15);
        // Cycle eigenvalues 2 - 2cos(2 pi k / n), scaled by the edge probability.
        let mut closed: Vec<f64> = (0..5)
            .map(|k| 0.2 * (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / 5.0).cos()))
            .collect();
        closed.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&closed) {
            assert_close!(*a, *b, 1e-12);
        }
        assert_close!(s.lambda_n_minus_1, 0.276_393_202_250_021, 1e-12);
    }

    #[test]
    fn expected_laplacian_single_edge() {
        let s = expected_laplacian(&Graph::complete(2).unwrap());
        assert_eq!(s.expected_laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_close!(s.lambda_n_minus_1, 2.0, 1e-12);
        assert_close!(s.lambda_contraction(0.5).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn constant_vector_is_in_the_kernel() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 5, 8] {
            let g = Graph::random_connected(n, 0.3, &mut rng).unwrap();
            let s = expected_laplacian(&g);
            let ones = nalgebra::DVector::from_element(n, 1.0);
            assert!((&s.expected_laplacian * ones).amax() < 1e-14);
            assert!(s.eigenvalues[0].abs() < 1e-12);
            assert!(s.eigenvalues[1] > 1e-9, "connected graph must have a simple zero eigenvalue");
        }
    }

    #[test]
    fn contraction_examples() {
        let g = Graph::ring(5).unwrap();
        let lam = lambda_contraction(&g, 0.1).unwrap();
        assert_close!(lam, 1.0 - 0.18 * 0.276_393_202_250_021, 1e-12);
        assert_close!(lam, 0.950_249, 1e-6);
        assert!(lambda_contraction(&g, 1e-9).unwrap() > 1.0 - 1e-8);
        assert!(lambda_contraction(&g, 0.0).is_err());
        assert!(lambda_contraction(&g, 1.0).is_err());
    }

    #[test]
    fn mixing_energy_matches_dense_expectation() {
        // E[W^T W] = I - 2 beta (1 - beta) E[L_k]
        let g = Graph::star(4).unwrap();
        let beta = 0.3;
        let x = vec![vec![1.0, -2.0], vec![0.5, 0.0], vec![-1.0, 1.5], vec![2.0, 0.25]];
        let l = expected_laplacian(&g).expected_laplacian;
        let m = DMatrix::identity(4, 4) - l * (2.0 * beta * (1.0 - beta));
        let dense: f64 = (0..2)
            .map(|c| {
                let col = nalgebra::DVector::from_iterator(4, x.iter().map(|r| r[c]));
                (col.transpose() * &m * &col)[(0, 0)]
            })
            .sum();
        assert_close!(expected_mixing_energy(&g, beta, &x), dense, 1e-12);
    }
}
