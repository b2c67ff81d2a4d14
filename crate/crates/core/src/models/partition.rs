use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

const MAX_RESAMPLES: usize = 100;

/// Random permutation of `0..count` cut into `n_agents` contiguous blocks.
/// When `count` is not divisible, the lowest-indexed agents receive one
/// extra item each.
pub fn partition_equal<R: Rng + ?Sized>(count: usize, n_agents: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if n_agents == 0 {
        return Err(Error::param("n_agents", "must be positive"));
    }
    if n_agents > count {
        return Err(Error::InsufficientData(format!(
            "{count} items cannot give each of {n_agents} agents a non-empty shard"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(rng);
    let base = count / n_agents;
    let extra = count % n_agents;
    let mut shards = Vec::with_capacity(n_agents);
    let mut start = 0;
    for agent in 0..n_agents {
        let len = base + usize::from(agent < extra);
        shards.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(shards)
}

/// Label-skewed split: for every class, agent proportions are drawn from a
/// symmetric Dirichlet with the given concentration and that class's
/// shuffled items are cut accordingly. Small concentrations give strongly
/// heterogeneous shards; large ones approach a uniform split. Draws are
/// repeated (up to 100 times) until every shard is non-empty.
pub fn partition_heterogeneous<R: Rng + ?Sized>(
    labels: &[f64],
    n_agents: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::param(
            "concentration",
            format!("must be positive and finite, got {concentration}"),
        ));
    }
    if n_agents == 0 {
        return Err(Error::param("n_agents", "must be positive"));
    }
    if n_agents > labels.len() {
        return Err(Error::InsufficientData(format!(
            "{} items cannot give each of {n_agents} agents a non-empty shard",
            labels.len()
        )));
    }
    let mut classes: Vec<f64> = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::param("concentration", e.to_string()))?;

    for _ in 0..MAX_RESAMPLES {
        let mut shards = vec![Vec::new(); n_agents];
        for &class in &classes {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            idx.shuffle(rng);
            let draws: Vec<f64> = (0..n_agents).map(|_| gamma.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            let mut cum = 0.0;
            let mut start = 0;
            for (agent, g) in draws.iter().enumerate() {
                cum += g / total;
                let end = if agent + 1 == n_agents {
                    idx.len()
                } else {
                    ((cum * idx.len() as f64).round() as usize).clamp(start, idx.len())
                };
                shards[agent].extend_from_slice(&idx[start..end]);
                start = end;
            }
        }
        if shards.iter().all(|s| !s.is_empty()) {
            for s in &mut shards {
                s.sort_unstable();
            }
            return Ok(shards);
        }
    }
    Err(Error::InsufficientData(format!(
        "no non-empty {n_agents}-way split found after {MAX_RESAMPLES} Dirichlet draws \
         (concentration {concentration}); raise the concentration"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn assert_exact_cover(shards: &[Vec<usize>], count: usize) {
        let mut all: Vec<usize> = shards.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..count).collect::<Vec<_>>());
    }

    #[test]
    fn equal_split_sizes() {
        let s = partition_equal(100, 5, &mut stream(1, Stream::Partition, 0)).unwrap();
        assert!(s.iter().all(|x| x.len() == 20));
        assert_exact_cover(&s, 100);
        let s = partition_equal(10, 3, &mut stream(1, Stream::Partition, 0)).unwrap();
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 3, 3]);
        assert_exact_cover(&s, 10);
        assert!(matches!(
            partition_equal(3, 4, &mut stream(1, Stream::Partition, 0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn equal_split_is_seeded() {
        let a = partition_equal(50, 4, &mut stream(9, Stream::Partition, 0)).unwrap();
        let b = partition_equal(50, 4, &mut stream(9, Stream::Partition, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heterogeneous_split_covers_and_is_seeded() {
        let labels: Vec<f64> = (0..500).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let a = partition_heterogeneous(&labels, 6, 0.5, &mut stream(4, Stream::Partition, 0)).unwrap();
        let b = partition_heterogeneous(&labels, 6, 0.5, &mut stream(4, Stream::Partition, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| !s.is_empty()));
        assert_exact_cover(&a, 500);
    }

    #[test]
    fn impossible_split_errors() {
        assert!(partition_heterogeneous(&[1.0, -1.0], 3, 0.5, &mut stream(4, Stream::Partition, 0)).is_err());
        assert!(partition_heterogeneous(&[1.0; 10], 3, 0.0, &mut stream(4, Stream::Partition, 0)).is_err());
    }

    #[test]
    fn large_concentration_approaches_uniform_class_mix() {
        // 19020 items with the MAGIC class balance (12332 / 6688), 6 agents.
        let labels: Vec<f64> = (0..19_020).map(|i| if i < 12_332 { 1.0 } else { -1.0 }).collect();
        let s = partition_heterogeneous(&labels, 6, 1e4, &mut stream(8, Stream::Partition, 0)).unwrap();
        let global = 12_332.0 / 19_020.0;
        for shard in &s {
            let pos = shard.iter().filter(|&&i| labels[i] > 0.0).count() as f64 / shard.len() as f64;
            assert!((pos - global).abs() < 0.02, "{pos} vs {global}");
        }
    }
}
