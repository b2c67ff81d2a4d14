//! Diagnostics over traces and the closed-form constants of the consensus
//! and convergence bounds.

mod comm;
mod gradient;
mod grid;
mod theory;
mod wasserstein;

pub use comm::{comm_stats, format_comm_table, pooled_comm_stats, CommRow};
pub use gradient::{estimate_c_xi, estimate_mu_g, expected_gossip_gradient, gossip_noise};
pub use grid::{grid_posterior, PosteriorGrid};
pub use theory::{
    check_conditions, evaluate_kl_bound, recursion_bound, recursion_t_bar, theory_constants, ConditionReport, KlBound,
    KlBoundInputs, KlCase, RecursionBound, TheoryConstants, TheoryInputs,
};
pub use wasserstein::{random_directions, wasserstein1_1d, wasserstein_projected, wasserstein_sliced};

use crate::error::{Error, Result};
use crate::models::{sigmoid, Dataset};

/// `||w_tilde||^2 = sum_i ||w_i - w_bar||^2` with `w_bar` the agent mean.
pub fn consensus_error(states: &[Vec<f64>]) -> f64 {
    let n = states.len();
    if n == 0 {
        return 0.0;
    }
    let d = states[0].len();
    let mut mean = vec![0.0; d];
    for s in states {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    states
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(v, m)| (v - m).powi(2)).sum::<f64>())
        .sum()
}

/// Posterior-predictive accuracy: for each test row the predictive
/// probability is the mean of `sigmoid(<x, w>)` over the samples, and the
/// prediction is `+1` when it exceeds 0.5 (exact ties go to `-1`).
pub fn accuracy(samples: &[Vec<f64>], test: &Dataset) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("accuracy (samples)"));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("accuracy (test set)"));
    }
    if samples.iter().any(|w| w.len() != test.dim()) {
        return Err(Error::param(
            "samples",
            format!("dimension does not match the test set ({})", test.dim()),
        ));
    }
    let correct = test
        .rows()
        .filter(|(x, y)| {
            let p = samples
                .iter()
                .map(|w| sigmoid(x.iter().zip(w).map(|(a, b)| a * b).sum()))
                .sum::<f64>()
                / samples.len() as f64;
            let pred = if p > 0.5 { 1.0 } else { -1.0 };
            pred == *y
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn consensus_error_examples() {
        assert_eq!(consensus_error(&vec![vec![1.5, -2.0]; 4]), 0.0);
        assert_close!(consensus_error(&[vec![3.0, 4.0], vec![-3.0, -4.0]]), 50.0, 1e-12);
    }

    #[test]
    fn consensus_error_matches_projection_matrix() {
        let mut rng = stream(5, Stream::Init, 0);
        for n in 2..7 {
            let d = 3;
            let states: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect())
                .collect();
            let m = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            let big = m.kronecker(&DMatrix::<f64>::identity(d, d));
            let stacked = DVector::from_iterator(n * d, states.iter().flatten().copied());
            let oracle = (big * stacked).norm_squared();
            assert_close!(consensus_error(&states), oracle, 1e-12);
        }
    }

    fn toy_test_set() -> Dataset {
        // two positives, one negative
        Dataset::new(2, vec![1.0, 0.0, 2.0, 1.0, -1.0, 0.5], vec![1.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn zero_weights_predict_negative() {
        let acc = accuracy(&vec![vec![0.0, 0.0]; 3], &toy_test_set()).unwrap();
        assert_close!(acc, 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn separable_set_is_perfect_and_flipping_complements() {
        let test = Dataset::new(1, vec![1.0, -1.0], vec![1.0, -1.0]).unwrap();
        let samples = vec![vec![5.0], vec![4.0]];
        assert_eq!(accuracy(&samples, &test).unwrap(), 1.0);

        let set = toy_test_set();
        let samples = vec![vec![0.3, -1.0], vec![1.0, 0.2]];
        let a = accuracy(&samples, &set).unwrap();
        let flipped = Dataset::new(2, set.rows().flat_map(|(x, _)| x.to_vec()).collect(), set.labels().iter().map(|y| -y).collect())
            .unwrap();
        let b = accuracy(&samples, &flipped).unwrap();
        assert_close!(a + b, 1.0, 1e-15);
    }

    #[test]
    fn accuracy_rejects_empty_input() {
        assert!(matches!(accuracy(&[], &toy_test_set()), Err(Error::EmptyInput(_))));
        assert!(accuracy(&[vec![0.0]], &toy_test_set()).is_err());
    }
}
