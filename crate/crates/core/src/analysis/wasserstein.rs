use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// W1 between two empirical distributions on the line:
/// `integral |F_a(x) - F_b(x)| dx` over the merged sorted support.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wasserstein1_1d"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NumericDomain("wasserstein1_1d"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

/// Unit directions drawn uniformly on the sphere (normalized Gaussians).
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, Stream::Projection, 0);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 1e-12 {
                break v.into_iter().map(|x| x / len).collect();
            }
        })
        .collect()
}

/// Mean of the 1D W1 distances between projections onto `directions`.
pub fn wasserstein_projected(a: &[Vec<f64>], b: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wasserstein_projected"));
    }
    if directions.is_empty() {
        return Err(Error::param("n_projections", "must be at least 1"));
    }
    let dim = directions[0].len();
    if a.iter().chain(b).any(|w| w.len() != dim) {
        return Err(Error::param("samples", format!("all points must have dimension {dim}")));
    }
    let project = |pts: &[Vec<f64>], u: &[f64]| -> Vec<f64> {
        pts.iter()
            .map(|p| p.iter().zip(u).map(|(x, y)| x * y).sum())
            .collect()
    };
    let mut sum = 0.0;
    for u in directions {
        sum += wasserstein1_1d(&project(a, u), &project(b, u))?;
    }
    Ok(sum / directions.len() as f64)
}

/// Sliced W1 over `n_projections` random directions fixed by `seed`.
pub fn wasserstein_sliced(a: &[Vec<f64>], b: &[Vec<f64>], n_projections: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wasserstein_sliced"));
    }
    if n_projections == 0 {
        return Err(Error::param("n_projections", "must be at least 1"));
    }
    wasserstein_projected(a, b, &random_directions(a[0].len(), n_projections, seed))
}
