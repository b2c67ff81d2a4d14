use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major feature matrix with `+1 / -1` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::param(
                "features",
                format!(
                    "{} values do not form {} rows of dimension {dim}",
                    features.len(),
                    labels.len()
                ),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::param("labels", format!("labels must be +1 or -1, found {bad}")));
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            dim: self.dim,
            features,
            labels,
        }
    }

    /// Appends a constant-1 feature column.
    pub fn with_bias(&self) -> Self {
        let mut features = Vec::with_capacity(self.len() * (self.dim + 1));
        for (row, _) in self.rows() {
            features.extend_from_slice(row);
            features.push(1.0);
        }
        Self {
            dim: self.dim + 1,
            features,
            labels: self.labels.clone(),
        }
    }

    /// Fraction of `+1` labels.
    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&y| y > 0.0).count() as f64 / self.len() as f64
    }
}

/// Per-column affine standardization fitted on one dataset and applied to
/// others (so test data never leaks into the statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InsufficientData(
                "standardization needs at least two rows".into(),
            ));
        }
        let n = data.len() as f64;
        let mut mean = vec![0.0; data.dim()];
        for (row, _) in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; data.dim()];
        for (row, _) in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for row in out.features.chunks_exact_mut(out.dim) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Reads the MAGIC gamma telescope file: no header, ten numeric fields then
/// a class letter (`g` -> +1, `h` -> -1) per line. Features are returned raw;
/// fit a [`Standardizer`] on the training split.
pub fn load_magic_csv(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingData {
            path: path.to_path_buf(),
            hint: "download magic04.data from the UCI repository \
                   (https://archive.ics.uci.edu/dataset/159/magic+gamma+telescope) \
                   and point GOSSIP_ULA_DATA at its directory"
                .into(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    const FEATURES: usize = 10;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != FEATURES + 1 {
            return Err(Error::Schema {
                line,
                reason: format!("expected {} fields, found {}", FEATURES + 1, record.len()),
            });
        }
        for field in record.iter().take(FEATURES) {
            let v: f64 = field.parse().map_err(|e| Error::Parse {
                line,
                reason: format!("`{field}`: {e}"),
            })?;
            features.push(v);
        }
        labels.push(match &record[FEATURES] {
            "g" => 1.0,
            "h" => -1.0,
            other => {
                return Err(Error::Schema {
                    line,
                    reason: format!("class must be `g` or `h`, found `{other}`"),
                })
            }
        });
    }
    Dataset::new(FEATURES, features, labels)
}

/// Class-stratified split: within each label, a shuffled `train_fraction`
/// (rounded) of the rows goes to training. Returns sorted index lists.
pub fn stratified_split<R: Rng + ?Sized>(
    labels: &[f64],
    train_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(
            "train_fraction",
            format!("must lie in (0, 1), got {train_fraction}"),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let cut = (idx.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
