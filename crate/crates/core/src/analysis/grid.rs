//! Reference posterior for two-dimensional models, tabulated on a grid.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PosteriorModel;

const LEAK_RATIO: f64 = 1e-6;
const MIN_RESOLUTION: usize = 100;

/// `exp(-E(w))` on the cell centres of a regular grid over
/// `[lo0, hi0] x [lo1, hi1]`, stored row-major with axis 0 outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub resolution: [usize; 2],
    /// `-E` at each cell centre.
    pub log_density: Vec<f64>,
    /// `ln sum_cells exp(-E) * cell_area`.
    pub log_normalizer: f64,
    probabilities: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    lo: [f64; 2],
    hi: [f64; 2],
    resolution: [usize; 2],
    log_normalizer: f64,
    layout: String,
}

/// Tabulates the full-data posterior of a two-parameter model.
pub fn grid_posterior<M: PosteriorModel + ?Sized>(
    model: &M,
    lo: [f64; 2],
    hi: [f64; 2],
    resolution: [usize; 2],
) -> Result<PosteriorGrid> {
    if model.dim() != 2 {
        return Err(Error::param("model", format!("grid posteriors need d_w = 2, got {}", model.dim())));
    }
    if resolution.iter().any(|&r| r < MIN_RESOLUTION) {
        return Err(Error::param(
            "resolution",
            format!("need at least {MIN_RESOLUTION} cells per axis, got {resolution:?}"),
        ));
    }
    if !(lo[0] < hi[0] && lo[1] < hi[1]) {
        return Err(Error::param("ranges", "lower bounds must be below upper bounds"));
    }
    let mut grid = PosteriorGrid {
        lo,
        hi,
        resolution,
        log_density: Vec::with_capacity(resolution[0] * resolution[1]),
        log_normalizer: 0.0,
        probabilities: Vec::new(),
    };
    for a in 0..resolution[0] {
        let x = grid.center(0, a);
        for b in 0..resolution[1] {
            let e = model.full_energy(&[x, grid.center(1, b)]);
            if e.is_nan() {
                return Err(Error::NumericDomain("grid_posterior"));
            }
            grid.log_density.push(-e);
        }
    }
    grid.normalize();
    grid.check_leak()?;
    Ok(grid)
}

impl PosteriorGrid {
    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.resolution[axis] as f64
    }

    pub fn center(&self, axis: usize, idx: usize) -> f64 {
        self.lo[axis] + (idx as f64 + 0.5) * self.cell_width(axis)
    }

    pub fn centers(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution[axis]).map(|i| self.center(axis, i)).collect()
    }

    /// Cell probabilities (sum to one).
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    fn normalize(&mut self) {
        let max = self.log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = self.log_density.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let area = self.cell_width(0) * self.cell_width(1);
        self.log_normalizer = max + (total * area).ln();
        self.probabilities = probs;
    }

    fn check_leak(&self) -> Result<()> {
        let [r0, r1] = self.resolution;
        let max = self.probabilities.iter().copied().fold(0.0, f64::max);
        let at = |a: usize, b: usize| self.probabilities[a * r1 + b];
        let side = |cells: &mut dyn Iterator<Item = f64>| cells.fold(0.0, f64::max) / max;
        let low0 = side(&mut (0..r1).map(|b| at(0, b)));
        let high0 = side(&mut (0..r1).map(|b| at(r0 - 1, b)));
        let low1 = side(&mut (0..r0).map(|a| at(a, 0)));
        let high1 = side(&mut (0..r0).map(|a| at(a, r1 - 1)));
        let ratio = low0.max(high0).max(low1).max(high1);
        if ratio < LEAK_RATIO {
            return Ok(());
        }
        let widen = |lo: f64, hi: f64, leak_lo: f64, leak_hi: f64| {
            let span = 0.5 * (hi - lo);
            (
                if leak_lo >= LEAK_RATIO { lo - span } else { lo },
                if leak_hi >= LEAK_RATIO { hi + span } else { hi },
            )
        };
        let (lo0, hi0) = widen(self.lo[0], self.hi[0], low0, high0);
        let (lo1, hi1) = widen(self.lo[1], self.hi[1], low1, high1);
        Err(Error::GridLeak {
            ratio,
            suggest_lo0: lo0,
            suggest_hi0: hi0,
            suggest_lo1: lo1,
            suggest_hi1: hi1,
        })
    }

    /// Marginal cell probabilities along `axis`.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let [r0, r1] = self.resolution;
        let mut out = vec![0.0; self.resolution[axis]];
        for a in 0..r0 {
            for b in 0..r1 {
                out[if axis == 0 { a } else { b }] += self.probabilities[a * r1 + b];
            }
        }
        out
    }

    pub fn mean(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for (axis, slot) in m.iter_mut().enumerate() {
            *slot = self.marginal(axis).iter().zip(self.centers(axis)).map(|(p, x)| p * x).sum();
        }
        m
    }

    /// Covariance matrix with the within-cell uniform variance `h^2/12` added
    /// on the diagonal.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let mean = self.mean();
        let [r0, r1] = self.resolution;
        let mut c = [[0.0; 2]; 2];
        for a in 0..r0 {
            let dx = self.center(0, a) - mean[0];
            for b in 0..r1 {
                let dy = self.center(1, b) - mean[1];
                let p = self.probabilities[a * r1 + b];
                c[0][0] += p * dx * dx;
                c[0][1] += p * dx * dy;
                c[1][1] += p * dy * dy;
            }
        }
        c[1][0] = c[0][1];
        c[0][0] += self.cell_width(0).powi(2) / 12.0;
        c[1][1] += self.cell_width(1).powi(2) / 12.0;
        c
    }

    /// Independent draws by inverse CDF over the flattened cells, uniformly
    /// jittered inside the chosen cell.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let mut cdf = Vec::with_capacity(self.probabilities.len());
        let mut acc = 0.0;
        for p in &self.probabilities {
            acc += p;
            cdf.push(acc);
        }
        let r1 = self.resolution[1];
        let last = cdf.len() - 1;
        (0..count)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(last);
                let (a, b) = (idx / r1, idx % r1);
                vec![
                    self.lo[0] + (a as f64 + rng.random::<f64>()) * self.cell_width(0),
                    self.lo[1] + (b as f64 + rng.random::<f64>()) * self.cell_width(1),
                ]
            })
            .collect()
    }

    /// Writes `<stem>.json` (ranges, resolution, normalizer) and `<stem>.bin`
    /// (little-endian f64 log-density, row-major, axis 0 outermost).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let header = GridHeader {
            lo: self.lo,
            hi: self.hi,
            resolution: self.resolution,
            log_normalizer: self.log_normalizer,
            layout: "f64-le row-major, axis 0 outer".into(),
        };
        let json = dir.join(format!("{stem}.json"));
        let bin = dir.join(format!("{stem}.bin"));
        fs::write(&json, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&json, e))?;
        let bytes: Vec<u8> = self.log_density.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
        Ok((json, bin))
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let json = dir.join(format!("{stem}.json"));
        let bin = dir.join(format!("{stem}.bin"));
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let header: GridHeader = serde_json::from_str(&text)?;
        let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let cells = header.resolution[0] * header.resolution[1];
        if bytes.len() != cells * 8 {
            return Err(Error::Config(format!(
                "{} holds {} bytes, expected {}",
                bin.display(),
                bytes.len(),
                cells * 8
            )));
        }
        let log_density = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut grid = Self {
            lo: header.lo,
            hi: header.hi,
            resolution: header.resolution,
            log_density,
            log_normalizer: 0.0,
            probabilities: Vec::new(),
        };
        grid.normalize();
        Ok(grid)
    }
}
