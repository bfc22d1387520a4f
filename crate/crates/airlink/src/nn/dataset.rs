//! Labeled datasets: synthetic Gaussian blobs and headerless CSV ingestion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::network::Matrix;
use crate::rng::Rng;

/// Feature matrix plus integer class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            classes,
        })
    }

    /// Samples `n` points from `classes` Gaussian blobs in 2D. Blob centers
    /// sit on a circle of radius 2; `spread` is the per-coordinate standard
    /// deviation. Classes are assigned round-robin so counts are balanced.
    pub fn blobs(n: usize, classes: usize, spread: f64, seed: u64) -> Result<Self> {
        if n == 0 || classes == 0 {
            return Err(Error::Empty("blobs need n >= 1 and classes >= 1".into()));
        }
        let mut rng = Rng::new(seed).split(0xb10b);
        let mut features = Matrix::zeros(n, 2);
        let mut labels = Vec::with_capacity(n);
        for s in 0..n {
            let class = s % classes;
            let angle = std::f64::consts::TAU * class as f64 / classes as f64;
            let cx = 2.0 * angle.cos();
            let cy = 2.0 * angle.sin();
            features.set(s, 0, rng.gaussian(cx, spread));
            features.set(s, 1, rng.gaussian(cy, spread));
            labels.push(class);
        }
        Dataset::new(features, labels, classes)
    }

    /// Loads a headerless CSV where each row is `f` features followed by an
    /// integer label.
    pub fn from_csv(path: &Path, features: usize, classes: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != features + 1 {
                return Err(Error::Format(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    features + 1,
                    fields.len()
                )));
            }
            let mut row = Vec::with_capacity(features);
            for f in &fields[..features] {
                row.push(f.parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: bad feature '{f}'", lineno + 1))
                })?);
            }
            let label: usize = fields[features].parse().map_err(|_| {
                Error::Format(format!(
                    "line {}: bad label '{}'",
                    lineno + 1,
                    fields[features]
                ))
            })?;
            rows.push(row);
            labels.push(label);
        }
        if rows.is_empty() {
            return Err(Error::Empty(format!("no samples in {}", path.display())));
        }
        Dataset::new(Matrix::from_rows(&rows), labels, classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Extracts the subset at `indices` (cloning rows).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Matrix::zeros(indices.len(), self.feature_dim());
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            features.row_mut(r).copy_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            classes: self.classes,
        }
    }

    /// Deterministic shuffled mini-batch index plan for one epoch.
    pub fn batch_indices(&self, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        rng.shuffle(&mut order);
        order
            .chunks(batch_size.max(1))
            .map(<[usize]>::to_vec)
            .collect()
    }
}
