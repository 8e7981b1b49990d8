//! Delay embeddings and the supervised dataset fed to the network.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Delay-coordinate rows `[s_t, s_{t-delay}, ..., s_{t-(dim-1)delay}]`,
/// current value first. Row `i` ends at `s_i`.
pub fn delay_embed(series: &[f64], dim: usize, delay: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || delay == 0 {
        return Err(Error::Config(format!(
            "embedding needs dim >= 1 and delay >= 1, got dim={dim}, delay={delay}"
        )));
    }
    let span = (dim - 1) * delay;
    if series.len() < span + 1 {
        return Err(Error::InsufficientLength {
            needed: span + 1,
            got: series.len(),
        });
    }
    Ok((0..series.len() - span)
        .map(|i| (0..dim).map(|j| series[i + span - j * delay]).collect())
        .collect())
}

/// Samples `(Y_t, x_{t-1}) -> x_t` with the hidden `z_{t-1}` kept alongside.
///
/// Row `k` holds `y_embed = [y_{k+1}, y_k]`, `x_prev = x_k`,
/// `x_target = x_{k+1}` and `z_truth = z_k`. `z_truth` is never used as a
/// network input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddedDataset {
    pub y_embed: Vec<[f64; 2]>,
    pub x_prev: Vec<f64>,
    pub x_target: Vec<f64>,
    pub z_truth: Vec<f64>,
}

impl EmbeddedDataset {
    /// Builds a dataset from raw columns, checking that they line up.
    pub fn from_columns(
        y_embed: Vec<[f64; 2]>,
        x_prev: Vec<f64>,
        x_target: Vec<f64>,
        z_truth: Vec<f64>,
    ) -> Result<Self> {
        let n = y_embed.len();
        if x_prev.len() != n || x_target.len() != n || z_truth.len() != n {
            return Err(Error::Length(format!(
                "dataset columns differ in length: y_embed={n}, x_prev={}, x_target={}, z_truth={}",
                x_prev.len(),
                x_target.len(),
                z_truth.len()
            )));
        }
        Ok(Self {
            y_embed,
            x_prev,
            x_target,
            z_truth,
        })
    }

    pub fn len(&self) -> usize {
        self.y_embed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_embed.is_empty()
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            y_embed: self.y_embed[range.clone()].to_vec(),
            x_prev: self.x_prev[range.clone()].to_vec(),
            x_target: self.x_target[range.clone()].to_vec(),
            z_truth: self.z_truth[range].to_vec(),
        }
    }

    /// Appends `other` after `self`.
    pub fn concat(mut self, other: &Self) -> Self {
        self.y_embed.extend_from_slice(&other.y_embed);
        self.x_prev.extend_from_slice(&other.x_prev);
        self.x_target.extend_from_slice(&other.x_target);
        self.z_truth.extend_from_slice(&other.z_truth);
        self
    }
}

pub fn build_dataset(traj: &Trajectory) -> Result<EmbeddedDataset> {
    if traj.len() < 2 {
        return Err(Error::InsufficientLength {
            needed: 2,
            got: traj.len(),
        });
    }
    let y_embed = delay_embed(traj.y(), 2, 1)?
        .into_iter()
        .map(|row| [row[0], row[1]])
        .collect();
    let m = traj.len() - 1;
    Ok(EmbeddedDataset {
        y_embed,
        x_prev: traj.x()[..m].to_vec(),
        x_target: traj.x()[1..].to_vec(),
        z_truth: traj.z()[..m].to_vec(),
    })
}

/// Chronological split: the first `n_train` samples train, the rest test.
pub fn split(ds: &EmbeddedDataset, n_train: usize) -> Result<(EmbeddedDataset, EmbeddedDataset)> {
    if n_train == 0 || n_train >= ds.len() {
        return Err(Error::Bounds(format!(
            "n_train must lie in 1..{}, got {n_train}",
            ds.len()
        )));
    }
    Ok((ds.slice(0..n_train), ds.slice(n_train..ds.len())))
}

/// Training-set size that leaves `n_points / 2` samples for testing.
pub fn default_n_train(n_points: usize) -> usize {
    (n_points / 2).saturating_sub(1).max(1)
}
