//! Retained posterior draws and the quantities computed from them.

use super::tree::FrozenTree;
use super::{BartError, MoveStats};
use serde::Serialize;

/// Linear map between the original response and the internal
/// `[-0.5, 0.5]` scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResponseScaling {
    pub mid: f64,
    pub range: f64,
}

impl ResponseScaling {
    pub fn to_scaled(&self, y: f64) -> f64 {
        (y - self.mid) / self.range
    }

    pub fn to_original(&self, y_scaled: f64) -> f64 {
        y_scaled * self.range + self.mid
    }
}

/// One retained posterior draw: the frozen ensemble, its split counts, and
/// the noise variance (on the internal scale).
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    pub(crate) sigma2_scaled: f64,
    pub(crate) split_counts: Vec<u32>,
    pub(crate) total_splits: u32,
    pub(crate) trees: Vec<FrozenTree>,
}

impl PosteriorDraw {
    pub fn split_counts(&self) -> &[u32] {
        &self.split_counts
    }

    pub fn total_splits(&self) -> u32 {
        self.total_splits
    }
}

/// The fitted model: retained draws plus cached train predictions.
#[derive(Debug, Clone)]
pub struct BartPosterior {
    pub(crate) draws: Vec<PosteriorDraw>,
    pub(crate) scaling: ResponseScaling,
    pub(crate) num_features: usize,
    pub(crate) train_prediction: Vec<f64>,
    pub(crate) move_stats: MoveStats,
}

impl BartPosterior {
    pub(crate) fn from_parts(
        draws: Vec<PosteriorDraw>,
        scaling: ResponseScaling,
        num_features: usize,
        train_prediction: Vec<f64>,
        move_stats: MoveStats,
    ) -> BartPosterior {
        for d in &draws {
            debug_assert_eq!(
                d.split_counts.iter().copied().sum::<u32>(),
                d.total_splits
            );
        }
        BartPosterior {
            draws,
            scaling,
            num_features,
            train_prediction,
            move_stats,
        }
    }

    pub fn num_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn draws(&self) -> &[PosteriorDraw] {
        &self.draws
    }

    /// Noise-variance draws in original response units.
    pub fn sigma2_draws(&self) -> Vec<f64> {
        let r2 = self.scaling.range * self.scaling.range;
        self.draws.iter().map(|d| d.sigma2_scaled * r2).collect()
    }

    /// Posterior-mean prediction on the training design, in original units.
    pub fn train_prediction(&self) -> &[f64] {
        &self.train_prediction
    }

    pub fn move_stats(&self) -> &MoveStats {
        &self.move_stats
    }

    /// Posterior-mean prediction on new rows, in original units.
    pub fn predict(&self, x_new: &crate::Matrix) -> Result<Vec<f64>, BartError> {
        if x_new.cols() != self.num_features {
            return Err(BartError::DimensionMismatch {
                trained: self.num_features,
                got: x_new.cols(),
            });
        }
        let n_draws = self.draws.len() as f64;
        let mut out = Vec::with_capacity(x_new.rows());
        for row in x_new.iter_rows() {
            let mut acc = 0.0;
            for draw in &self.draws {
                let mut s = 0.0;
                for tree in &draw.trees {
                    s += tree.eval(row);
                }
                acc += s;
            }
            out.push(self.scaling.to_original(acc / n_draws));
        }
        Ok(out)
    }

    /// Variable-inclusion proportions: per draw, the fraction of ensemble
    /// splits using each feature (all zeros for a split-free draw), averaged
    /// over draws.
    pub fn vip(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.num_features];
        for draw in &self.draws {
            if draw.total_splits == 0 {
                continue;
            }
            let total = draw.total_splits as f64;
            for (a, &c) in acc.iter_mut().zip(&draw.split_counts) {
                *a += c as f64 / total;
            }
        }
        let n = self.draws.len() as f64;
        for a in &mut acc {
            *a /= n;
        }
        acc
    }

    /// Serializable per-draw diagnostics: noise variance (original units)
    /// and the split-count matrix.
    pub fn diagnostics(&self) -> PosteriorDiagnostics {
        PosteriorDiagnostics {
            num_features: self.num_features,
            sigma2: self.sigma2_draws(),
            split_counts: self.draws.iter().map(|d| d.split_counts.clone()).collect(),
            total_splits: self.draws.iter().map(|d| d.total_splits).collect(),
            move_stats: self.move_stats.clone(),
        }
    }
}

/// JSON-friendly posterior dump consumed by selection diagnostics and
/// rank plots.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorDiagnostics {
    pub num_features: usize,
    pub sigma2: Vec<f64>,
    pub split_counts: Vec<Vec<u32>>,
    pub total_splits: Vec<u32>,
    pub move_stats: MoveStats,
}
