//! Bayesian additive regression trees: a sum-of-trees model sampled by MCMC.
//!
//! The model is `y = sum_{m=1}^{M} T_m(x) + eps`, `eps ~ N(0, sigma^2 I)`,
//! with the canonical regularization priors: depth prior
//! `p(split at depth d) = alpha (1+d)^(-beta)`, leaf values
//! `mu ~ N(0, (0.5 / (k sqrt(M)))^2)` on the response rescaled to
//! `[-0.5, 0.5]`, and a scaled-inverse-chi-squared prior on `sigma^2`
//! calibrated so the sample standard deviation sits at the `q`-th prior
//! quantile.
//!
//! Beyond prediction, the fitted posterior exposes variable-inclusion
//! proportions (VIPs): per retained draw, the fraction of all ensemble
//! splits that use each feature, averaged across draws. VIPs drive the
//! screening procedure in [`crate::select`].

mod posterior;
mod sampler;
mod tree;

pub use posterior::{BartPosterior, PosteriorDiagnostics, PosteriorDraw, ResponseScaling};
pub use sampler::MoveStats;
pub use tree::{FrozenTree, SplitRule};

use crate::data::{sample_variance, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BartError {
    #[error("response has zero variance")]
    DegenerateResponse,
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error("need at least 10 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least one feature")]
    NoFeatures,
    #[error("y has {y} entries but X has {x} rows")]
    LengthMismatch { x: usize, y: usize },
    #[error("X has {got} columns but the model was trained on {trained}")]
    DimensionMismatch { trained: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Structural move mixture; probabilities must be positive and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProbabilities {
    pub grow: f64,
    pub prune: f64,
    pub change: f64,
}

impl Default for MoveProbabilities {
    fn default() -> Self {
        MoveProbabilities {
            grow: 0.28,
            prune: 0.28,
            change: 0.44,
        }
    }
}

/// Sampler configuration.
///
/// The default is the desk-scale setting (20 trees, 1000/1000 draws);
/// [`BartConfig::long_chain`] switches to the 10,000/10,000 schedule used
/// for final-quality runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BartConfig {
    /// Ensemble size M.
    pub num_trees: usize,
    pub burn_in: usize,
    /// Retained posterior draws.
    pub draws: usize,
    /// Depth-prior base, in (0, 1).
    pub alpha: f64,
    /// Depth-prior decay, >= 0.
    pub beta: f64,
    /// Leaf-prior tightness; larger k shrinks leaf values harder.
    pub k: f64,
    /// Noise-prior degrees of freedom.
    pub nu: f64,
    /// Noise-prior quantile placed at the data standard deviation.
    pub q: f64,
    pub moves: MoveProbabilities,
    pub seed: u64,
}

impl Default for BartConfig {
    fn default() -> Self {
        BartConfig {
            num_trees: 20,
            burn_in: 1000,
            draws: 1000,
            alpha: 0.95,
            beta: 2.0,
            k: 2.0,
            nu: 3.0,
            q: 0.9,
            moves: MoveProbabilities::default(),
            seed: 0,
        }
    }
}

impl BartConfig {
    /// The long-chain schedule (burn-in 10,000, draws 10,000).
    pub fn long_chain() -> BartConfig {
        BartConfig {
            burn_in: 10_000,
            draws: 10_000,
            ..BartConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), BartError> {
        let bad = |msg: &str| Err(BartError::InvalidConfig(msg.to_string()));
        if self.num_trees < 1 {
            return bad("num_trees must be >= 1");
        }
        if self.draws < 1 {
            return bad("draws must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.beta >= 0.0) {
            return bad("beta must be >= 0");
        }
        if !(self.k > 0.0) {
            return bad("k must be > 0");
        }
        if !(self.nu > 0.0) {
            return bad("nu must be > 0");
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad("q must lie in (0, 1)");
        }
        let m = &self.moves;
        if !(m.grow > 0.0 && m.prune > 0.0 && m.change > 0.0) {
            return bad("move probabilities must be positive");
        }
        if (m.grow + m.prune + m.change - 1.0).abs() > 1e-9 {
            return bad("move probabilities must sum to 1");
        }
        Ok(())
    }
}

/// Fits the sum-of-trees model by Gibbs sampling with Bayesian backfitting.
pub fn fit_bart(x: &Matrix, y: &[f64], cfg: &BartConfig) -> Result<BartPosterior, BartError> {
    cfg.validate()?;
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(BartError::LengthMismatch { x: n, y: y.len() });
    }
    if n < 10 {
        return Err(BartError::TooFewRows(n));
    }
    if p == 0 {
        return Err(BartError::NoFeatures);
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(BartError::NonFinite);
    }
    let (y_min, y_max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if y_max <= y_min {
        return Err(BartError::DegenerateResponse);
    }
    let scaling = ResponseScaling {
        mid: 0.5 * (y_min + y_max),
        range: y_max - y_min,
    };
    let y_scaled: Vec<f64> = y.iter().map(|&v| scaling.to_scaled(v)).collect();

    // Noise prior: place the scaled-response standard deviation at the q-th
    // prior quantile of sigma.
    let sigma_hat2 = sample_variance(&y_scaled);
    let chi2 = ChiSquared::new(cfg.nu).expect("validated nu");
    let lambda = sigma_hat2 * chi2.inverse_cdf(1.0 - cfg.q) / cfg.nu;
    let sigma_mu = 0.5 / (cfg.k * (cfg.num_trees as f64).sqrt());

    let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chain = sampler::Chain::new(
        x,
        &y_scaled,
        cfg.num_trees,
        cfg.alpha,
        cfg.beta,
        sigma_mu * sigma_mu,
        cfg.nu,
        lambda,
        sigma_hat2,
        (cfg.moves.grow, cfg.moves.prune, cfg.moves.change),
        rng,
    );

    for _ in 0..cfg.burn_in {
        chain.gibbs_iteration();
    }

    let mut draws = Vec::with_capacity(cfg.draws);
    let mut train_acc = vec![0.0; n];
    for _ in 0..cfg.draws {
        chain.gibbs_iteration();
        let mut split_counts = vec![0u32; p];
        let mut total_splits = 0;
        let trees: Vec<FrozenTree> = chain
            .trees
            .iter()
            .map(|t| {
                total_splits += t.count_splits(&mut split_counts);
                t.freeze()
            })
            .collect();
        chain.add_train_ensemble(&mut train_acc);
        draws.push(PosteriorDraw {
            sigma2_scaled: chain.sigma2,
            split_counts,
            total_splits,
            trees,
        });
    }

    let n_draws = cfg.draws as f64;
    let train_prediction = train_acc
        .iter()
        .map(|&acc| scaling.to_original(acc / n_draws))
        .collect();

    Ok(BartPosterior::from_parts(
        draws,
        scaling,
        p,
        train_prediction,
        chain.stats.clone(),
    ))
}

/// Posterior-mean prediction; free-function form of
/// [`BartPosterior::predict`].
pub fn predict(post: &BartPosterior, x_new: &Matrix) -> Result<Vec<f64>, BartError> {
    post.predict(x_new)
}

/// Variable-inclusion proportions; free-function form of
/// [`BartPosterior::vip`].
pub fn vip(post: &BartPosterior) -> Vec<f64> {
    post.vip()
}

#[cfg(test)]
mod tests;
