//! Evaluation metrics: predictive accuracy, model complexity, the symbolic
//! solution criterion, and feature-usage accuracy.
//!
//! A candidate model counts as a symbolic solution when it differs from the
//! ground truth only by an additive constant or a nonzero multiplicative
//! constant, and is not itself constant. Constancy is certified numerically
//! on a seeded sample of domain points with a relative-range test (a
//! structural fast path catches exact differences), because exact symbolic
//! proof is out of scope for the bounded simplifier.

use crate::expr::{simplify, BinaryOp, Expr};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

/// Default constancy tolerance for noiseless ground truth.
pub const DEFAULT_TOL_NOISELESS: f64 = 1e-6;
/// Default constancy tolerance when the response carries noise.
pub const DEFAULT_TOL_NOISY: f64 = 1e-3;

/// Domain points sampled by the solution check.
const SOLUTION_SAMPLES: usize = 1000;
/// Fixed sampling seed: verdicts are deterministic for given inputs.
const SOLUTION_SEED: u64 = 0x50_1u64;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations")]
    TooFew,
    #[error("response has zero variance")]
    ZeroVariance,
    #[error("no valid sample points: both expressions undefined everywhere sampled")]
    NoValidSamples,
    #[error("bounds cover {bounds} variables but the expressions use {needed}")]
    BoundsTooNarrow { bounds: usize, needed: usize },
    #[error("feature index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },
}

/// Coefficient of determination `1 - SS_res / SS_tot`; can be negative.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64, MetricsError> {
    if y.len() != yhat.len() {
        return Err(MetricsError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.len() < 2 {
        return Err(MetricsError::TooFew);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let ss_res: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// How a model matched the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionMode {
    /// `fhat - f0` is constant.
    Difference,
    /// `fhat / f0` is a nonzero constant.
    Ratio,
    /// Not a solution.
    None,
}

/// Outcome of the symbolic-solution check.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionVerdict {
    pub is_solution: bool,
    pub mode: SolutionMode,
    /// The fitted additive (`a`) or multiplicative (`b`) constant.
    pub constant: Option<f64>,
    /// Relative range of the residual that was tested for constancy.
    pub constancy_residual: f64,
    /// Whether the model itself is non-constant over the sampled domain.
    pub non_constant_model: bool,
}

impl SolutionVerdict {
    fn not_a_solution(non_constant_model: bool, residual: f64) -> SolutionVerdict {
        SolutionVerdict {
            is_solution: false,
            mode: SolutionMode::None,
            constant: None,
            constancy_residual: residual,
            non_constant_model,
        }
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Relative-range constancy test: `(max - min, median)`; constant when
/// `max - min <= tol * (1 + |median|)`.
fn spread(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = sorted[sorted.len() - 1] - sorted[0];
    (range, median(&sorted))
}

fn is_constant(values: &[f64], tol: f64) -> (bool, f64, f64) {
    let (range, med) = spread(values);
    let rel = range / (1.0 + med.abs());
    (range <= tol * (1.0 + med.abs()), rel, med)
}

/// Checks whether `fhat` is a symbolic solution for ground truth `f0` on
/// the box given by per-variable `bounds`.
pub fn is_solution(
    fhat: &Expr,
    f0: &Expr,
    bounds: &[(f64, f64)],
    tol: f64,
) -> Result<SolutionVerdict, MetricsError> {
    let needed = fhat.arity().max(f0.arity());
    if bounds.len() < needed {
        return Err(MetricsError::BoundsTooNarrow {
            bounds: bounds.len(),
            needed,
        });
    }

    // Seeded sample of domain points where both sides are defined.
    let mut rng = ChaCha8Rng::seed_from_u64(SOLUTION_SEED);
    let mut fhat_vals = Vec::new();
    let mut f0_vals = Vec::new();
    let mut row = vec![0.0; bounds.len()];
    for _ in 0..SOLUTION_SAMPLES {
        for (slot, &(a, b)) in row.iter_mut().zip(bounds) {
            *slot = rng.gen_range(a..b);
        }
        if let (Some(fh), Some(f)) = (fhat.eval(&row), f0.eval(&row)) {
            fhat_vals.push(fh);
            f0_vals.push(f);
        }
    }
    if fhat_vals.is_empty() {
        return Err(MetricsError::NoValidSamples);
    }

    // A model that reduces to a constant is never a solution.
    let (model_constant, model_rel, _) = is_constant(&fhat_vals, tol);
    if model_constant {
        return Ok(SolutionVerdict::not_a_solution(false, model_rel));
    }

    // Structural fast path: an exactly-constant difference.
    if let Expr::Constant(a) = simplify(&Expr::binary(BinaryOp::Sub, fhat.clone(), f0.clone())) {
        return Ok(SolutionVerdict {
            is_solution: true,
            mode: SolutionMode::Difference,
            constant: Some(a),
            constancy_residual: 0.0,
            non_constant_model: true,
        });
    }

    // Numeric difference mode.
    let diffs: Vec<f64> = fhat_vals
        .iter()
        .zip(&f0_vals)
        .map(|(a, b)| a - b)
        .collect();
    let (diff_constant, diff_rel, diff_med) = is_constant(&diffs, tol);
    if diff_constant {
        return Ok(SolutionVerdict {
            is_solution: true,
            mode: SolutionMode::Difference,
            constant: Some(diff_med),
            constancy_residual: diff_rel,
            non_constant_model: true,
        });
    }

    // Ratio mode on points where the ground truth is safely away from zero.
    let ratios: Vec<f64> = fhat_vals
        .iter()
        .zip(&f0_vals)
        .filter(|(_, f)| f.abs() > tol)
        .map(|(a, b)| a / b)
        .collect();
    if !ratios.is_empty() {
        let (ratio_constant, ratio_rel, ratio_med) = is_constant(&ratios, tol);
        if ratio_constant && ratio_med.abs() > tol {
            return Ok(SolutionVerdict {
                is_solution: true,
                mode: SolutionMode::Ratio,
                constant: Some(ratio_med),
                constancy_residual: ratio_rel,
                non_constant_model: true,
            });
        }
    }

    Ok(SolutionVerdict::not_a_solution(true, diff_rel))
}

/// Confusion counts and rates of feature usage against the oracle set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UsageReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Scores the variables used by a model (after simplification) against the
/// oracle relevant set `s0` in a dataset with `p` columns.
pub fn feature_usage(fhat: &Expr, s0: &[usize], p: usize) -> Result<UsageReport, MetricsError> {
    let used = fhat.variables_used();
    usage_from_sets(&used, s0, p)
}

/// Scores an arbitrary used/selected index set against the oracle set; this
/// is the same accounting applied to screening results.
pub fn usage_from_sets(
    used: &BTreeSet<usize>,
    s0: &[usize],
    p: usize,
) -> Result<UsageReport, MetricsError> {
    for &j in used.iter().chain(s0) {
        if j >= p {
            return Err(MetricsError::IndexOutOfRange { index: j, p });
        }
    }
    let s0: BTreeSet<usize> = s0.iter().copied().collect();
    let tp = used.intersection(&s0).count();
    let fp = used.difference(&s0).count();
    let fn_ = s0.difference(used).count();
    let tn = p - tp - fp - fn_;
    let rate = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    };
    Ok(UsageReport {
        tp,
        fp,
        fn_,
        tn,
        // Vacuously perfect recall when there is nothing to recover.
        tpr: rate(tp, s0.len(), 1.0),
        fpr: rate(fp, p - s0.len(), 0.0),
        fnr: rate(fn_, s0.len(), 0.0),
    })
}

/// Convenience form of [`usage_from_sets`] for selected-index slices.
pub fn usage_from_selected(
    selected: &[usize],
    s0: &[usize],
    p: usize,
) -> Result<UsageReport, MetricsError> {
    usage_from_sets(&selected.iter().copied().collect(), s0, p)
}

#[cfg(test)]
mod tests;
