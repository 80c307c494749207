//! VIP-rank variable screening.
//!
//! The screening rule fits `K` independent BART models, ranks features
//! within each run by variable-inclusion proportion (rank 1 = largest VIP,
//! midranks on exact ties), averages ranks across runs, and splits the `p`
//! average ranks into two clusters. The cluster with the smaller mean is the
//! selected set.
//!
//! The rationale is a rank-distribution argument: features driving the
//! response occupy the top ranks in every run, so their average rank
//! concentrates near `(1 + p0) / 2`, while idle features land essentially
//! uniformly across the remaining ranks and concentrate near
//! `(p0 + 1 + p) / 2`. The two groups separate even though `p0` is unknown,
//! which is exactly what the cluster cut recovers —
//! [`rank_distribution_check`] quantifies how closely a run matches that
//! model. The rule is deliberately tuned for screening before symbolic
//! regression: a missed relevant feature is unrecoverable downstream, so
//! when in doubt the low-mean cluster errs large (false positives merely
//! cost compute).

mod cluster;

pub use cluster::{ahc_two_cluster, gmm_two_cluster, kmeans_two_cluster, TwoClusters};

use crate::bart::{fit_bart, BartConfig, BartError};
use crate::data::Matrix;
use crate::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("clustering needs at least 2 values, got {0}")]
    TooFewFeatures(usize),
    #[error("need at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("BART run failed: {0}")]
    Bart(#[from] BartError),
    #[error("rank matrix column {column} sums to {sum}, expected {expected}")]
    BadRankColumn {
        column: usize,
        sum: f64,
        expected: f64,
    },
}

/// Descending ranks of a VIP vector: the largest VIP gets rank 1; exact
/// ties receive the midrank of their positions.
pub fn rank_vips(vips: &[f64]) -> Vec<f64> {
    let p = vips.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| vips[b].partial_cmp(&vips[a]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; p];
    let mut i = 0;
    while i < p {
        let mut j = i;
        while j + 1 < p && vips[order[j + 1]] == vips[order[i]] {
            j += 1;
        }
        // Positions i..=j (1-based i+1..=j+1) share the midrank.
        let mid = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Per-run VIP ranks, `p` features by `K` runs.
#[derive(Debug, Clone, Serialize)]
pub struct RankMatrix {
    p: usize,
    runs: usize,
    /// Run-major: run k occupies `data[k*p .. (k+1)*p]`.
    data: Vec<f64>,
}

impl RankMatrix {
    /// Builds from per-run rank columns, checking each column sums to
    /// `p(p+1)/2` (midranks preserve the sum of a full permutation).
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<RankMatrix, SelectError> {
        let runs = columns.len();
        let p = columns.first().map_or(0, Vec::len);
        let expected = (p * (p + 1)) as f64 / 2.0;
        let mut data = Vec::with_capacity(p * runs);
        for (k, col) in columns.iter().enumerate() {
            let sum: f64 = col.iter().sum();
            if (sum - expected).abs() > 1e-6 * expected.max(1.0) {
                return Err(SelectError::BadRankColumn {
                    column: k,
                    sum,
                    expected,
                });
            }
            data.extend_from_slice(col);
        }
        Ok(RankMatrix { p, runs, data })
    }

    pub fn num_features(&self) -> usize {
        self.p
    }

    pub fn num_runs(&self) -> usize {
        self.runs
    }

    /// Rank of feature `j` in run `k`.
    pub fn rank(&self, j: usize, k: usize) -> f64 {
        self.data[k * self.p + j]
    }

    /// Average rank of each feature across runs.
    pub fn average_ranks(&self) -> Vec<f64> {
        let mut avg = vec![0.0; self.p];
        for k in 0..self.runs {
            for j in 0..self.p {
                avg[j] += self.data[k * self.p + j];
            }
        }
        for a in &mut avg {
            *a /= self.runs as f64;
        }
        avg
    }
}

/// Which two-cluster algorithm splits the average ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterAlgo {
    /// Agglomerative hierarchical clustering, average linkage (the default).
    Ahc,
    /// k-means++ ablation arm.
    Kmeans,
    /// Two-component Gaussian mixture ablation arm.
    Gmm,
}

impl std::str::FromStr for ClusterAlgo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ahc" | "upgma" => Ok(ClusterAlgo::Ahc),
            "kmeans" | "k-means" => Ok(ClusterAlgo::Kmeans),
            "gmm" => Ok(ClusterAlgo::Gmm),
            other => Err(format!("unknown clustering algorithm `{other}`")),
        }
    }
}

/// Screening configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PanConfig {
    /// Number of independent BART runs (K).
    pub runs: usize,
    pub bart: BartConfig,
    pub cluster: ClusterAlgo,
    pub seed: u64,
}

impl Default for PanConfig {
    fn default() -> Self {
        PanConfig {
            runs: 10,
            bart: BartConfig::default(),
            cluster: ClusterAlgo::Ahc,
            seed: 0,
        }
    }
}

/// Echo of the settings that produced a [`SelectionResult`].
#[derive(Debug, Clone, Serialize)]
pub struct PanEcho {
    pub runs: usize,
    pub cluster: ClusterAlgo,
    pub seed: u64,
}

/// Screening outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    /// Average VIP rank of each feature.
    pub avg_ranks: Vec<f64>,
    /// Cluster label per feature; 0 is the low-mean cluster.
    pub labels: Vec<usize>,
    pub low_cluster_mean: f64,
    pub high_cluster_mean: f64,
    /// Selected feature indices (ascending).
    pub selected: Vec<usize>,
    /// VIP vector of each run.
    pub per_run_vips: Vec<Vec<f64>>,
    /// Set when clustering carried no information and the rule fell back to
    /// keeping everything.
    pub degenerate: bool,
    pub warning: Option<String>,
    pub config: PanEcho,
}

/// Runs the full screening rule: K independent BART fits, VIP ranking,
/// rank averaging, a two-cluster split, and selection of the low-mean
/// cluster.
pub fn run_pan(x: &Matrix, y: &[f64], cfg: &PanConfig) -> Result<SelectionResult, SelectError> {
    if cfg.runs < 2 {
        return Err(SelectError::TooFewRuns(cfg.runs));
    }
    let p = x.cols();
    let per_run_vips: Vec<Vec<f64>> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| {
            let mut bart_cfg = cfg.bart.clone();
            bart_cfg.seed = derive_seed(cfg.seed, k as u64);
            fit_bart(x, y, &bart_cfg).map(|post| post.vip())
        })
        .collect::<Result<_, _>>()?;

    let ranks = RankMatrix::from_columns(per_run_vips.iter().map(|v| rank_vips(v)).collect())?;
    let avg_ranks = ranks.average_ranks();
    let echo = PanEcho {
        runs: cfg.runs,
        cluster: cfg.cluster,
        seed: cfg.seed,
    };

    if p == 1 {
        return Ok(SelectionResult {
            avg_ranks,
            labels: vec![0],
            low_cluster_mean: 1.0,
            high_cluster_mean: f64::NAN,
            selected: vec![0],
            per_run_vips,
            degenerate: true,
            warning: Some("single feature: clustering degenerate, selected by default".into()),
            config: echo,
        });
    }

    let clusters = match cfg.cluster {
        ClusterAlgo::Ahc => ahc_two_cluster(&avg_ranks)?,
        ClusterAlgo::Kmeans => kmeans_two_cluster(&avg_ranks, derive_seed(cfg.seed, u64::MAX))?,
        ClusterAlgo::Gmm => gmm_two_cluster(&avg_ranks, derive_seed(cfg.seed, u64::MAX))?,
    };

    if clusters.degenerate {
        // No usable separation. The screening criterion prefers false
        // positives over false negatives, so keep everything and say so.
        return Ok(SelectionResult {
            avg_ranks,
            labels: vec![0; p],
            low_cluster_mean: clusters.cluster_mean(&avg_ranks, 0),
            high_cluster_mean: clusters.cluster_mean(&avg_ranks, 1),
            selected: (0..p).collect(),
            per_run_vips,
            degenerate: true,
            warning: Some("degenerate clustering: all features retained".into()),
            config: echo,
        });
    }

    let selected: Vec<usize> = clusters
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 0)
        .map(|(j, _)| j)
        .collect();
    Ok(SelectionResult {
        avg_ranks: avg_ranks.clone(),
        low_cluster_mean: clusters.cluster_mean(&avg_ranks, 0),
        high_cluster_mean: clusters.cluster_mean(&avg_ranks, 1),
        labels: clusters.labels,
        selected,
        per_run_vips,
        degenerate: false,
        warning: None,
        config: echo,
    })
}

/// Summary of one rank class (relevant or irrelevant features).
#[derive(Debug, Clone, Serialize)]
pub struct RankClassSummary {
    pub count: usize,
    pub mean_rank: f64,
    /// Mean under the uniform rank model: `(1+p0)/2` for relevant features,
    /// `(p0+1+p)/2` for irrelevant ones.
    pub expected_mean: f64,
    pub relative_deviation: f64,
}

/// Comparison of observed average ranks against the uniform rank model.
#[derive(Debug, Clone, Serialize)]
pub struct RankModelReport {
    pub relevant: Option<RankClassSummary>,
    pub irrelevant: Option<RankClassSummary>,
    /// (feature index, average rank, is_relevant) for every feature.
    pub per_feature: Vec<(usize, f64, bool)>,
}

/// Checks the empirical rank distribution against the uniform model given
/// the oracle relevant set `s0` (synthetic data only).
pub fn rank_distribution_check(ranks: &RankMatrix, s0: &[usize]) -> RankModelReport {
    let p = ranks.num_features();
    let p0 = s0.len();
    let avg = ranks.average_ranks();
    let relevant_expected = (1 + p0) as f64 / 2.0;
    let irrelevant_expected = (p0 + 1 + p) as f64 / 2.0;

    let is_relevant = |j: usize| s0.contains(&j);
    let summarize = |relevant: bool, expected: f64| {
        let picked: Vec<f64> = (0..p)
            .filter(|&j| is_relevant(j) == relevant)
            .map(|j| avg[j])
            .collect();
        if picked.is_empty() {
            return None;
        }
        let mean_rank = picked.iter().sum::<f64>() / picked.len() as f64;
        Some(RankClassSummary {
            count: picked.len(),
            mean_rank,
            expected_mean: expected,
            relative_deviation: (mean_rank - expected).abs() / expected,
        })
    };

    RankModelReport {
        relevant: summarize(true, relevant_expected),
        irrelevant: summarize(false, irrelevant_expected),
        per_feature: (0..p).map(|j| (j, avg[j], is_relevant(j))).collect(),
    }
}

#[cfg(test)]
mod tests;
