//! Synthetic benchmark generation.
//!
//! Datasets come from a ground-truth equation: relevant features are drawn
//! iid uniform inside the equation's declared bounds, the response is the
//! equation value plus Gaussian noise tuned to a target signal-to-noise
//! ratio, and each relevant feature contributes `s` irrelevant look-alike
//! columns drawn from the same marginal. Columns are ordered
//! `[relevant, irrelevant copies of feature 1, ..., of feature p0]`, so the
//! oracle set is always the first `p0` indices.
//!
//! [`friedman_scenario`] generates the four predictor-structure stress
//! scenarios (baseline, noisy predictors, a duplicated predictor, and
//! AR(1)-correlated predictors) on the Friedman function.

mod io;
mod snr;

pub use io::{read_csv, write_csv};
pub use snr::Snr;

use crate::data::{sample_variance, Matrix};
use crate::expr::{EquationError, EquationSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use thiserror::Error;

/// Attempts to redraw a row whose ground-truth value is undefined before
/// giving up.
const RESAMPLE_ATTEMPTS: usize = 100;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("row {row}: ground truth undefined after {attempts} resampling attempts")]
    UndefinedRow { row: usize, attempts: usize },
    #[error("requested {requested} training rows but only {available} are available at train fraction {frac}")]
    InsufficientRows {
        requested: usize,
        available: usize,
        frac: f64,
    },
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error("dataset file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Predictor-structure scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Equation-based generation with irrelevant look-alike columns.
    Standard,
    /// Friedman response, all predictors iid Unif(0,1).
    Baseline,
    /// Predictors observed with additive Gaussian measurement noise.
    NoisyX,
    /// A redundant column `x6 = x1 + x2` inserted after the signals.
    DuplicatedX,
    /// Unif(0,1) marginals coupled through an AR(1) Gaussian copula.
    CorrelatedX,
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "standard" => Ok(Scenario::Standard),
            "baseline" => Ok(Scenario::Baseline),
            "noisyx" | "noisy" => Ok(Scenario::NoisyX),
            "duplicatedx" | "duplicated" => Ok(Scenario::DuplicatedX),
            "correlatedx" | "correlated" => Ok(Scenario::CorrelatedX),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// What to generate: an equation, a sample size, a noise level, and the
/// number of irrelevant copies per relevant feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub equation: EquationSpec,
    pub n: usize,
    pub snr: Snr,
    /// Irrelevant copies per relevant feature (`s`); total columns are
    /// `p0 * (1 + s)`.
    pub irrelevant_per_relevant: usize,
    pub seed: u64,
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
}

fn default_scenario() -> Scenario {
    Scenario::Standard
}

/// Generation provenance carried alongside the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    /// Ground-truth expression text, when known.
    pub expression: Option<String>,
    /// Ground-truth variable names (length p0).
    pub variables: Vec<String>,
    /// All column names, `x1..xp`.
    pub column_names: Vec<String>,
    pub p0: usize,
    pub s0: Vec<usize>,
    pub snr: Snr,
    pub sigma_f2: f64,
    pub sigma_eps2: f64,
    /// Sampling bounds of the relevant features.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub scenario: Scenario,
}

/// A generated dataset: design matrix, response, and provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    /// Oracle relevant column indices (0-based).
    pub fn s0(&self) -> &[usize] {
        &self.meta.s0
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Copy restricted to the listed columns (response unchanged). Used to
    /// hand a screened dataset to a regressor.
    pub fn restrict_columns(&self, keep: &[usize]) -> Dataset {
        let mut meta = self.meta.clone();
        meta.column_names = keep
            .iter()
            .map(|&j| self.meta.column_names[j].clone())
            .collect();
        meta.s0 = self
            .meta
            .s0
            .iter()
            .filter_map(|&orig| keep.iter().position(|&k| k == orig))
            .collect();
        Dataset {
            x: self.x.select_columns(keep),
            y: self.y.clone(),
            meta,
        }
    }
}

fn default_column_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// The Friedman benchmark function with its unit-box bounds.
pub fn friedman_equation() -> EquationSpec {
    EquationSpec::from_text(
        "friedman",
        "10*sin(pi*x1*x2) + 20*(x3-0.5)**2 + 10*x4 + 5*x5",
        vec![(0.0, 1.0); 5],
    )
    .expect("builtin equation parses")
}

/// The Bohr-radius formula `4*pi*epsilon*hbar**2/(m*q**2)`, a standard
/// four-variable ground-truth problem sampled on `[1, 5]^4`.
pub fn bohr_radius_equation() -> EquationSpec {
    EquationSpec::from_text(
        "bohr_radius",
        "4*pi*epsilon*hbar**2/(m*q**2)",
        vec![(1.0, 5.0); 4],
    )
    .expect("builtin equation parses")
}

/// Draws the dataset described by `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset, DatagenError> {
    if spec.scenario != Scenario::Standard {
        return Err(DatagenError::InvalidSpec(format!(
            "scenario {:?} is generated by friedman_scenario",
            spec.scenario
        )));
    }
    if spec.n < 1 {
        return Err(DatagenError::InvalidSpec("n must be >= 1".into()));
    }
    if !spec.snr.is_valid() {
        return Err(DatagenError::InvalidSpec(format!(
            "snr must be positive, got {}",
            spec.snr
        )));
    }
    let eq = &spec.equation;
    let p0 = eq.p0();
    let s = spec.irrelevant_per_relevant;
    let p = p0 * (1 + s);
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Relevant features, resampling rows where the equation is undefined.
    let mut x = Matrix::zeros(n, p);
    let mut f0 = Vec::with_capacity(n);
    let mut row = vec![0.0; p0];
    for i in 0..n {
        let mut attempt = 0;
        loop {
            for (j, &(a, b)) in eq.bounds().iter().enumerate() {
                row[j] = rng.gen_range(a..b);
            }
            if let Some(v) = eq.expr().eval(&row) {
                x.row_mut(i)[..p0].copy_from_slice(&row);
                f0.push(v);
                break;
            }
            attempt += 1;
            if attempt >= RESAMPLE_ATTEMPTS {
                return Err(DatagenError::UndefinedRow {
                    row: i,
                    attempts: attempt,
                });
            }
        }
    }

    let sigma_f2 = sample_variance(&f0);
    let sigma_eps2 = spec.snr.noise_variance(sigma_f2);
    let mut y = f0;
    if sigma_eps2 > 0.0 {
        let noise = Normal::new(0.0, sigma_eps2.sqrt()).expect("positive sd");
        for v in &mut y {
            *v += noise.sample(&mut rng);
        }
    }

    // Irrelevant look-alike blocks, one block of s columns per relevant
    // feature, in feature order.
    for j in 0..p0 {
        let (a, b) = eq.bounds()[j];
        for copy in 0..s {
            let col = p0 + j * s + copy;
            for i in 0..n {
                let v = rng.gen_range(a..b);
                x.set(i, col, v);
            }
        }
    }

    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            name: eq.name().to_string(),
            expression: Some(eq.text().to_string()),
            variables: eq.variables().to_vec(),
            column_names: default_column_names(p),
            p0,
            s0: (0..p0).collect(),
            snr: spec.snr,
            sigma_f2,
            sigma_eps2,
            bounds: eq.bounds().to_vec(),
            seed: spec.seed,
            scenario: Scenario::Standard,
        },
    })
}

/// Generates one of the Friedman predictor-structure scenarios with `p`
/// total columns.
pub fn friedman_scenario(
    scenario: Scenario,
    n: usize,
    p: usize,
    snr: impl Into<Snr>,
    seed: u64,
) -> Result<Dataset, DatagenError> {
    let snr = snr.into();
    if !snr.is_valid() {
        return Err(DatagenError::InvalidSpec(format!(
            "snr must be positive, got {snr}"
        )));
    }
    let min_p = match scenario {
        Scenario::DuplicatedX => 6,
        Scenario::Standard => {
            return Err(DatagenError::InvalidSpec(
                "standard scenario is generated from an equation spec".into(),
            ))
        }
        _ => 5,
    };
    if p < min_p {
        return Err(DatagenError::InvalidSpec(format!(
            "scenario {scenario:?} needs p >= {min_p}, got {p}"
        )));
    }
    if n < 2 {
        return Err(DatagenError::InvalidSpec("n must be >= 2".into()));
    }

    let eq = friedman_equation();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Matrix::zeros(n, p);

    match scenario {
        Scenario::Baseline | Scenario::NoisyX => {
            for i in 0..n {
                for j in 0..p {
                    x.set(i, j, rng.gen_range(0.0..1.0));
                }
            }
        }
        Scenario::DuplicatedX => {
            for i in 0..n {
                for j in 0..p {
                    if j != 5 {
                        x.set(i, j, rng.gen_range(0.0..1.0));
                    }
                }
                x.set(i, 5, x.get(i, 0) + x.get(i, 1));
            }
        }
        Scenario::CorrelatedX => {
            // AR(1) latent Gaussians pushed through the normal CDF:
            // Unif(0,1) marginals with corr(z_i, z_j) = 0.9^|i-j|.
            let rho: f64 = 0.9;
            let sd = (1.0 - rho * rho).sqrt();
            let phi = NormalDist::new(0.0, 1.0).expect("unit normal");
            let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
            for i in 0..n {
                let mut z: f64 = std_normal.sample(&mut rng);
                x.set(i, 0, phi.cdf(z));
                for j in 1..p {
                    let eta: f64 = std_normal.sample(&mut rng);
                    z = rho * z + sd * eta;
                    x.set(i, j, phi.cdf(z));
                }
            }
        }
        Scenario::Standard => unreachable!(),
    }

    // Response from the clean signal columns.
    let mut f0 = Vec::with_capacity(n);
    for i in 0..n {
        let v = eq
            .expr()
            .eval(&x.row(i)[..5])
            .expect("Friedman function is total on the unit box");
        f0.push(v);
    }
    let sigma_f2 = sample_variance(&f0);
    let sigma_eps2 = snr.noise_variance(sigma_f2);
    let mut y = f0;
    if sigma_eps2 > 0.0 {
        let noise = Normal::new(0.0, sigma_eps2.sqrt()).expect("positive sd");
        for v in &mut y {
            *v += noise.sample(&mut rng);
        }
    }

    if scenario == Scenario::NoisyX {
        // Measurement error on every predictor: variance is one fifth of a
        // Unif(0,1) predictor's variance, i.e. (1/12)/5.
        let sd = (1.0 / 60.0f64).sqrt();
        let noise = Normal::new(0.0, sd).expect("positive sd");
        for i in 0..n {
            for j in 0..p {
                let v = x.get(i, j) + noise.sample(&mut rng);
                x.set(i, j, v);
            }
        }
    }

    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            name: format!("friedman_{scenario:?}").to_lowercase(),
            expression: Some(eq.text().to_string()),
            variables: eq.variables().to_vec(),
            column_names: default_column_names(p),
            p0: 5,
            s0: (0..5).collect(),
            snr,
            sigma_f2,
            sigma_eps2,
            bounds: eq.bounds().to_vec(),
            seed,
            scenario,
        },
    })
}

/// Random 75/25-style split followed by subsampling to exactly `target_n`
/// training rows and `target_n / 3` (floored) test rows, disjoint and
/// seed-deterministic.
pub fn train_test_split(
    d: &Dataset,
    train_frac: f64,
    target_n: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DatagenError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(DatagenError::InvalidSpec(format!(
            "train fraction must lie in (0,1), got {train_frac}"
        )));
    }
    let rows = d.x.rows();
    let train_pool = (train_frac * rows as f64).floor() as usize;
    if target_n > train_pool || target_n == 0 {
        return Err(DatagenError::InsufficientRows {
            requested: target_n,
            available: train_pool,
            frac: train_frac,
        });
    }
    let test_take = target_n / 3;
    if test_take > rows - train_pool {
        return Err(DatagenError::InsufficientRows {
            requested: test_take,
            available: rows - train_pool,
            frac: 1.0 - train_frac,
        });
    }

    let mut idx: Vec<usize> = (0..rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let train_idx = &idx[..target_n];
    let test_idx = &idx[train_pool..train_pool + test_take];

    let take = |which: &[usize]| Dataset {
        x: d.x.select_rows(which),
        y: which.iter().map(|&i| d.y[i]).collect(),
        meta: d.meta.clone(),
    };
    Ok((take(train_idx), take(test_idx)))
}

#[cfg(test)]
mod tests;
