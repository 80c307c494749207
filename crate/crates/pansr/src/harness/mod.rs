//! Experiment orchestration: a seeded grid runner over
//! (equation x sample size x SNR x trial x method), with crash-resumable
//! per-cell persistence and aggregate reporting.
//!
//! Every cell derives its dataset seed from the master seed and the cell
//! identity (method excluded), so competing methods see the same dataset
//! and split within a trial. Completed cells persist as single-line JSON
//! files named by a hash of the cell identity; rerunning a grid recomputes
//! only the cells whose files are missing or unreadable.
//!
//! Model predictions for test R² use the same protected semantics the GP
//! engine trains under; the symbolic-solution check and feature-usage
//! accounting use strict IEEE evaluation of the simplified expression.

mod records;
mod report;

pub use records::{ExperimentRecord, Method, RecordBody};
pub use report::{report, write_report_csv, AggregateRow, ReportStat};

use crate::datagen::{self, Dataset, DatasetSpec, Scenario, Snr};
use crate::expr::{EquationSpec, Expr};
use crate::metrics::{self, UsageReport};
use crate::select::{run_pan, PanConfig, SelectionResult};
use crate::symreg::{self, GpConfig};
use crate::{derive_seed, Matrix};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("record file {path}: {message}")]
    Record { path: PathBuf, message: String },
    #[error(transparent)]
    Datagen(#[from] datagen::DatagenError),
}

/// Full grid description; serializable as TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    /// Inline ground-truth equations.
    pub equations: Vec<EquationSpec>,
    /// Optional extra equations loaded from a CSV file.
    pub equations_csv: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub snr_grid: Vec<Snr>,
    /// Irrelevant copies per relevant feature.
    pub irrelevant_per_relevant: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub pan: PanConfig,
    pub gp: GpConfig,
    pub train_frac: f64,
    /// Constancy tolerance for the solution check; `None` picks 1e-6 for
    /// noiseless cells and 1e-3 for noisy ones.
    pub solution_tol: Option<f64>,
    pub output_dir: PathBuf,
    /// Worker threads for the cell pool; 0 uses the process default.
    pub parallelism: usize,
    pub master_seed: u64,
    /// Soft wall-clock backstop per cell; the evaluation budget is the
    /// primary termination criterion.
    pub cell_time_limit_secs: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            equations: Vec::new(),
            equations_csv: None,
            n_grid: vec![1000],
            snr_grid: vec![Snr::INFINITE],
            irrelevant_per_relevant: 50,
            trials: 10,
            methods: vec![Method::Sr, Method::PanSr],
            pan: PanConfig::default(),
            gp: GpConfig::default(),
            train_frac: 0.75,
            solution_tol: None,
            output_dir: PathBuf::from("results"),
            parallelism: 0,
            master_seed: 0,
            cell_time_limit_secs: 600,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if self.n_grid.is_empty() || self.snr_grid.is_empty() || self.methods.is_empty() {
            return bad("n_grid, snr_grid, and methods must be nonempty");
        }
        if self.equations.is_empty() && self.equations_csv.is_none() {
            return bad("no equations configured");
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad("train_frac must lie in (0, 1)");
        }
        Ok(())
    }

    /// Applies `PANSR_SEED` and `PANSR_PARALLELISM` environment overrides.
    pub fn apply_env_overrides(&mut self) -> Result<(), HarnessError> {
        if let Ok(seed) = std::env::var("PANSR_SEED") {
            self.master_seed = seed
                .parse()
                .map_err(|_| HarnessError::InvalidConfig(format!("bad PANSR_SEED `{seed}`")))?;
        }
        if let Ok(par) = std::env::var("PANSR_PARALLELISM") {
            self.parallelism = par.parse().map_err(|_| {
                HarnessError::InvalidConfig(format!("bad PANSR_PARALLELISM `{par}`"))
            })?;
        }
        Ok(())
    }

    fn all_equations(&self) -> Result<Vec<EquationSpec>, HarnessError> {
        let mut eqs = self.equations.clone();
        if let Some(path) = &self.equations_csv {
            eqs.extend(
                EquationSpec::read_csv(path)
                    .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?,
            );
        }
        Ok(eqs)
    }
}

/// One unit of work: a dataset cell plus the method to run on it.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub equation: EquationSpec,
    pub n: usize,
    pub snr: Snr,
    pub trial: usize,
    pub method: Method,
    /// Seed controlling the dataset draw and split (method-independent).
    pub dataset_seed: u64,
}

impl CellPlan {
    fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            self.equation.name(),
            self.n,
            self.snr,
            self.trial,
            self.method.tag()
        )
    }

    fn file_name(&self) -> String {
        format!("{:016x}.jsonl", fnv1a(self.key().as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Empirical per-column sampling bounds of a dataset, used as the domain
/// box for the symbolic-solution check.
pub fn column_bounds(d: &Dataset) -> Vec<(f64, f64)> {
    (0..d.x.cols())
        .map(|j| {
            let col = d.x.column(j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo, lo + 1.0)
            }
        })
        .collect()
}

/// Rewrites variable indices through `map` (reduced index -> original
/// index), restoring the original column names.
fn remap_variables(e: &Expr, map: &[usize], names: &[String]) -> Expr {
    match e {
        Expr::Constant(_) => e.clone(),
        Expr::Variable { index, .. } => {
            let orig = map[*index];
            Expr::variable(orig, &names[orig])
        }
        Expr::Unary(op, c) => Expr::unary(*op, remap_variables(c, map, names)),
        Expr::Binary(op, l, r) => Expr::binary(
            *op,
            remap_variables(l, map, names),
            remap_variables(r, map, names),
        ),
    }
}

/// Predictions under the protected semantics the GP trains with; rows the
/// model still cannot evaluate surface as an error string.
fn protected_predictions(e: &Expr, x: &Matrix) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(x.rows());
    for row in x.iter_rows() {
        let v = symreg::protected_eval(e, row);
        if !v.is_finite() {
            return Err("model prediction undefined on a test row".into());
        }
        out.push(v);
    }
    Ok(out)
}

struct CellContext<'a> {
    cfg: &'a ExperimentConfig,
    plan: &'a CellPlan,
}

impl CellContext<'_> {
    fn solution_tol(&self) -> f64 {
        self.cfg.solution_tol.unwrap_or(if self.plan.snr.is_infinite() {
            metrics::DEFAULT_TOL_NOISELESS
        } else {
            metrics::DEFAULT_TOL_NOISY
        })
    }

    fn run(&self) -> Result<RecordBody, String> {
        let plan = self.plan;
        let deadline = Instant::now() + Duration::from_secs(self.cfg.cell_time_limit_secs);

        // Oversample so the split can deliver exactly n train rows and
        // floor(n/3) test rows.
        let rows = (4 * plan.n).div_ceil(3);
        let full = datagen::generate(&DatasetSpec {
            equation: plan.equation.clone(),
            n: rows,
            snr: plan.snr,
            irrelevant_per_relevant: self.cfg.irrelevant_per_relevant,
            seed: plan.dataset_seed,
            scenario: Scenario::Standard,
        })
        .map_err(|e| e.to_string())?;
        let (train, test) = datagen::train_test_split(
            &full,
            self.cfg.train_frac,
            plan.n,
            derive_seed(plan.dataset_seed, 3),
        )
        .map_err(|e| e.to_string())?;

        let mut body = RecordBody::default();
        let s0 = full.s0().to_vec();
        let p = full.p();

        // Screening stage (PAN methods).
        let selection: Option<SelectionResult> = match plan.method {
            Method::Sr => None,
            Method::PanSr | Method::PanOnly => {
                let mut pan_cfg = self.cfg.pan.clone();
                pan_cfg.seed = derive_seed(plan.dataset_seed, 2);
                let t0 = Instant::now();
                let sel = run_pan(&train.x, &train.y, &pan_cfg).map_err(|e| e.to_string())?;
                body.pan_seconds = Some(t0.elapsed().as_secs_f64());
                body.selection_usage = Some(
                    metrics::usage_from_selected(&sel.selected, &s0, p)
                        .map_err(|e| e.to_string())?,
                );
                body.selected = Some(sel.selected.clone());
                Some(sel)
            }
        };
        if plan.method == Method::PanOnly {
            return Ok(body);
        }

        if Instant::now() > deadline {
            return Err("cell time limit reached before the regression stage".into());
        }

        // Regression stage.
        let (fit_train, fit_test, index_map) = match &selection {
            Some(sel) => (
                train.restrict_columns(&sel.selected),
                test.restrict_columns(&sel.selected),
                Some(sel.selected.clone()),
            ),
            None => (train.clone(), test.clone(), None),
        };
        let mut gp_cfg = self.cfg.gp.clone();
        gp_cfg.seed = derive_seed(plan.dataset_seed, 1);
        let t0 = Instant::now();
        let outcome = symreg::evolve_with_deadline(&fit_train.x, &fit_train.y, &gp_cfg, Some(deadline))
            .map_err(|e| e.to_string())?;
        body.sr_seconds = Some(t0.elapsed().as_secs_f64());
        body.evaluations_used = Some(outcome.evaluations_used);

        // Map the model back to original column indices before scoring.
        let model = match &index_map {
            Some(map) => remap_variables(&outcome.best.expr, map, &full.meta.column_names),
            None => outcome.best.expr.clone(),
        };
        body.model_text = Some(model.to_text());
        body.complexity = Some(model.complexity());

        let yhat = protected_predictions(&outcome.best.expr, &fit_test.x)?;
        body.test_r2 = Some(metrics::r_squared(&fit_test.y, &yhat).map_err(|e| e.to_string())?);

        body.model_usage =
            Some(metrics::feature_usage(&model, &s0, p).map_err(|e| e.to_string())?);
        if let Some(truth) = truth_expr(&full)? {
            let verdict = metrics::is_solution(&model, &truth, &column_bounds(&full), self.solution_tol())
                .map_err(|e| e.to_string())?;
            body.solution = Some(verdict);
        }
        Ok(body)
    }
}

fn truth_expr(d: &Dataset) -> Result<Option<Expr>, String> {
    match &d.meta.expression {
        None => Ok(None),
        Some(text) => crate::expr::parse_expression(text, &d.meta.variables)
            .map(Some)
            .map_err(|e| format!("ground truth failed to parse: {e}")),
    }
}

/// Enumerates the grid, skipping cells whose record files already exist.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, HarnessError> {
    run_grid_with(cfg, &|plan| CellContext { cfg, plan }.run())
}

/// Grid runner with a pluggable cell body (the seam used by fault-injection
/// tests). Per-cell failures become failed records, never a grid abort.
pub(crate) fn run_grid_with(
    cfg: &ExperimentConfig,
    runner: &(dyn Fn(&CellPlan) -> Result<RecordBody, String> + Sync),
) -> Result<Vec<ExperimentRecord>, HarnessError> {
    cfg.validate()?;
    let equations = cfg.all_equations()?;
    let records_dir = cfg.output_dir.join("records");
    std::fs::create_dir_all(&records_dir)?;

    let mut plans = Vec::new();
    for eq in &equations {
        for &n in &cfg.n_grid {
            for &snr in &cfg.snr_grid {
                for trial in 0..cfg.trials {
                    let id = format!("{}|{}|{}|{}", eq.name(), n, snr, trial);
                    let dataset_seed = derive_seed(cfg.master_seed, fnv1a(id.as_bytes()));
                    for &method in &cfg.methods {
                        plans.push(CellPlan {
                            equation: eq.clone(),
                            n,
                            snr,
                            trial,
                            method,
                            dataset_seed,
                        });
                    }
                }
            }
        }
    }

    let run_all = |plans: &[CellPlan]| -> Vec<Result<ExperimentRecord, HarnessError>> {
        use rayon::prelude::*;
        plans
            .par_iter()
            .map(|plan| run_cell(plan, &records_dir, runner))
            .collect()
    };

    let results = if cfg.parallelism > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        pool.install(|| run_all(&plans))
    } else {
        run_all(&plans)
    };

    let mut records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| {
        (&a.dataset, a.n, a.snr.value().to_bits(), a.method.tag(), a.trial).cmp(&(
            &b.dataset,
            b.n,
            b.snr.value().to_bits(),
            b.method.tag(),
            b.trial,
        ))
    });
    Ok(records)
}

fn run_cell(
    plan: &CellPlan,
    records_dir: &Path,
    runner: &(dyn Fn(&CellPlan) -> Result<RecordBody, String> + Sync),
) -> Result<ExperimentRecord, HarnessError> {
    let path = records_dir.join(plan.file_name());
    if let Some(existing) = load_record(&path) {
        return Ok(existing);
    }
    let record = match runner(plan) {
        Ok(body) => ExperimentRecord::ok(plan, body),
        Err(reason) => ExperimentRecord::failed(plan, reason),
    };
    // Atomic persist: a crash mid-write must not leave a readable partial.
    let tmp = path.with_extension("jsonl.tmp");
    let line = serde_json::to_string(&record).map_err(|e| HarnessError::Record {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&tmp, line + "\n")?;
    std::fs::rename(&tmp, &path)?;
    Ok(record)
}

fn load_record(path: &Path) -> Option<ExperimentRecord> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(text.lines().next()?).ok()
}

/// Reads every record file under `dir` (the `records/` directory or its
/// parent output directory).
pub fn load_records(dir: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let mut dir = dir.as_ref().to_path_buf();
    if dir.join("records").is_dir() {
        dir = dir.join("records");
    }
    let mut records = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            for line in std::fs::read_to_string(&path)?.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: ExperimentRecord =
                    serde_json::from_str(line).map_err(|e| HarnessError::Record {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                records.push(record);
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests;
