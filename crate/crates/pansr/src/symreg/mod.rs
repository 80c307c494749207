//! Baseline genetic-programming symbolic regressor.
//!
//! A deliberately plain engine: ramped half-and-half initialization, then a
//! generational loop of tournament selection with subtree crossover, subtree
//! / point / hoist mutation, and reproduction, under a hard expression-
//! evaluation budget. Fitness is training MSE plus a parsimony penalty on
//! simplified complexity; lower is better.
//!
//! During evolution, division, log, and sqrt are protected (gplearn
//! conventions) so candidates stay alive in the search; the final model is
//! scored downstream with strict IEEE semantics, where genuine domain
//! violations surface as failures.

use crate::data::Matrix;
use crate::expr::{BinaryOp, Expr, UnaryOp};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("training data is empty")]
    EmptyData,
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Function set available to the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSet {
    pub binary: Vec<BinaryOpName>,
    pub unary: Vec<UnaryOpName>,
}

/// Serializable operator names (the expression ops carry no serde).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOpName {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOpName {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
    Square,
    Tanh,
}

impl BinaryOpName {
    fn op(self) -> BinaryOp {
        match self {
            BinaryOpName::Add => BinaryOp::Add,
            BinaryOpName::Sub => BinaryOp::Sub,
            BinaryOpName::Mul => BinaryOp::Mul,
            BinaryOpName::Div => BinaryOp::Div,
            BinaryOpName::Pow => BinaryOp::Pow,
        }
    }
}

impl UnaryOpName {
    fn op(self) -> UnaryOp {
        match self {
            UnaryOpName::Neg => UnaryOp::Neg,
            UnaryOpName::Exp => UnaryOp::Exp,
            UnaryOpName::Log => UnaryOp::Log,
            UnaryOpName::Sqrt => UnaryOp::Sqrt,
            UnaryOpName::Sin => UnaryOp::Sin,
            UnaryOpName::Cos => UnaryOp::Cos,
            UnaryOpName::Tan => UnaryOp::Tan,
            UnaryOpName::Abs => UnaryOp::Abs,
            UnaryOpName::Square => UnaryOp::Square,
            UnaryOpName::Tanh => UnaryOp::Tanh,
        }
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        OperatorSet {
            binary: vec![
                BinaryOpName::Add,
                BinaryOpName::Sub,
                BinaryOpName::Mul,
                BinaryOpName::Div,
            ],
            unary: vec![
                UnaryOpName::Sqrt,
                UnaryOpName::Log,
                UnaryOpName::Exp,
                UnaryOpName::Sin,
                UnaryOpName::Cos,
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub population: usize,
    pub generations: usize,
    /// Hard cap on fitness evaluations across the whole run.
    pub max_evaluations: u64,
    pub tournament_size: usize,
    pub p_crossover: f64,
    pub p_subtree_mutation: f64,
    pub p_point_mutation: f64,
    pub p_hoist_mutation: f64,
    pub max_depth: usize,
    /// Ramped half-and-half initialization depth range (inclusive).
    pub init_depth: (usize, usize),
    pub operators: OperatorSet,
    pub parsimony: f64,
    /// Ephemeral random constants are drawn uniformly from this range.
    pub const_range: (f64, f64),
    /// Stop early once best raw MSE drops to this level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_mse: Option<f64>,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population: 500,
            generations: 200,
            max_evaluations: 100_000,
            tournament_size: 10,
            p_crossover: 0.85,
            p_subtree_mutation: 0.05,
            p_point_mutation: 0.05,
            p_hoist_mutation: 0.02,
            max_depth: 10,
            init_depth: (2, 6),
            operators: OperatorSet::default(),
            parsimony: 1e-3,
            const_range: (-5.0, 5.0),
            stop_mse: None,
            seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let bad = |m: &str| Err(GpError::InvalidConfig(m.to_string()));
        if self.population == 0 {
            return bad("population must be positive");
        }
        if self.max_evaluations < self.population as u64 {
            return bad("evaluation budget must cover at least one generation");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be positive");
        }
        let psum = self.p_crossover
            + self.p_subtree_mutation
            + self.p_point_mutation
            + self.p_hoist_mutation;
        if !(0.0..=1.0 + 1e-12).contains(&psum)
            || [
                self.p_crossover,
                self.p_subtree_mutation,
                self.p_point_mutation,
                self.p_hoist_mutation,
            ]
            .iter()
            .any(|p| *p < 0.0)
        {
            return bad("variation probabilities must be nonnegative and sum to at most 1");
        }
        if self.max_depth < 2 {
            return bad("max depth must be at least 2");
        }
        if self.init_depth.0 < 1 || self.init_depth.0 > self.init_depth.1 {
            return bad("init depth range must be nonempty and start at 1 or deeper");
        }
        if self.operators.binary.is_empty() {
            return bad("operator set needs at least one binary operator");
        }
        if !(self.const_range.0 < self.const_range.1) {
            return bad("constant range must be nonempty");
        }
        Ok(())
    }
}

/// A scored population member.
#[derive(Debug, Clone, Serialize)]
pub struct Individual {
    pub expr: Expr,
    /// Penalized fitness (lower is better); infinite when invalid.
    pub fitness: f64,
    pub mse: f64,
    /// Evaluation counter value when this individual was scored.
    pub eval_stamp: u64,
}

/// Result of an evolution run.
#[derive(Debug, Clone, Serialize)]
pub struct GpOutcome {
    pub best: Individual,
    pub evaluations_used: u64,
    pub generations_run: usize,
    /// Best-ever penalized fitness after each evaluated generation.
    pub fitness_trace: Vec<f64>,
}

/// Protected evaluation used during evolution: division by (near) zero
/// yields 1, log and sqrt see absolute values, tiny log arguments yield 0.
pub fn protected_eval(e: &Expr, row: &[f64]) -> f64 {
    match e {
        Expr::Constant(v) => *v,
        Expr::Variable { index, .. } => row.get(*index).copied().unwrap_or(f64::NAN),
        Expr::Unary(op, c) => {
            let v = protected_eval(c, row);
            if v.is_nan() {
                return f64::NAN;
            }
            let out = match op {
                UnaryOp::Log => {
                    if v.abs() > 1e-3 {
                        v.abs().ln()
                    } else {
                        0.0
                    }
                }
                UnaryOp::Sqrt => v.abs().sqrt(),
                other => other.apply(v),
            };
            if out.is_finite() {
                out
            } else {
                f64::NAN
            }
        }
        Expr::Binary(op, l, r) => {
            let a = protected_eval(l, row);
            if a.is_nan() {
                return f64::NAN;
            }
            let b = protected_eval(r, row);
            if b.is_nan() {
                return f64::NAN;
            }
            let out = match op {
                BinaryOp::Div => {
                    if b.abs() > 1e-3 {
                        a / b
                    } else {
                        1.0
                    }
                }
                other => other.apply(a, b),
            };
            if out.is_finite() {
                out
            } else {
                f64::NAN
            }
        }
    }
}

/// Penalized fitness: training MSE plus `parsimony * complexity`. Any row
/// where the (protected) evaluation is still undefined makes the whole
/// individual invalid, i.e. infinitely bad.
pub fn fitness(e: &Expr, x: &Matrix, y: &[f64], parsimony: f64) -> f64 {
    let mut sse = 0.0;
    for (row, &target) in x.iter_rows().zip(y) {
        let pred = protected_eval(e, row);
        if !pred.is_finite() {
            return f64::INFINITY;
        }
        let d = pred - target;
        sse += d * d;
    }
    let mse = sse / y.len() as f64;
    if !mse.is_finite() {
        return f64::INFINITY;
    }
    mse + parsimony * e.complexity() as f64
}

fn raw_mse(e: &Expr, x: &Matrix, y: &[f64]) -> f64 {
    let mut sse = 0.0;
    for (row, &target) in x.iter_rows().zip(y) {
        let pred = protected_eval(e, row);
        if !pred.is_finite() {
            return f64::INFINITY;
        }
        let d = pred - target;
        sse += d * d;
    }
    sse / y.len() as f64
}

struct Evolver<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    cfg: &'a GpConfig,
    rng: ChaCha8Rng,
    evaluations: u64,
}

impl<'a> Evolver<'a> {
    fn random_terminal(&mut self) -> Expr {
        let p = self.x.cols();
        // One constant "slot" alongside the p features.
        if self.rng.gen_range(0..=p) == p {
            Expr::Constant(self.rng.gen_range(self.cfg.const_range.0..self.cfg.const_range.1))
        } else {
            Expr::var(self.rng.gen_range(0..p))
        }
    }

    fn random_function(&mut self, children: impl FnMut(&mut Self) -> Expr) -> Expr {
        let mut children = children;
        let ops = &self.cfg.operators;
        let n_bin = ops.binary.len();
        let n_un = ops.unary.len();
        let pick = self.rng.gen_range(0..n_bin + n_un);
        if pick < n_bin {
            let op = ops.binary[pick].op();
            let l = children(self);
            let r = children(self);
            Expr::binary(op, l, r)
        } else {
            let op = ops.unary[pick - n_bin].op();
            let c = children(self);
            Expr::unary(op, c)
        }
    }

    /// "Grow" initialization: function nodes with probability decaying into
    /// terminals, cut off at the depth budget.
    fn grow_tree(&mut self, depth: usize) -> Expr {
        if depth <= 1 || self.rng.gen::<f64>() < 0.3 {
            return self.random_terminal();
        }
        self.random_function(|me| me.grow_tree(depth - 1))
    }

    /// "Full" initialization: function nodes all the way to the target depth.
    fn full_tree(&mut self, depth: usize) -> Expr {
        if depth <= 1 {
            return self.random_terminal();
        }
        self.random_function(|me| me.full_tree(depth - 1))
    }

    fn initial_population(&mut self) -> Vec<Expr> {
        let (lo, hi) = self.cfg.init_depth;
        let mut pop = Vec::with_capacity(self.cfg.population);
        let mut depth = lo;
        let mut full = false;
        while pop.len() < self.cfg.population {
            let tree = if full {
                self.full_tree(depth)
            } else {
                self.grow_tree(depth)
            };
            pop.push(tree);
            full = !full;
            if full {
                depth = if depth >= hi { lo } else { depth + 1 };
            }
        }
        pop
    }

    fn tournament(&mut self, scored: &[Individual]) -> usize {
        let mut best = self.rng.gen_range(0..scored.len());
        for _ in 1..self.cfg.tournament_size {
            let c = self.rng.gen_range(0..scored.len());
            if scored[c].fitness < scored[best].fitness {
                best = c;
            }
        }
        best
    }

    fn subtree_at(e: &Expr, target: usize, counter: &mut usize) -> Option<Expr> {
        if *counter == target {
            return Some(e.clone());
        }
        *counter += 1;
        match e {
            Expr::Constant(_) | Expr::Variable { .. } => None,
            Expr::Unary(_, c) => Self::subtree_at(c, target, counter),
            Expr::Binary(_, l, r) => {
                Self::subtree_at(l, target, counter).or_else(|| Self::subtree_at(r, target, counter))
            }
        }
    }

    fn pick_subtree(&mut self, e: &Expr) -> Expr {
        let target = self.rng.gen_range(0..e.node_count());
        let mut counter = 0;
        Self::subtree_at(e, target, &mut counter).expect("index within node count")
    }

    fn replace_at(e: &Expr, target: usize, counter: &mut usize, replacement: &Expr) -> Expr {
        if *counter == target {
            *counter += e.node_count();
            return replacement.clone();
        }
        *counter += 1;
        match e {
            Expr::Constant(_) | Expr::Variable { .. } => e.clone(),
            Expr::Unary(op, c) => Expr::unary(*op, Self::replace_at(c, target, counter, replacement)),
            Expr::Binary(op, l, r) => {
                let left = Self::replace_at(l, target, counter, replacement);
                let right = Self::replace_at(r, target, counter, replacement);
                Expr::binary(*op, left, right)
            }
        }
    }

    fn replace_random_subtree(&mut self, host: &Expr, replacement: &Expr) -> Expr {
        let target = self.rng.gen_range(0..host.node_count());
        let mut counter = 0;
        Self::replace_at(host, target, &mut counter, replacement)
    }

    fn crossover(&mut self, a: &Expr, b: &Expr) -> Expr {
        let donor = self.pick_subtree(b);
        self.replace_random_subtree(a, &donor)
    }

    fn subtree_mutation(&mut self, a: &Expr) -> Expr {
        let fresh = self.grow_tree(self.cfg.init_depth.1.min(4));
        self.replace_random_subtree(a, &fresh)
    }

    fn hoist_mutation(&mut self, a: &Expr) -> Expr {
        let sub = self.pick_subtree(a);
        let inner = self.pick_subtree(&sub);
        self.replace_random_subtree(a, &inner)
    }

    fn point_mutation(&mut self, a: &Expr) -> Expr {
        let target = self.rng.gen_range(0..a.node_count());
        let mut counter = 0;
        self.point_at(a, target, &mut counter)
    }

    fn point_at(&mut self, e: &Expr, target: usize, counter: &mut usize) -> Expr {
        if *counter == target {
            *counter += 1;
            return match e {
                Expr::Constant(_) | Expr::Variable { .. } => self.random_terminal(),
                Expr::Unary(_, c) => {
                    let ops = &self.cfg.operators.unary;
                    if ops.is_empty() {
                        return (**c).clone();
                    }
                    let op = ops[self.rng.gen_range(0..ops.len())].op();
                    Expr::Unary(op, c.clone())
                }
                Expr::Binary(_, l, r) => {
                    let ops = &self.cfg.operators.binary;
                    let op = ops[self.rng.gen_range(0..ops.len())].op();
                    Expr::Binary(op, l.clone(), r.clone())
                }
            };
        }
        *counter += 1;
        match e {
            Expr::Constant(_) | Expr::Variable { .. } => e.clone(),
            Expr::Unary(op, c) => {
                let child = self.point_at(c, target, counter);
                Expr::unary(*op, child)
            }
            Expr::Binary(op, l, r) => {
                let left = self.point_at(l, target, counter);
                let right = self.point_at(r, target, counter);
                Expr::binary(*op, left, right)
            }
        }
    }

    fn score(&mut self, expr: Expr) -> Individual {
        self.evaluations += 1;
        let f = fitness(&expr, self.x, self.y, self.cfg.parsimony);
        let mse = if f.is_finite() {
            raw_mse(&expr, self.x, self.y)
        } else {
            f64::INFINITY
        };
        Individual {
            expr,
            fitness: f,
            mse,
            eval_stamp: self.evaluations,
        }
    }
}

/// Evolves a population against `(x, y)` and returns the best individual
/// ever observed, under the configured evaluation budget.
pub fn evolve(x: &Matrix, y: &[f64], cfg: &GpConfig) -> Result<GpOutcome, GpError> {
    evolve_with_deadline(x, y, cfg, None)
}

/// [`evolve`] with a wall-clock backstop: the generational loop stops once
/// `deadline` passes (the evaluation budget remains the primary criterion).
pub fn evolve_with_deadline(
    x: &Matrix,
    y: &[f64],
    cfg: &GpConfig,
    deadline: Option<std::time::Instant>,
) -> Result<GpOutcome, GpError> {
    cfg.validate()?;
    if x.rows() == 0 || y.is_empty() || x.cols() == 0 {
        return Err(GpError::EmptyData);
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite);
    }

    let mut ev = Evolver {
        x,
        y,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        evaluations: 0,
    };

    let mut population: Vec<Individual> = Vec::with_capacity(cfg.population);
    for tree in ev.initial_population() {
        if ev.evaluations >= cfg.max_evaluations {
            break;
        }
        population.push(ev.score(tree));
    }

    let mut best = population
        .iter()
        .min_by(|a, b| a.fitness.partial_cmp(&b.fitness).unwrap())
        .cloned()
        .expect("population is nonempty");
    let mut trace = vec![best.fitness];
    let mut generations_run = 1;

    let stop_reached = |best: &Individual| cfg.stop_mse.is_some_and(|t| best.mse <= t);

    for _ in 1..cfg.generations {
        if ev.evaluations >= cfg.max_evaluations || stop_reached(&best) {
            break;
        }
        if deadline.is_some_and(|d| std::time::Instant::now() >= d) {
            break;
        }
        let mut next: Vec<Individual> = Vec::with_capacity(cfg.population);
        // One elite carries over without re-evaluation.
        let elite = population
            .iter()
            .min_by(|a, b| a.fitness.partial_cmp(&b.fitness).unwrap())
            .cloned()
            .expect("population is nonempty");
        next.push(elite);

        while next.len() < cfg.population && ev.evaluations < cfg.max_evaluations {
            let u: f64 = ev.rng.gen();
            let parent = &population[ev.tournament(&population)];
            let child = if u < cfg.p_crossover {
                let donor = &population[ev.tournament(&population)];
                ev.crossover(&parent.expr, &donor.expr)
            } else if u < cfg.p_crossover + cfg.p_subtree_mutation {
                ev.subtree_mutation(&parent.expr)
            } else if u < cfg.p_crossover + cfg.p_subtree_mutation + cfg.p_point_mutation {
                ev.point_mutation(&parent.expr)
            } else if u
                < cfg.p_crossover
                    + cfg.p_subtree_mutation
                    + cfg.p_point_mutation
                    + cfg.p_hoist_mutation
            {
                ev.hoist_mutation(&parent.expr)
            } else {
                parent.expr.clone()
            };
            // Depth closure: oversized children are replaced by their parent.
            let child = if child.depth() > cfg.max_depth {
                parent.expr.clone()
            } else {
                child
            };
            next.push(ev.score(child));
        }
        if next.len() <= 1 {
            break;
        }
        population = next;
        generations_run += 1;
        for ind in &population {
            if ind.fitness < best.fitness {
                best = ind.clone();
            }
        }
        trace.push(best.fitness);
    }

    Ok(GpOutcome {
        best,
        evaluations_used: ev.evaluations,
        generations_run,
        fitness_trace: trace,
    })
}

#[cfg(test)]
mod tests;
