//! Bayesian backfitting Gibbs sampler over the sum-of-trees model.
//!
//! Each sweep visits every tree once: a single structural move
//! (grow / prune / change) is proposed against the tree's partial residuals
//! and accepted by Metropolis-Hastings with the leaf values integrated out,
//! then all leaf values are redrawn from their conjugate normal
//! conditionals. The sweep ends with a conjugate scaled-inverse-chi-squared
//! draw of the noise variance.
//!
//! Proposals that would isolate zero training rows in a leaf are rejected
//! outright. Candidate cutpoints are the distinct observed values of each
//! feature (excluding the per-feature maximum); grow and change propose a
//! (variable, cutpoint) pair uniformly over that global set, which is also
//! the prior over split rules, so the two factors cancel in the acceptance
//! ratio but are kept explicit below for auditability.

use super::tree::{SamplerTree, SplitRule, NO_PARENT};
use crate::data::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

/// Global cutpoint grid: per feature, the sorted distinct observed values
/// excluding the maximum.
pub(crate) struct CutGrid {
    cuts: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl CutGrid {
    pub fn build(x: &Matrix) -> CutGrid {
        let mut cuts = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let mut col = x.column(j);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            col.dedup();
            col.pop(); // the max cannot host a nonempty right child
            cuts.push(col);
        }
        let mut offsets = Vec::with_capacity(cuts.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for c in &cuts {
            acc += c.len();
            offsets.push(acc);
        }
        CutGrid { cuts, offsets }
    }

    pub fn total_pairs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Uniform draw over all (variable, cutpoint) pairs.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<SplitRule> {
        let total = self.total_pairs();
        if total == 0 {
            return None;
        }
        let t = rng.gen_range(0..total);
        let var = match self.offsets.binary_search(&t) {
            Ok(i) => {
                // t sits exactly on an offset: it is the first cut of the
                // next nonempty feature.
                let mut v = i;
                while self.cuts[v].is_empty() {
                    v += 1;
                }
                v
            }
            Err(i) => i - 1,
        };
        let cut = self.cuts[var][t - self.offsets[var]];
        Some(SplitRule { var, cut })
    }
}

/// Proposal/acceptance tallies, kept for diagnostics and sampler tests.
#[derive(Debug, Default, Clone, Serialize)]
pub struct MoveStats {
    pub grow_proposed: u64,
    pub grow_accepted: u64,
    pub prune_proposed: u64,
    pub prune_accepted: u64,
    pub change_proposed: u64,
    pub change_accepted: u64,
}

pub(crate) struct Chain<'a> {
    x: &'a Matrix,
    pub trees: Vec<SamplerTree>,
    pub fits: Vec<Vec<f64>>,
    /// Full residual `y_scaled - sum of tree fits`; temporarily holds the
    /// partial residual for the tree being updated.
    pub resid: Vec<f64>,
    pub sigma2: f64,
    sigma_mu2: f64,
    alpha: f64,
    beta: f64,
    nu: f64,
    lambda: f64,
    /// Cumulative move thresholds: grow below [0], prune below [1].
    move_cum: [f64; 2],
    pub cuts: CutGrid,
    pub rng: ChaCha8Rng,
    pub stats: MoveStats,
}

impl<'a> Chain<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: &'a Matrix,
        y_scaled: &[f64],
        num_trees: usize,
        alpha: f64,
        beta: f64,
        sigma_mu2: f64,
        nu: f64,
        lambda: f64,
        sigma2_init: f64,
        move_probs: (f64, f64, f64),
        rng: ChaCha8Rng,
    ) -> Chain<'a> {
        let n = x.rows();
        let trees: Vec<SamplerTree> = (0..num_trees).map(|_| SamplerTree::stump(n)).collect();
        let fits = vec![vec![0.0; n]; num_trees];
        Chain {
            x,
            trees,
            fits,
            resid: y_scaled.to_vec(),
            sigma2: sigma2_init,
            sigma_mu2,
            alpha,
            beta,
            nu,
            lambda,
            move_cum: [move_probs.0, move_probs.0 + move_probs.1],
            cuts: CutGrid::build(x),
            rng,
            stats: MoveStats::default(),
        }
    }

    fn log_p_split(&self, depth: u16) -> f64 {
        self.alpha.ln() - self.beta * (1.0 + depth as f64).ln()
    }

    fn log_p_terminal(&self, depth: u16) -> f64 {
        (1.0 - self.alpha * (1.0 + depth as f64).powf(-self.beta)).ln()
    }

    /// Log marginal likelihood contribution of one leaf with `n` rows whose
    /// partial residuals sum to `s` (leaf value integrated out); terms
    /// common to both sides of a move ratio are dropped.
    fn leaf_log_marginal(&self, n: usize, s: f64) -> f64 {
        let nv = n as f64 * self.sigma_mu2 + self.sigma2;
        0.5 * (self.sigma2 / nv).ln() + self.sigma_mu2 * s * s / (2.0 * self.sigma2 * nv)
    }

    fn resid_sum(&self, rows: &[u32]) -> f64 {
        rows.iter().map(|&r| self.resid[r as usize]).sum()
    }

    fn partition(&self, rows: &[u32], rule: SplitRule) -> (Vec<u32>, Vec<u32>) {
        let mut left = Vec::with_capacity(rows.len());
        let mut right = Vec::with_capacity(rows.len());
        for &r in rows {
            if self.x.get(r as usize, rule.var) <= rule.cut {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        (left, right)
    }

    /// One full Gibbs sweep: every tree, then the noise variance.
    pub fn gibbs_iteration(&mut self) {
        self.tree_sweep();
        self.draw_sigma2();
    }

    pub fn tree_sweep(&mut self) {
        for m in 0..self.trees.len() {
            self.update_tree(m);
        }
    }

    fn update_tree(&mut self, m: usize) {
        // Fold this tree's fit back in: resid becomes the partial residual.
        for (r, f) in self.resid.iter_mut().zip(&self.fits[m]) {
            *r += *f;
        }
        self.structural_move(m);
        self.draw_leaf_values(m);
        self.trees[m].fill_fit(&mut self.fits[m]);
        for (r, f) in self.resid.iter_mut().zip(&self.fits[m]) {
            *r -= *f;
        }
    }

    fn structural_move(&mut self, m: usize) {
        let u: f64 = self.rng.gen();
        if u < self.move_cum[0] {
            self.try_grow(m);
        } else if u < self.move_cum[1] {
            self.try_prune(m);
        } else {
            self.try_change(m);
        }
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.gen::<f64>() < log_ratio.exp()
    }

    fn try_grow(&mut self, m: usize) {
        self.stats.grow_proposed += 1;
        let Some(rule) = self.cuts.sample(&mut self.rng) else {
            return;
        };
        let leaves = self.trees[m].leaf_ids();
        let leaf = leaves[self.rng.gen_range(0..leaves.len())];
        let rows = self.trees[m].leaf_rows(leaf);
        let (left_rows, right_rows) = self.partition(rows, rule);
        if left_rows.is_empty() || right_rows.is_empty() {
            return; // would isolate zero rows: auto-reject
        }

        let s_left = self.resid_sum(&left_rows);
        let s_right = self.resid_sum(&right_rows);
        let n_left = left_rows.len();
        let n_right = right_rows.len();
        let depth = self.trees[m].node(leaf).depth;

        let log_lik = self.leaf_log_marginal(n_left, s_left)
            + self.leaf_log_marginal(n_right, s_right)
            - self.leaf_log_marginal(n_left + n_right, s_left + s_right);

        let total_pairs = self.cuts.total_pairs() as f64;
        let log_prior = self.log_p_split(depth) + 2.0 * self.log_p_terminal(depth + 1)
            - self.log_p_terminal(depth)
            - total_pairs.ln();

        // After growing, `leaf` becomes a nog; its parent stops being one if
        // it currently is.
        let parent = self.trees[m].node(leaf).parent;
        let parent_was_nog = parent != NO_PARENT && self.trees[m].nog_ids().contains(&parent);
        let nogs_after = self.trees[m].nog_ids().len() + 1 - usize::from(parent_was_nog);

        let p_grow = self.move_cum[0];
        let p_prune = self.move_cum[1] - self.move_cum[0];
        let log_proposal = p_prune.ln() - (nogs_after as f64).ln() - p_grow.ln()
            + (leaves.len() as f64).ln()
            + total_pairs.ln();

        if self.accept(log_lik + log_prior + log_proposal) {
            self.trees[m].grow(leaf, rule, left_rows, right_rows);
            self.stats.grow_accepted += 1;
        }
    }

    fn try_prune(&mut self, m: usize) {
        self.stats.prune_proposed += 1;
        let nogs = self.trees[m].nog_ids();
        if nogs.is_empty() {
            return;
        }
        let nog = nogs[self.rng.gen_range(0..nogs.len())];
        let (left, right) = self.trees[m].nog_children(nog);
        let (n_left, s_left) = {
            let rows = self.trees[m].leaf_rows(left);
            (rows.len(), self.resid_sum(rows))
        };
        let (n_right, s_right) = {
            let rows = self.trees[m].leaf_rows(right);
            (rows.len(), self.resid_sum(rows))
        };
        let depth = self.trees[m].node(nog).depth;

        let log_lik = self.leaf_log_marginal(n_left + n_right, s_left + s_right)
            - self.leaf_log_marginal(n_left, s_left)
            - self.leaf_log_marginal(n_right, s_right);

        let total_pairs = self.cuts.total_pairs() as f64;
        let log_prior = self.log_p_terminal(depth) - self.log_p_split(depth)
            - 2.0 * self.log_p_terminal(depth + 1)
            + total_pairs.ln();

        let leaves_after = self.trees[m].leaf_ids().len() - 1;
        let p_grow = self.move_cum[0];
        let p_prune = self.move_cum[1] - self.move_cum[0];
        let log_proposal = p_grow.ln() - (leaves_after as f64).ln() - total_pairs.ln()
            - p_prune.ln()
            + (nogs.len() as f64).ln();

        if self.accept(log_lik + log_prior + log_proposal) {
            self.trees[m].prune(nog);
            self.stats.prune_accepted += 1;
        }
    }

    fn try_change(&mut self, m: usize) {
        self.stats.change_proposed += 1;
        let nogs = self.trees[m].nog_ids();
        if nogs.is_empty() {
            return;
        }
        let Some(rule) = self.cuts.sample(&mut self.rng) else {
            return;
        };
        let nog = nogs[self.rng.gen_range(0..nogs.len())];
        let (left, right) = self.trees[m].nog_children(nog);
        let (n_left, s_left) = {
            let rows = self.trees[m].leaf_rows(left);
            (rows.len(), self.resid_sum(rows))
        };
        let (n_right, s_right) = {
            let rows = self.trees[m].leaf_rows(right);
            (rows.len(), self.resid_sum(rows))
        };
        let mut combined = self.trees[m].leaf_rows(left).to_vec();
        combined.extend_from_slice(self.trees[m].leaf_rows(right));
        let (new_left, new_right) = self.partition(&combined, rule);
        if new_left.is_empty() || new_right.is_empty() {
            return;
        }
        let s_new_left = self.resid_sum(&new_left);
        let s_new_right = self.resid_sum(&new_right);

        // Same structure and a symmetric rule proposal: only the leaf
        // marginals differ.
        let log_lik = self.leaf_log_marginal(new_left.len(), s_new_left)
            + self.leaf_log_marginal(new_right.len(), s_new_right)
            - self.leaf_log_marginal(n_left, s_left)
            - self.leaf_log_marginal(n_right, s_right);

        if self.accept(log_lik) {
            self.trees[m].change(nog, rule, new_left, new_right);
            self.stats.change_accepted += 1;
        }
    }

    /// Conjugate normal draw for every leaf of tree `m` against the partial
    /// residuals currently in `resid`.
    fn draw_leaf_values(&mut self, m: usize) {
        for leaf in self.trees[m].leaf_ids() {
            let rows = self.trees[m].leaf_rows(leaf);
            let n = rows.len() as f64;
            let s = self.resid_sum(rows);
            let denom = self.sigma2 + n * self.sigma_mu2;
            let mean = self.sigma_mu2 * s / denom;
            let var = self.sigma2 * self.sigma_mu2 / denom;
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.trees[m].set_leaf_mu(leaf, mean + var.sqrt() * z);
        }
    }

    /// Conjugate scaled-inverse-chi-squared draw for the noise variance.
    pub fn draw_sigma2(&mut self) {
        let ssr: f64 = self.resid.iter().map(|r| r * r).sum();
        let df = self.nu + self.resid.len() as f64;
        let chi2 = ChiSquared::new(df).expect("positive degrees of freedom");
        let draw: f64 = chi2.sample(&mut self.rng);
        self.sigma2 = (self.nu * self.lambda + ssr) / draw;
    }

    /// Ensemble prediction on the training rows for the current state,
    /// accumulated into `acc` (used for the cached train predictions).
    pub fn add_train_ensemble(&self, acc: &mut [f64]) {
        for (i, slot) in acc.iter_mut().enumerate() {
            let mut s = 0.0;
            for fit in &self.fits {
                s += fit[i];
            }
            *slot += s;
        }
    }
}
