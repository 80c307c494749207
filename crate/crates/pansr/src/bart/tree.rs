//! Regression-tree storage for the sampler.
//!
//! `SamplerTree` is the mutable arena the Gibbs sampler works on: leaves own
//! the indices of the training rows they contain, so partition sums and
//! structural moves are leaf-local. `FrozenTree` is the compact immutable
//! snapshot kept for every retained posterior draw.

/// Split rule: rows with `x[var] <= cut` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub var: usize,
    pub cut: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum NodeKind {
    Leaf { mu: f64, rows: Vec<u32> },
    Split { rule: SplitRule, left: usize, right: usize },
    Free,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub kind: NodeKind,
    pub parent: usize,
    pub depth: u16,
}

pub(crate) const NO_PARENT: usize = usize::MAX;

/// Mutable tree with row bookkeeping; node 0 is always the root.
#[derive(Debug, Clone)]
pub(crate) struct SamplerTree {
    nodes: Vec<Node>,
    free: Vec<usize>,
}

impl SamplerTree {
    /// A stump holding every training row with leaf value 0.
    pub fn stump(n_rows: usize) -> SamplerTree {
        SamplerTree {
            nodes: vec![Node {
                kind: NodeKind::Leaf {
                    mu: 0.0,
                    rows: (0..n_rows as u32).collect(),
                },
                parent: NO_PARENT,
                depth: 0,
            }],
            free: Vec::new(),
        }
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn is_stump(&self) -> bool {
        matches!(self.nodes[0].kind, NodeKind::Leaf { .. })
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Leaf { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Internal nodes whose both children are leaves (prunable / changeable).
    pub fn nog_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| match n.kind {
                NodeKind::Split { left, right, .. } => {
                    matches!(self.nodes[left].kind, NodeKind::Leaf { .. })
                        && matches!(self.nodes[right].kind, NodeKind::Leaf { .. })
                }
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn leaf_rows(&self, id: usize) -> &[u32] {
        match &self.nodes[id].kind {
            NodeKind::Leaf { rows, .. } => rows,
            _ => panic!("node {id} is not a leaf"),
        }
    }

    pub fn set_leaf_mu(&mut self, id: usize, mu: f64) {
        match &mut self.nodes[id].kind {
            NodeKind::Leaf { mu: slot, .. } => *slot = mu,
            _ => panic!("node {id} is not a leaf"),
        }
    }

    fn alloc(&mut self, node: Node) -> usize {
        if let Some(id) = self.free.pop() {
            self.nodes[id] = node;
            id
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    /// Splits leaf `id` with `rule`; row partitions are supplied by the
    /// caller (already validated as nonempty). Returns (left, right) ids.
    pub fn grow(
        &mut self,
        id: usize,
        rule: SplitRule,
        left_rows: Vec<u32>,
        right_rows: Vec<u32>,
    ) -> (usize, usize) {
        let depth = self.nodes[id].depth + 1;
        let left = self.alloc(Node {
            kind: NodeKind::Leaf { mu: 0.0, rows: left_rows },
            parent: id,
            depth,
        });
        let right = self.alloc(Node {
            kind: NodeKind::Leaf { mu: 0.0, rows: right_rows },
            parent: id,
            depth,
        });
        self.nodes[id].kind = NodeKind::Split { rule, left, right };
        (left, right)
    }

    /// Collapses nog node `id` back into a leaf holding both children's rows.
    pub fn prune(&mut self, id: usize) {
        let (left, right) = match self.nodes[id].kind {
            NodeKind::Split { left, right, .. } => (left, right),
            _ => panic!("prune target is not a split"),
        };
        let mut rows = match std::mem::replace(&mut self.nodes[left].kind, NodeKind::Free) {
            NodeKind::Leaf { rows, .. } => rows,
            _ => panic!("prune target is not a nog"),
        };
        match std::mem::replace(&mut self.nodes[right].kind, NodeKind::Free) {
            NodeKind::Leaf { rows: mut r, .. } => rows.append(&mut r),
            _ => panic!("prune target is not a nog"),
        }
        self.free.push(left);
        self.free.push(right);
        self.nodes[id].kind = NodeKind::Leaf { mu: 0.0, rows };
    }

    /// Children (left, right) of nog `id`.
    pub fn nog_children(&self, id: usize) -> (usize, usize) {
        match self.nodes[id].kind {
            NodeKind::Split { left, right, .. } => (left, right),
            _ => panic!("not a split"),
        }
    }

    /// Replaces the rule of nog `id` and installs the new row partition.
    pub fn change(
        &mut self,
        id: usize,
        rule: SplitRule,
        left_rows: Vec<u32>,
        right_rows: Vec<u32>,
    ) {
        let (left, right) = self.nog_children(id);
        self.nodes[left].kind = NodeKind::Leaf { mu: 0.0, rows: left_rows };
        self.nodes[right].kind = NodeKind::Leaf { mu: 0.0, rows: right_rows };
        match &mut self.nodes[id].kind {
            NodeKind::Split { rule: slot, .. } => *slot = rule,
            _ => unreachable!(),
        }
    }

    /// Writes each leaf's value into `fit` at the leaf's row positions.
    pub fn fill_fit(&self, fit: &mut [f64]) {
        for node in &self.nodes {
            if let NodeKind::Leaf { mu, rows } = &node.kind {
                for &r in rows {
                    fit[r as usize] = *mu;
                }
            }
        }
    }

    /// Split counts per feature and in total.
    pub fn count_splits(&self, counts: &mut [u32]) -> u32 {
        let mut total = 0;
        for node in &self.nodes {
            if let NodeKind::Split { rule, .. } = &node.kind {
                counts[rule.var] += 1;
                total += 1;
            }
        }
        total
    }

    pub fn freeze(&self) -> FrozenTree {
        fn pack(tree: &SamplerTree, id: usize, out: &mut Vec<FrozenNode>) -> u32 {
            let slot = out.len() as u32;
            match &tree.nodes[id].kind {
                NodeKind::Leaf { mu, .. } => out.push(FrozenNode::Leaf { mu: *mu }),
                NodeKind::Split { rule, left, right } => {
                    out.push(FrozenNode::Leaf { mu: 0.0 }); // placeholder
                    let l = pack(tree, *left, out);
                    let r = pack(tree, *right, out);
                    out[slot as usize] = FrozenNode::Split {
                        var: rule.var as u32,
                        cut: rule.cut,
                        left: l,
                        right: r,
                    };
                }
                NodeKind::Free => panic!("freeze hit a freed node"),
            }
            slot
        }
        let mut nodes = Vec::new();
        pack(self, 0, &mut nodes);
        FrozenTree { nodes }
    }
}

/// Immutable compact tree; evaluation walks from node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTree {
    nodes: Vec<FrozenNode>,
}

#[derive(Debug, Clone, PartialEq)]
enum FrozenNode {
    Leaf { mu: f64 },
    Split { var: u32, cut: f64, left: u32, right: u32 },
}

impl FrozenTree {
    /// Builds a tree directly from nodes; used to hand-construct known
    /// ensembles. `nodes[0]` is the root.
    pub fn from_leaf(mu: f64) -> FrozenTree {
        FrozenTree {
            nodes: vec![FrozenNode::Leaf { mu }],
        }
    }

    /// A single split with two leaf children.
    pub fn single_split(var: usize, cut: f64, left_mu: f64, right_mu: f64) -> FrozenTree {
        FrozenTree {
            nodes: vec![
                FrozenNode::Split { var: var as u32, cut, left: 1, right: 2 },
                FrozenNode::Leaf { mu: left_mu },
                FrozenNode::Leaf { mu: right_mu },
            ],
        }
    }

    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                FrozenNode::Leaf { mu } => return *mu,
                FrozenNode::Split { var, cut, left, right } => {
                    at = if row[*var as usize] <= *cut {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn num_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, FrozenNode::Split { .. }))
            .count()
    }

    pub fn count_splits(&self, counts: &mut [u32]) -> u32 {
        let mut total = 0;
        for node in &self.nodes {
            if let FrozenNode::Split { var, .. } = node {
                counts[*var as usize] += 1;
                total += 1;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grow_prune_round_trip_restores_rows() {
        let mut t = SamplerTree::stump(6);
        assert!(t.is_stump());
        let rule = SplitRule { var: 0, cut: 0.5 };
        let (l, r) = t.grow(0, rule, vec![0, 1, 2], vec![3, 4, 5]);
        assert_eq!(t.leaf_rows(l), &[0, 1, 2]);
        assert_eq!(t.leaf_rows(r), &[3, 4, 5]);
        assert_eq!(t.nog_ids(), vec![0]);
        t.prune(0);
        assert!(t.is_stump());
        let mut rows = t.leaf_rows(0).to_vec();
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn freeze_matches_sampler_tree() {
        let mut t = SamplerTree::stump(4);
        t.grow(0, SplitRule { var: 1, cut: 0.3 }, vec![0, 1], vec![2, 3]);
        let leaves = t.leaf_ids();
        t.set_leaf_mu(leaves[0], -1.0);
        t.set_leaf_mu(leaves[1], 2.0);
        let f = t.freeze();
        assert_eq!(f.eval(&[9.0, 0.2]), -1.0);
        assert_eq!(f.eval(&[9.0, 0.9]), 2.0);
        assert_eq!(f.num_splits(), 1);
    }

    #[test]
    fn hand_built_step_function() {
        let f = FrozenTree::single_split(0, 0.5, -1.0, 1.0);
        assert_eq!(f.eval(&[0.5]), -1.0);
        assert_eq!(f.eval(&[0.500001]), 1.0);
    }
}
