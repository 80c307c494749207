//! Two-cluster algorithms over scalar values.
//!
//! The screening rule needs exactly two groups of average ranks. The default
//! is agglomerative hierarchical clustering with average linkage (UPGMA),
//! cut at the final merge; k-means++ and a two-component Gaussian mixture
//! are provided as ablation arms.

use super::SelectError;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A two-way split of scalar values. Label 0 is the cluster with the
/// smaller mean (ties broken toward the cluster containing index 0).
#[derive(Debug, Clone)]
pub struct TwoClusters {
    pub labels: Vec<usize>,
    /// Set when the split carries no information (all values tied, or the
    /// two cluster means coincide).
    pub degenerate: bool,
}

impl TwoClusters {
    fn from_raw(values: &[f64], mut labels: Vec<usize>) -> TwoClusters {
        let mean = |lab: usize| {
            let picked: Vec<f64> = values
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == lab)
                .map(|(v, _)| *v)
                .collect();
            picked.iter().sum::<f64>() / picked.len() as f64
        };
        let (m0, m1) = (mean(0), mean(1));
        let zero_is_low = match m0.partial_cmp(&m1) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Greater) => false,
            // Equal means: the cluster holding index 0 takes label 0.
            _ => labels[0] == 0,
        };
        if !zero_is_low {
            for l in &mut labels {
                *l = 1 - *l;
            }
        }
        TwoClusters {
            labels,
            degenerate: m0 == m1,
        }
    }

    pub fn cluster_mean(&self, values: &[f64], label: usize) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (v, &l) in values.iter().zip(&self.labels) {
            if l == label {
                sum += v;
                count += 1;
            }
        }
        sum / count as f64
    }
}

/// UPGMA on the pairwise absolute differences, cut into two clusters.
///
/// Merging uses the Lance-Williams average-linkage update; ties in the merge
/// choice break toward the pair with the lowest original indices, so the
/// result is deterministic.
pub fn ahc_two_cluster(values: &[f64]) -> Result<TwoClusters, SelectError> {
    let p = values.len();
    if p < 2 {
        return Err(SelectError::TooFewFeatures(p));
    }

    // Active clusters keyed by their smallest member index.
    let mut members: Vec<Option<Vec<usize>>> = (0..p).map(|i| Some(vec![i])).collect();
    let mut size: Vec<usize> = vec![1; p];
    let mut dist = vec![vec![0.0f64; p]; p];
    for i in 0..p {
        for j in (i + 1)..p {
            let d = (values[i] - values[j]).abs();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    let mut active: Vec<usize> = (0..p).collect();
    while active.len() > 2 {
        // Closest active pair, lexicographic tie-break.
        let mut best = (f64::INFINITY, p, p);
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let d = dist[lo][hi];
                if d < best.0 || (d == best.0 && (lo, hi) < (best.1, best.2)) {
                    best = (d, lo, hi);
                }
            }
        }
        let (_, keep, drop) = best;
        // Average-linkage distance update.
        for &k in &active {
            if k == keep || k == drop {
                continue;
            }
            let d = (size[keep] as f64 * dist[keep][k] + size[drop] as f64 * dist[drop][k])
                / (size[keep] + size[drop]) as f64;
            dist[keep][k] = d;
            dist[k][keep] = d;
        }
        let moved = members[drop].take().expect("active cluster");
        members[keep].as_mut().expect("active cluster").extend(moved);
        size[keep] += size[drop];
        active.retain(|&c| c != drop);
    }

    let mut labels = vec![0usize; p];
    for &i in members[active[1]].as_ref().expect("active cluster") {
        labels[i] = 1;
    }
    Ok(TwoClusters::from_raw(values, labels))
}

/// k-means++ with two centers (Lloyd iterations until stable).
pub fn kmeans_two_cluster(values: &[f64], seed: u64) -> Result<TwoClusters, SelectError> {
    let p = values.len();
    if p < 2 {
        return Err(SelectError::TooFewFeatures(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = values[rng.gen_range(0..p)];
    // Second seed drawn proportional to squared distance from the first.
    let weights: Vec<f64> = values.iter().map(|v| (v - first) * (v - first)).collect();
    let total: f64 = weights.iter().sum();
    let second = if total > 0.0 {
        let mut t = rng.gen::<f64>() * total;
        let mut pick = values[p - 1];
        for (v, w) in values.iter().zip(&weights) {
            if t < *w {
                pick = *v;
                break;
            }
            t -= w;
        }
        pick
    } else {
        // All values identical; fall back to the shared tie convention.
        let mut labels = vec![0usize; p];
        labels[p - 1] = 1;
        return Ok(TwoClusters::from_raw(values, labels));
    };

    let mut centers = [first, second];
    let mut labels = vec![0usize; p];
    for _ in 0..100 {
        let mut changed = false;
        for (i, v) in values.iter().enumerate() {
            let l = usize::from((v - centers[1]).abs() < (v - centers[0]).abs());
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }
        for c in 0..2 {
            let picked: Vec<f64> = values
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(v, _)| *v)
                .collect();
            if !picked.is_empty() {
                centers[c] = picked.iter().sum::<f64>() / picked.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    if labels.iter().all(|&l| l == labels[0]) {
        // Lloyd collapsed to one cluster; peel off the farthest point.
        let far = values
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                (*a - centers[0])
                    .abs()
                    .partial_cmp(&(*b - centers[0]).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        for (i, l) in labels.iter_mut().enumerate() {
            *l = usize::from(i == far);
        }
    }
    Ok(TwoClusters::from_raw(values, labels))
}

/// Two-component Gaussian mixture fitted by EM, assignments by posterior
/// responsibility.
pub fn gmm_two_cluster(values: &[f64], seed: u64) -> Result<TwoClusters, SelectError> {
    let p = values.len();
    if p < 2 {
        return Err(SelectError::TooFewFeatures(p));
    }
    let spread = crate::data::sample_variance(values);
    if spread == 0.0 {
        let mut labels = vec![0usize; p];
        labels[p - 1] = 1;
        return Ok(TwoClusters::from_raw(values, labels));
    }
    // Initialize from the k-means split.
    let init = kmeans_two_cluster(values, seed)?;
    let mut mu = [
        init.cluster_mean(values, 0),
        init.cluster_mean(values, 1),
    ];
    let mut var = [spread / 2.0; 2];
    let mut pi = [0.5f64; 2];
    let floor = 1e-9 * spread;

    let mut resp0 = vec![0.5f64; p];
    for _ in 0..200 {
        // E step.
        let mut changed = 0.0f64;
        for (i, v) in values.iter().enumerate() {
            let d0 = pi[0] * normal_pdf(*v, mu[0], var[0]);
            let d1 = pi[1] * normal_pdf(*v, mu[1], var[1]);
            let r = if d0 + d1 > 0.0 { d0 / (d0 + d1) } else { 0.5 };
            changed = changed.max((r - resp0[i]).abs());
            resp0[i] = r;
        }
        // M step.
        for c in 0..2 {
            let mut w_sum = 0.0;
            let mut m_sum = 0.0;
            for (v, r0) in values.iter().zip(&resp0) {
                let w = if c == 0 { *r0 } else { 1.0 - *r0 };
                w_sum += w;
                m_sum += w * v;
            }
            if w_sum > 0.0 {
                mu[c] = m_sum / w_sum;
                let mut v_sum = 0.0;
                for (v, r0) in values.iter().zip(&resp0) {
                    let w = if c == 0 { *r0 } else { 1.0 - *r0 };
                    v_sum += w * (v - mu[c]) * (v - mu[c]);
                }
                var[c] = (v_sum / w_sum).max(floor);
                pi[c] = w_sum / p as f64;
            }
        }
        if changed < 1e-10 {
            break;
        }
    }
    let labels: Vec<usize> = resp0.iter().map(|&r| usize::from(r < 0.5)).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        // One component swallowed everything; split at the widest gap as a
        // deterministic fallback.
        return Ok(split_at_widest_gap(values));
    }
    Ok(TwoClusters::from_raw(values, labels))
}

fn normal_pdf(x: f64, mu: f64, var: f64) -> f64 {
    let z = (x - mu) * (x - mu) / (2.0 * var);
    (-z).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn split_at_widest_gap(values: &[f64]) -> TwoClusters {
    let p = values.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut best = (f64::NEG_INFINITY, 0usize);
    for w in 0..p - 1 {
        let gap = values[order[w + 1]] - values[order[w]];
        if gap > best.0 {
            best = (gap, w);
        }
    }
    let mut labels = vec![0usize; p];
    for &i in &order[best.1 + 1..] {
        labels[i] = 1;
    }
    TwoClusters::from_raw(values, labels)
}
