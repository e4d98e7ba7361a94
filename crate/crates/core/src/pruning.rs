//! Leaf pruning: repeatedly remove a leaf of minimal norm while that norm is
//! below a threshold, ghosting parents left with a single child.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tree::Dendrogram;

/// Leaf norms closer than this count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PruningResult {
    pub pruned: Dendrogram,
    /// Ids of the removed leaves, in removal order.
    pub removed_leaves: Vec<String>,
    pub pruning_error: f64,
}

/// Prunes leaves of norm below `epsilon`. Ties between minimal leaves are
/// broken by a ChaCha8 generator seeded with `seed`. The only child of the
/// root is never removed.
pub fn prune(d: &Dendrogram, epsilon: f64, seed: u64) -> PruningResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = d.clone();
    let mut removed = Vec::new();
    loop {
        let t = cur.structure();
        let root = t.root();
        let leaves: Vec<(usize, f64)> = t
            .leaves()
            .filter(|&v| !(t.parent(v) == Some(root) && t.children(root).len() == 1))
            .map(|v| (v, cur.weight(v).expect("edge").norm()))
            .collect();
        let Some(min) = leaves.iter().map(|l| l.1).min_by(f64::total_cmp) else {
            break;
        };
        if !(min < epsilon) {
            break;
        }
        let tied: Vec<usize> = leaves
            .iter()
            .filter(|l| l.1 - min <= TIE_TOL)
            .map(|l| l.0)
            .collect();
        let leaf = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        };
        let parent = t.parent(leaf).expect("leaves have parents");
        let parent_id = t.id(parent).to_string();
        removed.push(t.id(leaf).to_string());
        let (next, _) = cur.delete_edge(leaf).expect("leaves are not the root");
        cur = next;
        let t = cur.structure();
        let p = t.index_of(&parent_id).expect("parent survives");
        if p != t.root() && t.children(p).len() == 1 {
            cur = cur.ghost_vertex(p).expect("order-2 vertex");
        }
    }
    let pruning_error = pruning_error(d, &cur).unwrap_or(0.0);
    PruningResult {
        pruned: cur,
        removed_leaves: removed,
        pruning_error,
    }
}

/// Fraction of the norm lost by pruning.
pub fn pruning_error(original: &Dendrogram, pruned: &Dendrogram) -> Result<f64> {
    let total = original.tree_norm();
    if total <= 0.0 {
        return Err(Error::Precondition("the original dendrogram has zero norm".into()));
    }
    Ok(((total - pruned.tree_norm()) / total).clamp(0.0, 1.0))
}

/// Mean pruning error over a dataset at threshold `epsilon`.
pub fn mean_pruning_error(data: &[Dendrogram], epsilon: f64, seed: u64) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let sum: f64 = data.iter().map(|d| prune(d, epsilon, seed).pruning_error).sum();
    sum / data.len() as f64
}

/// Finds a threshold whose mean pruning error is close to `target`. The
/// error grows with the threshold, so a bisection on `[0, max norm]` works;
/// the closer of the two final brackets is returned with its error.
pub fn calibrate_epsilon(data: &[Dendrogram], target: f64, seed: u64) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("nothing to calibrate on".into()));
    }
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidInput(format!("target error {target} is outside [0, 1]")));
    }
    let mut lo = 0.0;
    let mut hi = data.iter().map(Dendrogram::tree_norm).fold(0.0, f64::max) * 1.01 + 1e-12;
    let (mut pe_lo, mut pe_hi) = (mean_pruning_error(data, lo, seed), mean_pruning_error(data, hi, seed));
    for _ in 0..60 {
        if pe_hi - pe_lo < 1e-6 || hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pe = mean_pruning_error(data, mid, seed);
        if pe < target {
            lo = mid;
            pe_lo = pe;
        } else {
            hi = mid;
            pe_hi = pe;
        }
    }
    if (pe_lo - target).abs() <= (pe_hi - target).abs() {
        Ok((lo, pe_lo))
    } else {
        Ok((hi, pe_hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::editable::PiecewiseMap;

    fn chi(a: f64, b: f64, v: f64) -> PiecewiseMap {
        PiecewiseMap::indicator(a, b, v).unwrap()
    }

    /// Root edge of norm 2, three leaves with norms 0.1, 5 and 7 under a
    /// cherry-plus-leaf shape.
    fn sample() -> Dendrogram {
        Dendrogram::from_edges(
            "r",
            vec![
                ("top", "r", chi(3.0, 4.0, 2.0)),
                ("m", "top", chi(1.0, 3.0, 1.0)),
                ("a", "m", chi(0.0, 1.0, 0.1)),
                ("b", "m", chi(0.0, 1.0, 5.0)),
                ("c", "top", chi(0.0, 3.0, 7.0 / 3.0)),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_threshold_keeps_everything() {
        let r = prune(&sample(), 0.0, 1);
        assert_eq!(r.pruned, sample());
        assert_eq!(r.pruning_error, 0.0);
    }

    #[test]
    fn one_leaf_below_threshold() {
        let d = sample();
        let r = prune(&d, 0.5, 1);
        assert_eq!(r.removed_leaves, vec!["a".to_string()]);
        assert!((r.pruning_error - 0.1 / d.tree_norm()).abs() < 1e-15);
        // m was ghosted into b's edge.
        assert!(r.pruned.structure().index_of("m").is_none());
        assert_eq!(r.pruned.rank(), 2);
    }

    #[test]
    fn large_threshold_leaves_a_chain() {
        let d = sample();
        let r = prune(&d, 100.0, 1);
        assert_eq!(r.pruned.len(), 2);
        assert_eq!(r.removed_leaves.len(), 2);
        let root_w = r.pruned.tree_norm();
        assert!(root_w > 2.0);
        assert!((r.pruning_error - (1.0 - root_w / d.tree_norm())).abs() < 1e-15);
    }

    #[test]
    fn idempotent_and_monotone() {
        let d = sample();
        let mut last = 0.0;
        for eps in [0.0, 0.2, 3.0, 6.0, 8.0, 20.0] {
            let r = prune(&d, eps, 3);
            assert_eq!(prune(&r.pruned, eps, 3).pruned, r.pruned);
            assert!(r.pruning_error >= last);
            last = r.pruning_error;
        }
    }

    #[test]
    fn ties_follow_the_seed() {
        let d = Dendrogram::from_edges(
            "r",
            vec![
                ("m", "r", chi(1.0, 2.0, 1.0)),
                ("a", "m", chi(0.0, 1.0, 1.0)),
                ("b", "m", chi(0.0, 1.0, 1.0)),
            ],
            None,
        )
        .unwrap();
        let picks: std::collections::BTreeSet<String> =
            (0..32).map(|s| prune(&d, 1.5, s).removed_leaves[0].clone()).collect();
        assert_eq!(picks.len(), 2);
        assert_eq!(prune(&d, 1.5, 7), prune(&d, 1.5, 7));
    }

    #[test]
    fn error_on_zero_norm() {
        let e = Dendrogram::single("r", 1);
        assert!(pruning_error(&e, &e).is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let data = vec![sample(), sample()];
        let (eps, pe) = calibrate_epsilon(&data, 0.005, 1).unwrap();
        assert!(eps > 0.1 && eps <= 5.0 + 1e-9);
        assert!((pe - 0.1 / sample().tree_norm()).abs() < 1e-12);
    }
}
