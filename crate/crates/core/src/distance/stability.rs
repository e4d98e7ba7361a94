//! Stability of the edit distance on unit-weighted merge trees: fields at
//! sup-distance `ε` yield trees at distance at most `2ε(rank(T) + rank(T'))`.

use serde::Serialize;

use crate::error::Result;
use crate::tree::Dendrogram;

/// Slack for the comparison against the bound.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub distance: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Compares the edit distance of two unit-weighted dendrograms with the
/// stability bound for fields at sup-distance `epsilon`.
pub fn stability_check(a: &Dendrogram, b: &Dendrogram, epsilon: f64) -> Result<StabilityReport> {
    let distance = super::distance(a, b)?;
    let bound = 2.0 * epsilon * (a.rank() + b.rank()) as f64;
    Ok(StabilityReport {
        epsilon,
        distance,
        bound,
        satisfied: distance <= bound + STABILITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{merge_tree_from_field, unit_weights, ScalarField1D};

    #[test]
    fn equal_trees_at_zero_epsilon() {
        let f = ScalarField1D::sample(0.0, 10.0, 101, f64::sin).unwrap();
        let d = unit_weights(&merge_tree_from_field(&f).unwrap(), 2.0).unwrap();
        let r = stability_check(&d, &d, 0.0).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.satisfied);
    }
}
