//! Seeded random piecewise maps and dendrograms for property tests.
//!
//! Breakpoints are drawn from a coarse grid so that independent draws overlap
//! often, which keeps the interesting (non-disjoint) cases frequent.

use rand::Rng;

use crate::editable::{Piece, PiecewiseMap};
use crate::tree::{Dendrogram, TreeStructure};

/// Shape of random weights.
#[derive(Clone, Copy, Debug)]
pub struct MapShape {
    pub channels: usize,
    pub max_pieces: usize,
    /// Breakpoints are multiples of `step` in `[0, span]`.
    pub step: f64,
    pub span: f64,
    pub affine: bool,
}

impl Default for MapShape {
    fn default() -> Self {
        MapShape {
            channels: 1,
            max_pieces: 3,
            step: 0.5,
            span: 5.0,
            affine: false,
        }
    }
}

/// A nonzero random map.
pub fn random_map<R: Rng>(rng: &mut R, shape: &MapShape) -> PiecewiseMap {
    let slots = (shape.span / shape.step).round().max(1.0) as usize;
    loop {
        let k = rng.random_range(1..=shape.max_pieces.clamp(1, slots));
        let mut cuts: Vec<usize> = rand::seq::index::sample(rng, slots + 1, (2 * k).min(slots + 1)).into_vec();
        cuts.sort_unstable();
        let mut pieces = Vec::new();
        for pair in cuts.chunks(2) {
            if pair.len() < 2 {
                break;
            }
            let (a, b) = (pair[0] as f64 * shape.step, pair[1] as f64 * shape.step);
            let mut lo = Vec::with_capacity(shape.channels);
            let mut slope = Vec::with_capacity(shape.channels);
            for _ in 0..shape.channels {
                if shape.affine && rng.random_bool(0.5) {
                    // Endpoint values are nonnegative, so the piece is too.
                    let (va, vb) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
                    let s = (vb - va) / (b - a);
                    lo.push(va - s * a);
                    slope.push(s);
                } else {
                    lo.push(f64::from(rng.random_range(0..=6u8)) * 0.5);
                    slope.push(0.0);
                }
            }
            pieces.push(Piece::affine(a, b, lo, slope));
        }
        let m = PiecewiseMap::from_pieces(shape.channels, pieces).expect("generated pieces are valid");
        if !m.is_zero() {
            return m;
        }
    }
}

/// A random dendrogram with between 1 and `max_edges` edges; each new vertex
/// attaches below a uniformly chosen existing vertex.
pub fn random_dendrogram<R: Rng>(rng: &mut R, max_edges: usize, shape: &MapShape) -> Dendrogram {
    let edges = rng.random_range(1..=max_edges.max(1));
    let mut ids = vec!["r".to_string()];
    let mut parent = vec![None];
    let mut weights = vec![None];
    for i in 1..=edges {
        let p = rng.random_range(0..i);
        ids.push(format!("v{i}"));
        parent.push(Some(p));
        weights.push(Some(random_map(rng, shape)));
    }
    let s = TreeStructure::new(ids, parent).expect("random attachment builds a tree");
    Dendrogram::new(s, weights, None, shape.channels).expect("consistent shapes")
}

/// Splits a random edge at a random point strictly inside its support, so
/// both parts are nonzero. Returns `None` when no edge can be split.
pub fn random_split<R: Rng>(rng: &mut R, d: &Dendrogram) -> Option<Dendrogram> {
    let t = d.structure();
    let mut edges: Vec<usize> = (0..t.len()).filter(|&v| v != t.root()).collect();
    while !edges.is_empty() {
        let v = edges.swap_remove(rng.random_range(0..edges.len()));
        let w = d.weight(v)?;
        let Some((lo, hi)) = w.support() else { continue };
        if !hi.is_finite() {
            continue;
        }
        for _ in 0..16 {
            let at = rng.random_range(lo..hi);
            let (below, above) = (w.restrict(f64::NEG_INFINITY, at), w.restrict(at, f64::INFINITY));
            if !below.is_zero() && !above.is_zero() {
                return d.split_edge(v, below, above, None).ok();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_dendrograms_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = MapShape {
            affine: true,
            channels: 2,
            ..MapShape::default()
        };
        for _ in 0..200 {
            let d = random_dendrogram(&mut rng, 6, &shape);
            assert!(d.validate().is_empty());
            assert!(d.dim() >= 1 && d.dim() <= 6);
            let s = random_split(&mut rng, &d).unwrap();
            assert_eq!(s.len(), d.len() + 1);
            assert!((s.tree_norm() - d.tree_norm()).abs() < 1e-9);
        }
    }
}
