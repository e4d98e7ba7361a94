//! Exhaustive edit distance for small dendrograms, used as a test oracle.
//!
//! Enumerates every pair of deletion sets, ghosts the vertices left with one
//! child, and finds the cheapest isomorphism between the reduced trees.

use std::collections::HashMap;

use crate::editable::PiecewiseMap;
use crate::error::{Error, Result};
use crate::tree::Dendrogram;

pub const DEFAULT_MAX_EDGES: usize = 8;

/// A reduced tree: deletions applied, order-2 vertices ghosted.
struct Reduced {
    root: usize,
    children: Vec<Vec<usize>>,
    weight: Vec<Option<PiecewiseMap>>,
}

fn reduce(d: &Dendrogram, edges: &[usize], mask: u32) -> Reduced {
    let t = d.structure();
    let mut kept = vec![true; t.len()];
    for (bit, &v) in edges.iter().enumerate() {
        if mask & (1 << bit) != 0 {
            kept[v] = false;
        }
    }
    let kept_parent = |v: usize| t.ancestors(v).find(|&u| kept[u]);
    let mut kept_kids = vec![0usize; t.len()];
    for v in 0..t.len() {
        if kept[v] {
            if let Some(p) = kept_parent(v) {
                kept_kids[p] += 1;
            }
        }
    }
    let is_end = |v: usize| kept[v] && (v == t.root() || kept_kids[v] != 1);
    let mut slot = vec![usize::MAX; t.len()];
    let mut count = 0;
    for v in 0..t.len() {
        if is_end(v) {
            slot[v] = count;
            count += 1;
        }
    }
    let mut children = vec![Vec::new(); count];
    let mut weight = vec![None; count];
    for v in 0..t.len() {
        if !is_end(v) || v == t.root() {
            continue;
        }
        let mut w = d.weight(v).expect("edge").clone();
        let mut p = kept_parent(v).expect("kept root");
        while !is_end(p) {
            w = w.add(d.weight(p).expect("edge")).expect("same channels");
            p = kept_parent(p).expect("kept root");
        }
        children[slot[p]].push(slot[v]);
        weight[slot[v]] = Some(w);
    }
    Reduced {
        root: slot[t.root()],
        children,
        weight,
    }
}

/// Cheapest isomorphism cost between the subtrees at `x` and `y`, or `inf`.
fn iso(a: &Reduced, b: &Reduced, x: usize, y: usize, memo: &mut HashMap<(usize, usize), f64>) -> f64 {
    if let Some(&c) = memo.get(&(x, y)) {
        return c;
    }
    let (ka, kb) = (&a.children[x], &b.children[y]);
    let cost = if ka.len() != kb.len() {
        f64::INFINITY
    } else {
        let k = ka.len();
        let mut pair = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                let (ci, cj) = (ka[i], kb[j]);
                let wa = a.weight[ci].as_ref().expect("edge");
                let wb = b.weight[cj].as_ref().expect("edge");
                pair[i][j] = wa.l1_distance_unchecked(wb) + iso(a, b, ci, cj, memo);
            }
        }
        // Assignment by dynamic programming over subsets of `kb`.
        let mut dp = vec![f64::INFINITY; 1 << k];
        dp[0] = 0.0;
        for mask in 0..(1usize << k) {
            let i = mask.count_ones() as usize;
            if i == k || dp[mask].is_infinite() {
                continue;
            }
            for (j, cost) in pair[i].iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let next = mask | (1 << j);
                    dp[next] = dp[next].min(dp[mask] + cost);
                }
            }
        }
        dp[(1 << k) - 1]
    };
    memo.insert((x, y), cost);
    cost
}

/// Exact edit distance by exhaustive search. Refuses dendrograms with more
/// than `max_edges` edges.
pub fn brute_force_distance(a: &Dendrogram, b: &Dendrogram, max_edges: usize) -> Result<f64> {
    if a.channels() != b.channels() {
        return Err(Error::ChannelMismatch {
            left: a.channels(),
            right: b.channels(),
        });
    }
    for d in [a, b] {
        if d.dim() > max_edges.min(20) {
            return Err(Error::TooLarge {
                edges: d.dim(),
                limit: max_edges.min(20),
            });
        }
        let t = d.structure();
        for v in 0..t.len() {
            if d.weight(v).is_some_and(|w| !w.is_bounded()) {
                return Err(Error::Unbounded(t.id(v).to_string()));
            }
        }
    }
    let side = |d: &Dendrogram| {
        let t = d.structure();
        let edges: Vec<usize> = (0..t.len()).filter(|&v| v != t.root()).collect();
        let norms: Vec<f64> = edges.iter().map(|&v| d.weight(v).expect("edge").norm()).collect();
        let mut out: Vec<(f64, Reduced)> = (0..(1u32 << edges.len()))
            .map(|mask| {
                let cost: f64 = (0..edges.len())
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| norms[i])
                    .sum();
                (cost, reduce(d, &edges, mask))
            })
            .collect();
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    };
    let (sa, sb) = (side(a), side(b));
    let mut best = f64::INFINITY;
    for (ca, ra) in &sa {
        if *ca >= best {
            break;
        }
        for (cb, rb) in &sb {
            if ca + cb >= best {
                break;
            }
            if ra.children.len() != rb.children.len() {
                continue;
            }
            let mut memo = HashMap::new();
            let c = ca + cb + iso(ra, rb, ra.root, rb.root, &mut memo);
            best = best.min(c);
        }
    }
    Ok(best)
}
