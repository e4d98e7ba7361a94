//! Edit plans in normal form: delete edges on both sides, ghost the vertices
//! left with a single child, then shrink each merged chain onto its partner.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::editable::PiecewiseMap;
use crate::error::{Error, Result};
use crate::tree::Dendrogram;

/// A chain `a_bottom → a_top` of the first tree shrunk onto the chain
/// `b_bottom → b_top` of the second. Tops are the matched upper endpoints;
/// the weight of a chain is the sum of the kept edges from the bottom up to,
/// but excluding, the top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedChain {
    pub a_top: String,
    pub a_bottom: String,
    pub b_top: String,
    pub b_bottom: String,
    pub shrink_cost: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EditPlan {
    pub deleted_a: Vec<String>,
    pub deleted_b: Vec<String>,
    pub matched_chains: Vec<MatchedChain>,
    pub total_cost: f64,
}

/// Kept-vertex view of one side after the deletions of a plan.
struct Reduced<'a> {
    d: &'a Dendrogram,
    kept: Vec<bool>,
    kept_parent: Vec<Option<usize>>,
    kept_children: Vec<usize>,
}

impl<'a> Reduced<'a> {
    fn new(d: &'a Dendrogram, deleted: &[String], side: &str) -> Result<(Self, f64)> {
        let t = d.structure();
        let mut kept = vec![true; t.len()];
        let mut cost = 0.0;
        for id in deleted {
            let v = t
                .index_of(id)
                .ok_or_else(|| Error::Precondition(format!("{side}: unknown vertex '{id}'")))?;
            if v == t.root() {
                return Err(Error::Precondition(format!("{side}: the root cannot be deleted")));
            }
            if !kept[v] {
                return Err(Error::Precondition(format!("{side}: '{id}' deleted twice")));
            }
            kept[v] = false;
            cost += d.weight(v).expect("edge").norm();
        }
        let mut kept_parent = vec![None; t.len()];
        let mut kept_children = vec![0usize; t.len()];
        for v in 0..t.len() {
            if kept[v] && v != t.root() {
                let p = t.ancestors(v).find(|&u| kept[u]).expect("the root is kept");
                kept_parent[v] = Some(p);
                kept_children[p] += 1;
            }
        }
        Ok((
            Reduced {
                d,
                kept,
                kept_parent,
                kept_children,
            },
            cost,
        ))
    }

    fn index(&self, id: &str, side: &str) -> Result<usize> {
        let v = self
            .d
            .structure()
            .index_of(id)
            .ok_or_else(|| Error::Precondition(format!("{side}: unknown vertex '{id}'")))?;
        if !self.kept[v] {
            return Err(Error::Precondition(format!("{side}: chain endpoint '{id}' is deleted")));
        }
        Ok(v)
    }

    /// Merged weight of the chain from `bottom` up to `top`, marking the
    /// covered vertices. Every vertex strictly inside must be ghostable.
    fn chain(
        &self,
        bottom: usize,
        top: usize,
        endpoints: &HashSet<usize>,
        covered: &mut [bool],
        side: &str,
    ) -> Result<PiecewiseMap> {
        let t = self.d.structure();
        let mut w = PiecewiseMap::zero(self.d.channels());
        let mut y = bottom;
        loop {
            if y == t.root() {
                return Err(Error::Precondition(format!(
                    "{side}: chain from '{}' never reaches '{}'",
                    t.id(bottom),
                    t.id(top)
                )));
            }
            if covered[y] {
                return Err(Error::Precondition(format!(
                    "{side}: edge above '{}' is in two chains",
                    t.id(y)
                )));
            }
            covered[y] = true;
            w = w.add(self.d.weight(y).expect("edge"))?;
            let p = self.kept_parent[y].expect("kept non-root vertex");
            if p == top {
                return Ok(w);
            }
            if endpoints.contains(&p) {
                return Err(Error::Precondition(format!(
                    "{side}: chain from '{}' meets endpoint '{}' before '{}'",
                    t.id(bottom),
                    t.id(p),
                    t.id(top)
                )));
            }
            if self.kept_children[p] != 1 {
                return Err(Error::Precondition(format!(
                    "{side}: vertex '{}' inside a chain is not of order 2",
                    t.id(p)
                )));
            }
            y = p;
        }
    }
}

impl EditPlan {
    /// Checks that the plan is a valid edit path from `a` to `b` and returns
    /// its cost, recomputed from the weights: the deleted norms plus the L1
    /// distance between the weights of each pair of matched chains.
    pub fn evaluate(&self, a: &Dendrogram, b: &Dendrogram) -> Result<f64> {
        Ok(self.recompute(a, b)?.total_cost)
    }

    /// Returns a copy with every shrink cost and the total recomputed.
    pub fn recompute(&self, a: &Dendrogram, b: &Dendrogram) -> Result<EditPlan> {
        if a.channels() != b.channels() {
            return Err(Error::ChannelMismatch {
                left: a.channels(),
                right: b.channels(),
            });
        }
        let (ra, del_a) = Reduced::new(a, &self.deleted_a, "first tree")?;
        let (rb, del_b) = Reduced::new(b, &self.deleted_b, "second tree")?;
        let (ta, tb) = (a.structure(), b.structure());

        let mut ends_a = HashSet::from([ta.root()]);
        let mut ends_b = HashSet::from([tb.root()]);
        let mut idx = Vec::with_capacity(self.matched_chains.len());
        for c in &self.matched_chains {
            let q = (
                ra.index(&c.a_bottom, "first tree")?,
                ra.index(&c.a_top, "first tree")?,
                rb.index(&c.b_bottom, "second tree")?,
                rb.index(&c.b_top, "second tree")?,
            );
            ends_a.extend([q.0, q.1]);
            ends_b.extend([q.2, q.3]);
            idx.push(q);
        }

        // Endpoints must correspond one to one, roots to roots.
        let mut map: HashMap<usize, usize> = HashMap::from([(ta.root(), tb.root())]);
        let mut back: HashMap<usize, usize> = HashMap::from([(tb.root(), ta.root())]);
        for &(ab, at, bb, bt) in &idx {
            for (x, y) in [(ab, bb), (at, bt)] {
                if *map.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
                    return Err(Error::Precondition(format!(
                        "endpoint '{}' is matched inconsistently",
                        ta.id(x)
                    )));
                }
            }
        }
        let mut bottoms_a = HashSet::new();
        for &(ab, ..) in &idx {
            if !bottoms_a.insert(ab) {
                return Err(Error::Precondition(format!(
                    "'{}' is the bottom of two chains",
                    ta.id(ab)
                )));
            }
        }
        if ends_a.iter().any(|&e| e != ta.root() && !bottoms_a.contains(&e)) {
            return Err(Error::Precondition("an endpoint has no chain above it".into()));
        }

        let mut cov_a = vec![false; ta.len()];
        let mut cov_b = vec![false; tb.len()];
        let mut out = self.clone();
        let mut total = del_a + del_b;
        for (k, &(ab, at, bb, bt)) in idx.iter().enumerate() {
            let wa = ra.chain(ab, at, &ends_a, &mut cov_a, "first tree")?;
            let wb = rb.chain(bb, bt, &ends_b, &mut cov_b, "second tree")?;
            if !wa.is_bounded() || !wb.is_bounded() {
                return Err(Error::Unbounded(ta.id(ab).to_string()));
            }
            let c = wa.l1_distance(&wb)?;
            out.matched_chains[k].shrink_cost = c;
            total += c;
        }
        for (r, cov, side) in [(&ra, &cov_a, "first tree"), (&rb, &cov_b, "second tree")] {
            let t = r.d.structure();
            if let Some(v) = (0..t.len()).find(|&v| v != t.root() && r.kept[v] && !cov[v]) {
                return Err(Error::Precondition(format!(
                    "{side}: kept edge above '{}' is neither deleted nor matched",
                    t.id(v)
                )));
            }
        }
        out.total_cost = total;
        Ok(out)
    }
}
