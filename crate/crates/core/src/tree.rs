//! Tree structures, merge trees and dendrograms, with the edits that act on
//! them: ghosting, splitting, deletion, binarization and canonicalization.
//!
//! Vertices live in an arena and are addressed by index; every vertex also
//! carries an opaque string id used in file formats. Edges are identified by
//! their lower (child) vertex. Edits never mutate: they return a new value.

use std::collections::HashMap;
use std::fmt;

use crate::editable::PiecewiseMap;
use crate::error::{Error, Result};

/// Slack used when comparing heights against weight supports.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Rooted tree over an arena of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeStructure {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    index: HashMap<String, usize>,
}

impl TreeStructure {
    /// Builds a tree from vertex ids and parent links. Exactly one vertex must
    /// have no parent, and every vertex must reach it.
    pub fn new(ids: Vec<String>, parent: Vec<Option<usize>>) -> Result<Self> {
        let n = ids.len();
        if n == 0 || parent.len() != n {
            return Err(Error::InvalidTree("empty tree or parent list of wrong length".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate vertex id '{id}'")));
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == v {
                    return Err(Error::InvalidTree(format!("vertex '{}' has a bad parent", ids[v])));
                }
                children[p].push(v);
            }
        }
        // Every vertex must reach the root without revisiting anything.
        let mut state = vec![0u8; n]; // 0 unknown, 1 in progress, 2 reaches root
        state[root] = 2;
        for start in 0..n {
            let mut path = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                path.push(v);
                v = parent[v].expect("only the root has no parent");
            }
            if state[v] == 1 {
                return Err(Error::InvalidTree(format!("cycle through vertex '{}'", ids[v])));
            }
            for p in path {
                state[p] = 2;
            }
        }
        Ok(TreeStructure {
            ids,
            parent,
            children,
            root,
            index,
        })
    }

    pub fn single(id: impl Into<String>) -> Self {
        TreeStructure::new(vec![id.into()], vec![None]).expect("single vertex tree is valid")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v != self.root && self.children[v].is_empty()
    }

    /// Number of incident edges.
    pub fn order(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.is_leaf(v))
    }

    /// Number of leaves.
    pub fn rank(&self) -> usize {
        self.leaves().count()
    }

    /// Number of edges.
    pub fn dim(&self) -> usize {
        self.len() - 1
    }

    /// Vertices with every child before its parent.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = self.preorder();
        out.reverse();
        out
    }

    /// Vertices with every parent before its children.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parent[v], move |&u| self.parent[u])
    }

    pub fn is_ancestor(&self, a: usize, d: usize) -> bool {
        self.ancestors(d).any(|u| u == a)
    }

    /// `v` and all its descendants.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u].iter().rev());
        }
        out
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let mut seen = vec![false; self.len()];
        seen[a] = true;
        for u in self.ancestors(a) {
            seen[u] = true;
        }
        std::iter::once(b)
            .chain(self.ancestors(b))
            .find(|&u| seen[u])
            .expect("every pair of vertices shares the root")
    }

    fn fresh_id(&self, base: &str) -> String {
        let mut i = 1usize;
        loop {
            let cand = format!("{base}~{i}");
            if !self.index.contains_key(&cand) {
                return cand;
            }
            i += 1;
        }
    }
}

/// A tree structure with heights increasing toward a root at `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeTree {
    structure: TreeStructure,
    heights: Vec<f64>,
}

/// A point of a merge tree: the edge above `child`, at `height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreePoint {
    pub child: usize,
    pub height: f64,
}

impl MergeTree {
    pub fn new(structure: TreeStructure, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != structure.len() {
            return Err(Error::InvalidTree("height list has the wrong length".into()));
        }
        if heights[structure.root()] != f64::INFINITY {
            return Err(Error::InvalidTree("the root must sit at +inf".into()));
        }
        for v in 0..structure.len() {
            if v == structure.root() {
                continue;
            }
            let h = heights[v];
            if !h.is_finite() {
                return Err(Error::InvalidTree(format!(
                    "vertex '{}' has a non-finite height",
                    structure.id(v)
                )));
            }
            let p = structure.parent(v).expect("non-root vertex");
            if heights[p] <= h {
                return Err(Error::InvalidTree(format!(
                    "height of '{}' ({}) is not below its parent '{}' ({})",
                    structure.id(v),
                    h,
                    structure.id(p),
                    heights[p]
                )));
            }
        }
        if structure.len() > 1 && structure.children(structure.root()).len() != 1 {
            return Err(Error::InvalidTree("the root of a merge tree has order 1".into()));
        }
        Ok(MergeTree { structure, heights })
    }

    pub fn structure(&self) -> &TreeStructure {
        &self.structure
    }

    pub fn height(&self, v: usize) -> f64 {
        self.heights[v]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Largest finite height.
    pub fn max_height(&self) -> f64 {
        self.heights
            .iter()
            .copied()
            .filter(|h| h.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rank(&self) -> usize {
        self.structure.rank()
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// LCA metric of the display poset: `2·h(lca) - h(p) - h(q)`.
    pub fn display_distance(&self, p: TreePoint, q: TreePoint) -> Result<f64> {
        for pt in [p, q] {
            self.check_point(pt)?;
        }
        let t = &self.structure;
        if p.child == q.child {
            return Ok((p.height - q.height).abs());
        }
        // The edge above `a` continues through every ancestor of `a`.
        if t.is_ancestor(q.child, p.child) {
            return Ok(q.height - p.height);
        }
        if t.is_ancestor(p.child, q.child) {
            return Ok(p.height - q.height);
        }
        let l = t.lca(p.child, q.child);
        let hl = self.heights[l];
        Ok(2.0 * hl - p.height - q.height)
    }

    fn check_point(&self, pt: TreePoint) -> Result<()> {
        let t = &self.structure;
        if pt.child >= t.len() || pt.child == t.root() {
            return Err(Error::Precondition("a point must lie on an edge".into()));
        }
        let lo = self.heights[pt.child];
        let hi = self.heights[t.parent(pt.child).expect("non-root")];
        if !(pt.height >= lo && pt.height <= hi) || !pt.height.is_finite() {
            return Err(Error::Precondition(format!(
                "height {} is outside the span [{lo}, {hi}] of the edge above '{}'",
                pt.height,
                t.id(pt.child)
            )));
        }
        Ok(())
    }
}

/// A rule broken by a dendrogram.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub rule: &'static str,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.location, self.detail)
    }
}

/// A tree structure with a weight map on its edges, optionally with heights
/// when it is the local representation of a function on a merge tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    structure: TreeStructure,
    // Indexed by child vertex; `None` exactly at the root.
    weights: Vec<Option<PiecewiseMap>>,
    heights: Option<Vec<f64>>,
    channels: usize,
}

impl Dendrogram {
    /// Checks shapes only (lengths, channel counts, one weight per edge);
    /// semantic rules are reported by [`Dendrogram::validate`].
    pub fn new(
        structure: TreeStructure,
        weights: Vec<Option<PiecewiseMap>>,
        heights: Option<Vec<f64>>,
        channels: usize,
    ) -> Result<Self> {
        if weights.len() != structure.len() {
            return Err(Error::InvalidTree("weight list has the wrong length".into()));
        }
        if channels == 0 {
            return Err(Error::InvalidTree("channel count must be positive".into()));
        }
        if let Some(h) = &heights {
            if h.len() != structure.len() {
                return Err(Error::InvalidTree("height list has the wrong length".into()));
            }
        }
        for (v, w) in weights.iter().enumerate() {
            match (v == structure.root(), w) {
                (true, Some(_)) => {
                    return Err(Error::InvalidTree("the root carries no edge weight".into()))
                }
                (false, None) => {
                    return Err(Error::InvalidTree(format!(
                        "edge above '{}' has no weight",
                        structure.id(v)
                    )))
                }
                (false, Some(w)) if w.channels() != channels => {
                    return Err(Error::ChannelMismatch {
                        left: channels,
                        right: w.channels(),
                    })
                }
                _ => {}
            }
        }
        Ok(Dendrogram {
            structure,
            weights,
            heights,
            channels,
        })
    }

    /// The single-vertex dendrogram.
    pub fn single(id: impl Into<String>, channels: usize) -> Self {
        Dendrogram {
            structure: TreeStructure::single(id),
            weights: vec![None],
            heights: None,
            channels,
        }
    }

    /// Convenience constructor from `(child, parent, weight)` triples.
    pub fn from_edges(
        root: &str,
        edges: Vec<(&str, &str, PiecewiseMap)>,
        heights: Option<Vec<(&str, f64)>>,
    ) -> Result<Self> {
        let mut ids = vec![root.to_string()];
        for (c, _, _) in &edges {
            ids.push(c.to_string());
        }
        let pos: HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if pos.len() != ids.len() {
            return Err(Error::InvalidTree("duplicate vertex id".into()));
        }
        let mut parent = vec![None; ids.len()];
        let mut weights = vec![None; ids.len()];
        let channels = edges.first().map_or(1, |e| e.2.channels());
        for (i, (_, p, w)) in edges.into_iter().enumerate() {
            let pi = *pos
                .get(p)
                .ok_or_else(|| Error::InvalidTree(format!("unknown parent '{p}'")))?;
            parent[i + 1] = Some(pi);
            weights[i + 1] = Some(w);
        }
        let heights = match heights {
            None => None,
            Some(list) => {
                let mut h = vec![f64::NAN; ids.len()];
                for (id, v) in list {
                    let i = *pos
                        .get(id)
                        .ok_or_else(|| Error::InvalidTree(format!("unknown vertex '{id}'")))?;
                    h[i] = v;
                }
                h[0] = f64::INFINITY;
                Some(h)
            }
        };
        let structure = TreeStructure::new(ids, parent)?;
        Dendrogram::new(structure, weights, heights, channels)
    }

    /// Attaches weights to a merge tree.
    pub fn from_merge_tree(tree: &MergeTree, weights: Vec<Option<PiecewiseMap>>, channels: usize) -> Result<Self> {
        Dendrogram::new(
            tree.structure().clone(),
            weights,
            Some(tree.heights().to_vec()),
            channels,
        )
    }

    pub fn structure(&self) -> &TreeStructure {
        &self.structure
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn heights(&self) -> Option<&[f64]> {
        self.heights.as_deref()
    }

    /// Weight of the edge above `v`; `None` at the root.
    pub fn weight(&self, v: usize) -> Option<&PiecewiseMap> {
        self.weights[v].as_ref()
    }

    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.structure.rank()
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// The merge tree underneath, when heights are present.
    pub fn merge_tree(&self) -> Option<MergeTree> {
        MergeTree::new(self.structure.clone(), self.heights.clone()?).ok()
    }

    /// Largest finite vertex height, falling back to the largest support end
    /// of non-root edges when no heights are recorded.
    pub fn max_finite_height(&self) -> f64 {
        match &self.heights {
            Some(h) => h.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max),
            None => (0..self.len())
                .filter(|&v| {
                    self.structure
                        .parent(v)
                        .is_some_and(|p| p != self.structure.root())
                })
                .filter_map(|v| self.weights[v].as_ref()?.support().map(|s| s.1))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `Σ_e d(φ(e), 0)`.
    pub fn tree_norm(&self) -> f64 {
        self.weights.iter().flatten().map(PiecewiseMap::norm).sum()
    }

    /// Every broken rule; empty when the dendrogram is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let t = &self.structure;
        let mut out = Vec::new();
        for v in 0..t.len() {
            let Some(p) = t.parent(v) else { continue };
            let w = self.weights[v].as_ref().expect("non-root edges carry weights");
            let loc = format!("edge '{}'->'{}'", t.id(v), t.id(p));
            if w.is_zero() && p != t.root() {
                out.push(Violation {
                    rule: "proper weight",
                    location: loc.clone(),
                    detail: "zero weight on an edge".into(),
                });
            }
            if !w.is_bounded() && p != t.root() {
                out.push(Violation {
                    rule: "bounded weight",
                    location: loc.clone(),
                    detail: "only the root edge may extend to +inf".into(),
                });
            }
            if let Some(h) = &self.heights {
                let (lo, hi) = (h[v], h[p]);
                if !(lo < hi) || lo.is_nan() {
                    out.push(Violation {
                        rule: "height order",
                        location: loc.clone(),
                        detail: format!("heights {lo} -> {hi} do not increase"),
                    });
                }
                if let Some((s, e)) = w.support() {
                    if s < lo - SUPPORT_TOL || e > hi + SUPPORT_TOL {
                        out.push(Violation {
                            rule: "support exceeds edge span",
                            location: loc,
                            detail: format!("support [{s}, {e}) is not inside [{lo}, {hi}]"),
                        });
                    }
                }
            }
        }
        if let Some(h) = &self.heights {
            if h[t.root()] != f64::INFINITY {
                out.push(Violation {
                    rule: "height order",
                    location: format!("vertex '{}'", t.id(t.root())),
                    detail: "the root sits at +inf".into(),
                });
            }
        }
        out
    }

    /// Reassembles a dendrogram from the kept vertices of `self`.
    fn rebuild(
        &self,
        keep: &[bool],
        parent: &[Option<usize>],
        mut weights: Vec<Option<PiecewiseMap>>,
        heights: Option<&[f64]>,
    ) -> Dendrogram {
        let mut map = vec![usize::MAX; keep.len()];
        let mut ids = Vec::new();
        for v in 0..keep.len() {
            if keep[v] {
                map[v] = ids.len();
                ids.push(self.structure.ids[v].clone());
            }
        }
        let new_parent: Vec<Option<usize>> = (0..keep.len())
            .filter(|&v| keep[v])
            .map(|v| parent[v].map(|p| map[p]))
            .collect();
        let new_weights: Vec<Option<PiecewiseMap>> = (0..keep.len())
            .filter(|&v| keep[v])
            .map(|v| weights[v].take())
            .collect();
        let new_heights =
            heights.map(|h| (0..keep.len()).filter(|&v| keep[v]).map(|v| h[v]).collect());
        let structure = TreeStructure::new(ids, new_parent).expect("edits preserve tree shape");
        Dendrogram {
            structure,
            weights: new_weights,
            heights: new_heights,
            channels: self.channels,
        }
    }

    /// Removes the order-2 vertex `v`, merging its two edges; the merged
    /// weight is the sum of both.
    pub fn ghost_vertex(&self, v: usize) -> Result<Dendrogram> {
        let t = &self.structure;
        if v >= t.len() || v == t.root() || t.children(v).len() != 1 {
            return Err(Error::Precondition(format!(
                "vertex '{}' is not of order 2",
                t.ids.get(v).map_or("?", |s| s.as_str())
            )));
        }
        let c = t.children(v)[0];
        let mut parent = t.parent.clone();
        parent[c] = t.parent(v);
        let mut weights = self.weights.clone();
        let merged = weights[c].as_ref().expect("edge").add(weights[v].as_ref().expect("edge"))?;
        weights[c] = Some(merged);
        let mut keep = vec![true; t.len()];
        keep[v] = false;
        Ok(self.rebuild(&keep, &parent, weights, self.heights.as_deref()))
    }

    /// Splits the edge above `child` into a lower edge weighted `lower` and an
    /// upper edge weighted `upper`. Their sum must equal the current weight.
    /// When heights are present, `height` places the new vertex and both
    /// parts must be supported on their side of it.
    pub fn split_edge(
        &self,
        child: usize,
        lower: PiecewiseMap,
        upper: PiecewiseMap,
        height: Option<f64>,
    ) -> Result<Dendrogram> {
        let t = &self.structure;
        let Some(p) = t.parent(child) else {
            return Err(Error::Precondition("the root has no edge to split".into()));
        };
        let w = self.weights[child].as_ref().expect("edge");
        let sum = lower.add(&upper)?;
        let gap = sum.l1_distance(w)?;
        if gap > SUPPORT_TOL || sum.is_bounded() != w.is_bounded() {
            return Err(Error::Precondition(format!(
                "split parts do not add up to the edge weight (gap {gap})"
            )));
        }
        if lower.is_zero() || upper.is_zero() {
            return Err(Error::Precondition("both split parts must be nonzero".into()));
        }
        let heights = match (&self.heights, height) {
            (Some(h), Some(m)) => {
                if !(m > h[child] && m < h[p]) {
                    return Err(Error::Precondition(format!(
                        "split height {m} is outside ({}, {})",
                        h[child], h[p]
                    )));
                }
                let below = lower.support().is_none_or(|(_, e)| e <= m + SUPPORT_TOL);
                let above = upper.support().is_none_or(|(s, _)| s >= m - SUPPORT_TOL);
                if !below || !above {
                    return Err(Error::Precondition(format!(
                        "split parts are not separated by height {m}"
                    )));
                }
                let mut h = h.clone();
                h.push(m);
                Some(h)
            }
            (Some(_), None) => {
                return Err(Error::Precondition(
                    "a split of a height-bearing dendrogram needs a height".into(),
                ))
            }
            (None, _) => None,
        };
        let new_id = t.fresh_id(t.id(child));
        let m = t.len();
        let mut ids = t.ids.clone();
        ids.push(new_id);
        let mut parent = t.parent.clone();
        parent.push(Some(p));
        parent[child] = Some(m);
        let mut weights = self.weights.clone();
        weights[child] = Some(lower);
        weights.push(Some(upper));
        let structure = TreeStructure::new(ids, parent)?;
        Ok(Dendrogram {
            structure,
            weights,
            heights,
            channels: self.channels,
        })
    }

    /// Splits the edge above `child` at height `at`, restricting its weight
    /// to either side.
    pub fn split_edge_at(&self, child: usize, at: f64) -> Result<Dendrogram> {
        let w = self
            .weight(child)
            .ok_or_else(|| Error::Precondition("the root has no edge to split".into()))?;
        let lower = w.restrict(f64::NEG_INFINITY, at);
        let upper = w.restrict(at, f64::INFINITY);
        let h = self.heights.as_ref().map(|_| at);
        self.split_edge(child, lower, upper, h)
    }

    /// Deletes the edge above `v`; the parent of `v` gains its children.
    /// Returns the edited dendrogram and the cost `‖φ(v)‖`.
    pub fn delete_edge(&self, v: usize) -> Result<(Dendrogram, f64)> {
        let t = &self.structure;
        let Some(p) = t.parent.get(v).copied().flatten() else {
            return Err(Error::Precondition("the root cannot be deleted".into()));
        };
        let cost = self.weights[v].as_ref().expect("edge").norm();
        let mut parent = t.parent.clone();
        for &c in t.children(v) {
            parent[c] = Some(p);
        }
        let mut keep = vec![true; t.len()];
        keep[v] = false;
        Ok((
            self.rebuild(&keep, &parent, self.weights.clone(), self.heights.as_deref()),
            cost,
        ))
    }

    /// Ghosts every non-root vertex with exactly one child.
    pub fn canonicalize(&self) -> Dendrogram {
        let t = &self.structure;
        let ghost: Vec<bool> = (0..t.len())
            .map(|v| v != t.root() && t.children(v).len() == 1)
            .collect();
        if !ghost.iter().any(|g| *g) {
            return self.clone();
        }
        let keep: Vec<bool> = ghost.iter().map(|g| !g).collect();
        let mut parent = t.parent.clone();
        let mut weights = self.weights.clone();
        for v in 0..t.len() {
            if !keep[v] || v == t.root() {
                continue;
            }
            let mut w = weights[v].take().expect("edge");
            let mut p = t.parent(v).expect("non-root");
            while ghost[p] {
                w = w.add(self.weights[p].as_ref().expect("edge")).expect("same channels");
                p = t.parent(p).expect("ghosted vertices are not the root");
            }
            parent[v] = Some(p);
            weights[v] = Some(w);
        }
        self.rebuild(&keep, &parent, weights, self.heights.as_deref())
    }

    /// Adds auxiliary vertices so that every vertex has at most two children.
    /// Children are combed pairwise by decreasing subtree norm; auxiliary
    /// edges carry `epsilon_weight`, or a constant `1e-12` on an interval of
    /// length `1e-12` when `None`.
    pub fn binarize(&self, epsilon_weight: Option<&PiecewiseMap>) -> Result<Dendrogram> {
        const TINY: f64 = 1e-12;
        if let Some(e) = epsilon_weight {
            if e.channels() != self.channels {
                return Err(Error::ChannelMismatch {
                    left: self.channels,
                    right: e.channels(),
                });
            }
            if e.is_zero() {
                return Err(Error::Precondition("epsilon weight must be nonzero".into()));
            }
        }
        let t = &self.structure;
        if (0..t.len()).all(|v| t.children(v).len() <= 2) {
            return Ok(self.clone());
        }
        let sub_norm = self.subtree_norms();
        let mut ids = t.ids.clone();
        let mut parent = t.parent.clone();
        let mut weights = self.weights.clone();
        let mut heights = self.heights.clone();
        let mut taken: std::collections::HashSet<String> = ids.iter().cloned().collect();
        for v in 0..t.len() {
            let mut kids: Vec<usize> = t.children(v).to_vec();
            if kids.len() <= 2 {
                continue;
            }
            kids.sort_by(|a, b| {
                sub_norm[*b]
                    .partial_cmp(&sub_norm[*a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(b))
            });
            let mut attach = v;
            for (j, &c) in kids.iter().enumerate() {
                if j == 0 || j + 1 == kids.len() {
                    parent[c] = Some(attach);
                    continue;
                }
                let mut k = 1usize;
                let aux_id = loop {
                    let cand = format!("{}+aux{k}", t.id(v));
                    if taken.insert(cand.clone()) {
                        break cand;
                    }
                    k += 1;
                };
                let aux = ids.len();
                ids.push(aux_id);
                parent.push(Some(attach));
                parent[c] = Some(aux);
                let aux_h = heights.as_ref().map(|h| h[v] - TINY * j as f64);
                let w = match epsilon_weight {
                    Some(e) => e.clone(),
                    None => {
                        let at = aux_h.filter(|x| x.is_finite()).unwrap_or(0.0);
                        PiecewiseMap::constant(at, at + TINY, &vec![TINY; self.channels])?
                    }
                };
                weights.push(Some(w));
                if let (Some(h), Some(ah)) = (heights.as_mut(), aux_h) {
                    h.push(ah);
                }
                attach = aux;
            }
        }
        let structure = TreeStructure::new(ids, parent)?;
        Ok(Dendrogram {
            structure,
            weights,
            heights,
            channels: self.channels,
        })
    }

    /// `‖sub(v)‖` including the edge above `v`.
    fn subtree_norms(&self) -> Vec<f64> {
        let t = &self.structure;
        let mut out = vec![0.0; t.len()];
        for v in t.postorder() {
            let own = self.weights[v].as_ref().map_or(0.0, |w| w.norm());
            out[v] = own + t.children(v).iter().map(|&c| out[c]).sum::<f64>();
        }
        out
    }

    /// Replaces the weight of the edge into the root by its truncation at
    /// `k`; every other edge is unchanged.
    pub fn truncate(&self, k: f64) -> Result<Dendrogram> {
        let max_h = self.max_finite_height();
        if k < max_h {
            return Err(Error::TruncationTooLow { k, max_height: max_h });
        }
        let t = &self.structure;
        let mut weights = self.weights.clone();
        for &c in t.children(t.root()) {
            weights[c] = weights[c].take().map(|w| w.truncate(k));
        }
        Ok(Dendrogram {
            structure: t.clone(),
            weights,
            heights: self.heights.clone(),
            channels: self.channels,
        })
    }

    /// Structural equality up to vertex ids, with weights compared in L1
    /// within `tol`. Heights are ignored.
    pub fn equivalent(&self, other: &Dendrogram, tol: f64) -> bool {
        if self.channels != other.channels || self.len() != other.len() {
            return false;
        }
        self.equivalent_at(self.structure.root(), other, other.structure.root(), tol)
    }

    fn equivalent_at(&self, v: usize, other: &Dendrogram, w: usize, tol: f64) -> bool {
        let a = self.structure.children(v);
        let b = other.structure.children(w);
        if a.len() != b.len() {
            return false;
        }
        let ok_edge = |x: usize, y: usize| {
            let (wa, wb) = (self.weights[x].as_ref().expect("edge"), other.weights[y].as_ref().expect("edge"));
            wa.l1_distance_unchecked(wb) <= tol && wa.is_bounded() == wb.is_bounded()
        };
        let mut used = vec![false; b.len()];
        fn assign(
            i: usize,
            a: &[usize],
            b: &[usize],
            used: &mut [bool],
            ok: &dyn Fn(usize, usize) -> bool,
        ) -> bool {
            if i == a.len() {
                return true;
            }
            for j in 0..b.len() {
                if !used[j] && ok(a[i], b[j]) {
                    used[j] = true;
                    if assign(i + 1, a, b, used, ok) {
                        return true;
                    }
                    used[j] = false;
                }
            }
            false
        }
        let ok = |x: usize, y: usize| ok_edge(x, y) && self.equivalent_at(x, other, y, tol);
        assign(0, a, b, &mut used, &ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(a: f64, b: f64, v: f64) -> PiecewiseMap {
        PiecewiseMap::indicator(a, b, v).unwrap()
    }

    /// §6.1-style dendrogram of {-1, 0, 2}, truncated at 3.
    fn three_points() -> Dendrogram {
        Dendrogram::from_edges(
            "r",
            vec![
                ("m2", "r", chi(2.0, 3.0, 3.0)),
                ("m1", "m2", chi(1.0, 2.0, 2.0)),
                ("a", "m1", chi(0.0, 1.0, 1.0)),
                ("b", "m1", chi(0.0, 1.0, 1.0)),
                ("c", "m2", chi(0.0, 2.0, 1.0)),
            ],
            Some(vec![("m2", 2.0), ("m1", 1.0), ("a", 0.0), ("b", 0.0), ("c", 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn structure_rejects_cycles_and_multiple_roots() {
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        assert!(TreeStructure::new(ids.clone(), vec![None, Some(2), Some(1)]).is_err());
        assert!(TreeStructure::new(ids.clone(), vec![None, None, Some(0)]).is_err());
        assert!(TreeStructure::new(ids, vec![None, Some(0), Some(1)]).is_ok());
    }

    #[test]
    fn single_vertex_is_valid() {
        let d = Dendrogram::single("r", 1);
        assert!(d.validate().is_empty());
        assert_eq!(d.tree_norm(), 0.0);
    }

    #[test]
    fn zero_weight_violates_properness() {
        let d = Dendrogram::from_edges(
            "r",
            vec![("a", "r", chi(0.0, 1.0, 1.0)), ("b", "a", PiecewiseMap::zero(1))],
            None,
        )
        .unwrap();
        let v = d.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "proper weight");
    }

    #[test]
    fn support_outside_edge_span() {
        let d = Dendrogram::from_edges(
            "r",
            vec![("m", "r", chi(2.0, 4.0, 1.0)), ("a", "m", chi(0.0, 3.0, 1.0))],
            Some(vec![("m", 2.0), ("a", 0.0)]),
        )
        .unwrap();
        let v = d.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "support exceeds edge span");
    }

    #[test]
    fn ghost_merges_chain() {
        let d = Dendrogram::from_edges(
            "r",
            vec![("v", "r", chi(1.0, 2.0, 1.0)), ("a", "v", chi(0.0, 1.0, 1.0))],
            None,
        )
        .unwrap();
        let v = d.structure().index_of("v").unwrap();
        let g = d.ghost_vertex(v).unwrap();
        assert_eq!(g.len(), 2);
        let a = g.structure().index_of("a").unwrap();
        assert_eq!(g.weight(a).unwrap(), &chi(0.0, 2.0, 1.0));
        let leaf = d.structure().index_of("a").unwrap();
        assert!(d.ghost_vertex(leaf).is_err());
        assert!(d.ghost_vertex(d.structure().root()).is_err());
    }

    #[test]
    fn ghost_then_split_restores() {
        let d = Dendrogram::from_edges(
            "r",
            vec![("v", "r", chi(1.0, 2.0, 1.0)), ("a", "v", chi(0.0, 1.0, 1.0))],
            Some(vec![("v", 1.0), ("a", 0.0)]),
        )
        .unwrap();
        let g = d.ghost_vertex(d.structure().index_of("v").unwrap()).unwrap();
        let a = g.structure().index_of("a").unwrap();
        let s = g.split_edge_at(a, 1.0).unwrap();
        assert!(s.equivalent(&d, 0.0));
        assert!(s.validate().is_empty());
    }

    #[test]
    fn split_affine_weight() {
        let w = PiecewiseMap::affine(0.0, 1.0, &[0.0], &[2.0]).unwrap();
        let d = Dendrogram::from_edges("r", vec![("a", "r", w.clone())], None).unwrap();
        let s = d.split_edge_at(1, 0.5).unwrap();
        let a = s.structure().index_of("a").unwrap();
        let up = s.structure().parent(a).unwrap();
        assert_eq!(s.weight(a).unwrap(), &PiecewiseMap::affine(0.0, 0.5, &[0.0], &[2.0]).unwrap());
        assert_eq!(s.weight(up).unwrap(), &PiecewiseMap::affine(0.5, 1.0, &[0.0], &[2.0]).unwrap());
        assert!((s.tree_norm() - d.tree_norm()).abs() < 1e-15);
    }

    #[test]
    fn split_rejects_mismatched_parts() {
        let d = Dendrogram::from_edges("r", vec![("a", "r", chi(0.0, 2.0, 1.0))], None).unwrap();
        assert!(d
            .split_edge(1, chi(0.0, 1.0, 1.0), chi(1.0, 2.0, 2.0), None)
            .is_err());
        assert!(d
            .split_edge(1, chi(0.0, 1.0, 1.0), chi(1.0, 2.0, 1.0), None)
            .is_ok());
    }

    #[test]
    fn delete_leaf_and_internal() {
        let d = three_points();
        let a = d.structure().index_of("a").unwrap();
        let (e, cost) = d.delete_edge(a).unwrap();
        assert_eq!(cost, 1.0);
        assert_eq!(e.len(), 5);
        let m1 = d.structure().index_of("m1").unwrap();
        let (e, cost) = d.delete_edge(m1).unwrap();
        assert_eq!(cost, 2.0);
        let m2 = e.structure().index_of("m2").unwrap();
        assert_eq!(e.structure().children(m2).len(), 3);
        assert!(e.validate().is_empty());
        assert!(d.delete_edge(d.structure().root()).is_err());
    }

    #[test]
    fn deleting_everything_costs_the_norm() {
        let mut d = three_points();
        let total = d.tree_norm();
        let mut spent = 0.0;
        while d.len() > 1 {
            let v = (0..d.len()).find(|&v| v != d.structure().root()).unwrap();
            let (e, c) = d.delete_edge(v).unwrap();
            spent += c;
            d = e;
        }
        assert!((spent - total).abs() < 1e-12);
    }

    #[test]
    fn tree_norm_of_three_points() {
        assert_eq!(three_points().tree_norm(), 9.0);
    }

    #[test]
    fn canonicalize_chain() {
        let d = Dendrogram::from_edges(
            "r",
            vec![
                ("v3", "r", chi(3.0, 4.0, 1.0)),
                ("v2", "v3", chi(2.0, 3.0, 1.0)),
                ("v1", "v2", chi(1.0, 2.0, 1.0)),
                ("a", "v1", chi(0.0, 1.0, 1.0)),
            ],
            None,
        )
        .unwrap();
        let c = d.canonicalize();
        assert_eq!(c.len(), 2);
        assert_eq!(c.weight(1).unwrap(), &chi(0.0, 4.0, 1.0));
        let same = three_points();
        assert_eq!(same.canonicalize(), same);
    }

    #[test]
    fn binarize_shapes() {
        let b = three_points();
        assert_eq!(b.binarize(None).unwrap(), b);
        let star = |k: usize| {
            let names: Vec<String> = (0..k).map(|i| format!("l{i}")).collect();
            let mut edges = vec![("m", "r", chi(1.0, 2.0, 1.0))];
            for n in &names {
                edges.push((n.as_str(), "m", chi(0.0, 1.0, 1.0)));
            }
            Dendrogram::from_edges("r", edges, None).unwrap()
        };
        let s3 = star(3).binarize(None).unwrap();
        assert_eq!(s3.len(), star(3).len() + 1);
        let s4 = star(4).binarize(None).unwrap();
        assert_eq!(s4.len(), star(4).len() + 2);
        assert!((0..s4.len()).all(|v| s4.structure().children(v).len() <= 2));
        assert!((s4.tree_norm() - star(4).tree_norm() - 2e-24).abs() < 1e-20);
    }

    #[test]
    fn display_distances() {
        let d = three_points();
        let m = d.merge_tree().unwrap();
        let t = m.structure();
        let a = t.index_of("a").unwrap();
        let b = t.index_of("b").unwrap();
        let m1 = t.index_of("m1").unwrap();
        let p = TreePoint { child: a, height: 0.0 };
        assert_eq!(m.display_distance(p, p).unwrap(), 0.0);
        let q = TreePoint { child: b, height: 0.0 };
        assert_eq!(m.display_distance(p, q).unwrap(), 2.0);
        let up = TreePoint { child: m1, height: 2.0 };
        assert_eq!(m.display_distance(up, p).unwrap(), 2.0);
        // The same vertex seen from the edge below and the edge above.
        let below = TreePoint { child: a, height: 1.0 };
        let above = TreePoint { child: m1, height: 1.0 };
        assert_eq!(m.display_distance(below, above).unwrap(), 0.0);
        assert!(m.display_distance(TreePoint { child: a, height: 1.5 }, p).is_err());
    }

    #[test]
    fn rank_and_dim() {
        let m = three_points().merge_tree().unwrap();
        assert_eq!(m.rank(), 3);
        assert_eq!(m.dim(), 5);
        assert_eq!(m.max_height(), 2.0);
    }
}
