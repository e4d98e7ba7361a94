//! Constructors that turn raw data into decorated dendrograms: merge trees of
//! sampled 1-D fields with sublevel-measure weights, single-linkage trees of
//! point clouds with cardinality weights, unit weights and Betti weights.

use std::collections::{BTreeMap, HashMap};

use crate::editable::{Piece, PiecewiseMap};
use crate::error::{Error, Result};
use crate::tree::{Dendrogram, MergeTree, TreeStructure};

/// A sampled field on an interval, read as its piecewise-linear interpolant.
///
/// Abscissae are non-decreasing; two consecutive samples may share an
/// abscissa to encode a jump. The vertical segment of a jump has no length.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ScalarField1D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput("x and y columns differ in length".into()));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput("a field needs at least two samples".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field samples must be finite".into()));
        }
        for i in 1..xs.len() {
            if xs[i] < xs[i - 1] {
                return Err(Error::InvalidInput(format!("x decreases at sample {i}")));
            }
            if xs[i] == xs[i - 1] && i >= 2 && xs[i - 1] == xs[i - 2] {
                return Err(Error::InvalidInput(format!(
                    "more than two samples share x = {} at sample {i}",
                    xs[i]
                )));
            }
        }
        if xs[0] == xs[xs.len() - 1] {
            return Err(Error::InvalidInput("the domain has zero length".into()));
        }
        Ok(ScalarField1D { xs, ys })
    }

    /// Samples `f` on a uniform grid of `n` points over `[a, b]`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("a field needs at least two samples".into()));
        }
        let xs: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        ScalarField1D::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn domain_length(&self) -> f64 {
        self.xs[self.xs.len() - 1] - self.xs[0]
    }

    /// Value of the interpolant; at a jump the lower branch is returned.
    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v < x);
        if self.xs[i] == x {
            let mut lo = self.ys[i];
            if i + 1 < n && self.xs[i + 1] == x {
                lo = lo.min(self.ys[i + 1]);
            }
            return lo;
        }
        let (x0, x1, y0, y1) = (self.xs[i - 1], self.xs[i], self.ys[i - 1], self.ys[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// A nonempty set of points of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("a point cloud needs at least one point".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidInput("points need at least one coordinate".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} is not finite")));
            }
        }
        Ok(PointCloud { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
        ra
    }
}

/// Incremental construction of a merge tree from batches of equal heights.
struct TreeAssembly {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    heights: Vec<f64>,
    // Representative element (sample or point index) of each vertex.
    seeds: Vec<usize>,
}

impl TreeAssembly {
    fn new() -> Self {
        TreeAssembly {
            ids: Vec::new(),
            parent: Vec::new(),
            heights: Vec::new(),
            seeds: Vec::new(),
        }
    }

    fn push(&mut self, id: String, height: f64, seed: usize) -> usize {
        self.ids.push(id);
        self.parent.push(None);
        self.heights.push(height);
        self.seeds.push(seed);
        self.ids.len() - 1
    }

    /// Closes the tree with a root at `+inf` above the single top vertex.
    fn finish(mut self) -> Result<(MergeTree, Vec<usize>)> {
        let tops: Vec<usize> = (0..self.ids.len()).filter(|&v| self.parent[v].is_none()).collect();
        if tops.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "data produced {} disconnected components",
                tops.len()
            )));
        }
        let seed = self.seeds[tops[0]];
        let root = self.push("root".into(), f64::INFINITY, seed);
        self.parent[tops[0]] = Some(root);
        let structure = TreeStructure::new(self.ids, self.parent)?;
        Ok((MergeTree::new(structure, self.heights)?, self.seeds))
    }
}

/// Groups indices `order` (sorted by `key`) into runs of equal key.
fn equal_runs<'a>(order: &'a [usize], key: &'a dyn Fn(usize) -> f64) -> impl Iterator<Item = &'a [usize]> + 'a {
    order.chunk_by(move |a, b| key(*a) == key(*b))
}

fn field_tree(f: &ScalarField1D) -> Result<(MergeTree, Vec<usize>)> {
    let n = f.len();
    let ys = f.ys();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    // Current tree vertex of each component, keyed by union-find root.
    let mut vertex_of: HashMap<usize, usize> = HashMap::new();
    let mut asm = TreeAssembly::new();
    let key = |i: usize| ys[i];
    for batch in equal_runs(&order, &key) {
        let h = ys[batch[0]];
        // Vertices of components that existed before this batch.
        let mut old_roots: Vec<usize> = Vec::new();
        for &i in batch {
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n && active[j] {
                    let r = uf.find(j);
                    if !old_roots.contains(&r) {
                        old_roots.push(r);
                    }
                }
            }
        }
        let old: Vec<(usize, usize)> = old_roots
            .iter()
            .map(|&r| (r, vertex_of.remove(&r).expect("active component has a vertex")))
            .collect();
        for &i in batch {
            active[i] = true;
        }
        for &i in batch {
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n && active[j] {
                    uf.union(i, j);
                }
            }
        }
        // Group the new components with the old ones they swallowed.
        let mut groups: BTreeMap<usize, (usize, Vec<usize>)> = BTreeMap::new();
        for &i in batch {
            let r = uf.find(i);
            groups.entry(r).or_insert((i, Vec::new()));
        }
        for &(old_root, v) in &old {
            let r = uf.find(old_root);
            groups.get_mut(&r).expect("old component touches the batch").1.push(v);
        }
        for (r, (seed, kids)) in groups {
            let v = match kids.len() {
                0 => asm.push(format!("m{seed}"), h, seed),
                1 => kids[0],
                _ => {
                    let v = asm.push(format!("s{seed}"), h, seed);
                    for k in kids {
                        asm.parent[k] = Some(v);
                    }
                    v
                }
            };
            vertex_of.insert(r, v);
        }
    }
    asm.finish()
}

/// Merge tree of the sublevel filtration of `f`.
///
/// Plateaus count as a single extremum and components meeting at the same
/// height merge at a single vertex.
pub fn merge_tree_from_field(f: &ScalarField1D) -> Result<MergeTree> {
    Ok(field_tree(f)?.0)
}

/// Measure of the component containing `seed` at every level in `[lo, hi)`,
/// exactly, as a piecewise-affine function of the level.
fn component_measure(f: &ScalarField1D, levels: &[f64], seed: usize, lo: f64, hi: f64) -> Vec<Piece> {
    let (xs, ys) = (f.xs(), f.ys());
    let n = xs.len();
    let mut pieces = Vec::new();
    let (mut l, mut r) = (seed, seed);
    let start = levels.partition_point(|&y| y <= lo);
    let mut cuts = vec![lo];
    cuts.extend(levels[start..].iter().copied().take_while(|&y| y < hi));
    cuts.push(hi);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        while l > 0 && ys[l - 1] <= a {
            l -= 1;
        }
        while r + 1 < n && ys[r + 1] <= a {
            r += 1;
        }
        let core = xs[r] - xs[l];
        let (mut slope, mut intercept) = (0.0, core);
        if l > 0 {
            // Left boundary moves outward along the segment (l-1, l).
            let s = (xs[l] - xs[l - 1]) / (ys[l - 1] - ys[l]);
            slope += s;
            intercept -= s * ys[l];
        }
        if r + 1 < n {
            let s = (xs[r + 1] - xs[r]) / (ys[r + 1] - ys[r]);
            slope += s;
            intercept -= s * ys[r];
        }
        if b.is_infinite() {
            pieces.push(Piece::constant(a, b, vec![core]));
        } else {
            pieces.push(Piece::affine(a, b, vec![intercept], vec![slope]));
        }
    }
    pieces
}

/// Decorates the merge tree of `f` with the length of each sublevel
/// component. The root edge is truncated at `k`; with `normalize` every value
/// is divided by the domain length.
pub fn sublevel_measure_weights(
    f: &ScalarField1D,
    tree: &MergeTree,
    normalize: bool,
    k: f64,
) -> Result<Dendrogram> {
    let (own, seeds) = field_tree(f)?;
    if !same_tree(&own, tree) {
        return Err(Error::Precondition(
            "the merge tree was not built from this field".into(),
        ));
    }
    let max_h = own.max_height();
    if k < max_h {
        return Err(Error::TruncationTooLow { k, max_height: max_h });
    }
    let mut levels: Vec<f64> = f.ys().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let scale = if normalize { 1.0 / f.domain_length() } else { 1.0 };
    let t = own.structure();
    let mut weights = vec![None; t.len()];
    for v in 0..t.len() {
        let Some(p) = t.parent(v) else { continue };
        let pieces = component_measure(f, &levels, seeds[v], own.height(v), own.height(p));
        let mut w = PiecewiseMap::from_pieces(1, pieces)?;
        if p == t.root() {
            w = w.truncate(k);
        }
        weights[v] = Some(if normalize { w.scale(scale) } else { w });
    }
    let d = Dendrogram::from_merge_tree(&own, weights, 1)?;
    reorder_like(d, tree)
}

/// Same vertices (by id), parents and heights.
fn same_tree(a: &MergeTree, b: &MergeTree) -> bool {
    let (ta, tb) = (a.structure(), b.structure());
    if ta.len() != tb.len() {
        return false;
    }
    (0..ta.len()).all(|v| {
        let Some(w) = tb.index_of(ta.id(v)) else { return false };
        let pa = ta.parent(v).map(|p| ta.id(p));
        let pb = tb.parent(w).map(|p| tb.id(p));
        pa == pb && a.height(v) == b.height(w)
    })
}

/// Rebuilds `d` with the vertex order of `like`, which has the same ids.
fn reorder_like(d: Dendrogram, like: &MergeTree) -> Result<Dendrogram> {
    let t = like.structure();
    let weights = (0..t.len())
        .map(|v| {
            let i = d.structure().index_of(t.id(v)).expect("same ids");
            d.weight(i).cloned()
        })
        .collect();
    Dendrogram::from_merge_tree(like, weights, d.channels())
}

/// Single-linkage merge tree of a point cloud. Every point is a leaf at
/// height 0, except that coincident points share one leaf. Pairs at equal
/// distance merge simultaneously.
pub fn single_linkage(c: &PointCloud) -> MergeTree {
    single_linkage_with_members(c).0
}

fn single_linkage_with_members(c: &PointCloud) -> (MergeTree, Vec<usize>) {
    let pts = c.points();
    let n = pts.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((euclidean(&pts[i], &pts[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut uf = UnionFind::new(n);
    let mut asm = TreeAssembly::new();
    let mut size = vec![1usize; n];
    let mut vertex_of: HashMap<usize, usize> = HashMap::new();
    let mut next = 0usize;
    let mut leaves_made = false;
    let make_leaves = |uf: &mut UnionFind, asm: &mut TreeAssembly, vertex_of: &mut HashMap<usize, usize>| {
        let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..n {
            let r = uf.find(i);
            by_root.entry(r).or_insert(i);
        }
        for (r, first) in by_root {
            let v = asm.push(format!("p{first}"), 0.0, first);
            vertex_of.insert(r, v);
        }
    };
    for batch in pairs.chunk_by(|a, b| a.0 == b.0) {
        let h = batch[0].0;
        if h == 0.0 {
            for &(_, i, j) in batch {
                uf.union(i, j);
            }
            continue;
        }
        if !leaves_made {
            make_leaves(&mut uf, &mut asm, &mut vertex_of);
            leaves_made = true;
        }
        let mut absorbed: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut touched: Vec<usize> = Vec::new();
        for &(_, i, j) in batch {
            let (ri, rj) = (uf.find(i), uf.find(j));
            if ri == rj {
                continue;
            }
            for r in [ri, rj] {
                if !touched.contains(&r) {
                    touched.push(r);
                }
            }
            uf.union(i, j);
        }
        for r in touched {
            let top = uf.find(r);
            absorbed.entry(top).or_default().push(r);
        }
        for (top, olds) in absorbed {
            let total: usize = olds.iter().map(|&r| size[r]).sum();
            let v = asm.push(format!("u{next}"), h, top);
            next += 1;
            for r in olds {
                let child = vertex_of.remove(&r).expect("component has a vertex");
                asm.parent[child] = Some(v);
            }
            size[top] = total;
            vertex_of.insert(top, v);
        }
    }
    if !leaves_made {
        make_leaves(&mut uf, &mut asm, &mut vertex_of);
    }
    let (tree, _) = asm.finish().expect("single linkage connects every point");
    // Number of points under each vertex.
    let mut members = vec![0usize; tree.structure().len()];
    let mut uf2 = UnionFind::new(n);
    for &(d, i, j) in &pairs {
        if d == 0.0 {
            uf2.union(i, j);
        }
    }
    let t = tree.structure();
    for i in 0..n {
        let r = uf2.find(i);
        let leaf = t
            .index_of(&format!("p{}", (0..n).find(|&q| uf2.find(q) == r).expect("nonempty")))
            .expect("every point has a leaf");
        members[leaf] += 1;
    }
    for v in t.postorder() {
        if t.is_leaf(v) {
            continue;
        }
        members[v] += t.children(v).iter().map(|&c| members[c]).sum::<usize>();
    }
    (tree, members)
}

fn check_truncation(tree: &MergeTree, k: f64) -> Result<()> {
    let max_h = tree.max_height();
    if k < max_h || k.is_nan() {
        return Err(Error::TruncationTooLow { k, max_height: max_h });
    }
    Ok(())
}

/// Decorates a single-linkage tree with cluster cardinalities, divided by the
/// number of points when `normalize` is set.
pub fn cardinality_weights(c: &PointCloud, tree: &MergeTree, normalize: bool, k: f64) -> Result<Dendrogram> {
    check_truncation(tree, k)?;
    let (own, members) = single_linkage_with_members(c);
    if !same_tree(&own, tree) {
        return Err(Error::Precondition(
            "the merge tree was not built from this point cloud".into(),
        ));
    }
    let total = c.len() as f64;
    let t = own.structure();
    let mut weights = vec![None; t.len()];
    for v in 0..t.len() {
        let Some(p) = t.parent(v) else { continue };
        let mut value = members[v] as f64;
        if normalize {
            value /= total;
        }
        let hi = own.height(p).min(k);
        let lo = own.height(v);
        weights[v] = Some(if hi > lo {
            PiecewiseMap::indicator(lo, hi, value)?
        } else {
            PiecewiseMap::zero(1)
        });
    }
    reorder_like(Dendrogram::from_merge_tree(&own, weights, 1)?, tree)
}

/// `χ_[h(v), min(h(p), k))` on every edge: the merge tree itself.
pub fn unit_weights(tree: &MergeTree, k: f64) -> Result<Dendrogram> {
    check_truncation(tree, k)?;
    let t = tree.structure();
    let mut weights = vec![None; t.len()];
    for v in 0..t.len() {
        let Some(p) = t.parent(v) else { continue };
        let (lo, hi) = (tree.height(v), tree.height(p).min(k));
        weights[v] = Some(if hi > lo {
            PiecewiseMap::indicator(lo, hi, 1.0)?
        } else {
            PiecewiseMap::zero(1)
        });
    }
    Dendrogram::from_merge_tree(tree, weights, 1)
}

/// Betti numbers of the component represented by one edge: constant, or a
/// list of steps each starting at a height.
#[derive(Clone, Debug, PartialEq)]
pub enum BettiEntry {
    Constant(Vec<u32>),
    Steps(Vec<(f64, Vec<u32>)>),
}

/// Betti numbers `(b_0, ..., b_p)` for every edge, keyed by child vertex id.
#[derive(Clone, Debug, PartialEq)]
pub struct BettiTable {
    pub dimension: usize,
    pub entries: BTreeMap<String, BettiEntry>,
}

impl BettiTable {
    /// Checks vector lengths, `b_0 ≥ 1` and step ordering.
    pub fn check(&self) -> Result<()> {
        let want = self.dimension + 1;
        for (id, e) in &self.entries {
            let vectors: Vec<&Vec<u32>> = match e {
                BettiEntry::Constant(b) => vec![b],
                BettiEntry::Steps(s) => {
                    if s.is_empty() {
                        return Err(Error::InvalidInput(format!("entry '{id}' has no steps")));
                    }
                    if s.windows(2).any(|w| !(w[0].0 < w[1].0)) || s.iter().any(|x| !x.0.is_finite()) {
                        return Err(Error::InvalidInput(format!(
                            "steps of entry '{id}' must start at increasing finite heights"
                        )));
                    }
                    s.iter().map(|x| &x.1).collect()
                }
            };
            for b in vectors {
                if b.len() != want {
                    return Err(Error::InvalidInput(format!(
                        "entry '{id}' has {} Betti numbers, expected {want}",
                        b.len()
                    )));
                }
                if b[0] < 1 {
                    return Err(Error::InvalidInput(format!(
                        "entry '{id}' has b0 = 0; a component is connected"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Multichannel step weights from a Betti table. Channel 0 reproduces
/// [`unit_weights`] when every `b_0` is 1.
pub fn betti_weights(tree: &MergeTree, table: &BettiTable, k: f64) -> Result<Dendrogram> {
    check_truncation(tree, k)?;
    table.check()?;
    let channels = table.dimension + 1;
    let t = tree.structure();
    let mut weights = vec![None; t.len()];
    for v in 0..t.len() {
        let Some(p) = t.parent(v) else { continue };
        let entry = table.entries.get(t.id(v)).ok_or_else(|| {
            Error::InvalidInput(format!("Betti table has no entry for vertex '{}'", t.id(v)))
        })?;
        let (lo, hi) = (tree.height(v), tree.height(p).min(k));
        let mut pieces = Vec::new();
        if hi > lo {
            match entry {
                BettiEntry::Constant(b) => {
                    pieces.push(Piece::constant(lo, hi, b.iter().map(|&x| x as f64).collect()));
                }
                BettiEntry::Steps(steps) => {
                    if steps[0].0 > lo + crate::tree::SUPPORT_TOL {
                        return Err(Error::InvalidInput(format!(
                            "steps of entry '{}' start at {} above the edge bottom {lo}",
                            t.id(v),
                            steps[0].0
                        )));
                    }
                    for (i, (from, b)) in steps.iter().enumerate() {
                        let to = steps.get(i + 1).map_or(f64::INFINITY, |s| s.0);
                        let (a, z) = (from.max(lo), to.min(hi));
                        if z > a {
                            pieces.push(Piece::constant(a, z, b.iter().map(|&x| x as f64).collect()));
                        }
                    }
                }
            }
        }
        weights[v] = Some(PiecewiseMap::from_pieces(channels, pieces)?);
    }
    Dendrogram::from_merge_tree(tree, weights, channels)
}

/// Truncates the root edge at `k`; every other edge is unchanged.
pub fn truncate_dendrogram(d: &Dendrogram, k: f64) -> Result<Dendrogram> {
    d.truncate(k)
}
