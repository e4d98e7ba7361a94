//! Exact edit distance between dendrograms.
//!
//! Both trees are canonicalized first. For a matched pair of vertices
//! `(v, w)`, `D(v, w)` is the cheapest way to edit everything strictly below
//! `v` into everything strictly below `w`. An optimal plan below `(v, w)`
//! picks two antichains of chain tops `t` (under `v`) and `s` (under `w`),
//! pairs them up, and for each pair picks chain bottoms `u ≤ t`, `x ≤ s`. The
//! chain `u → t` is merged into one edge, shrunk onto `x → s`, and the
//! subproblem `D(u, x)` recurses. Every other edge under `v` or `w` is
//! deleted. Writing `N(v)` for the total norm strictly below `v`,
//!
//! ```text
//! D(v, w) = N(v) + N(w) - max Σ M(t, s)
//! M(t, s) = max_{u, x} ‖W(u→t)‖ + N(u) + ‖W(x→s)‖ + N(x) - d(W(u→t), W(x→s)) - D(u, x)
//! ```
//!
//! where `W(u→t)` is the sum of the weights on the path from `u` up to `t`.
//! The inner maximum over antichain pairings is solved by depth-first branch
//! and bound. Roots are always matched, so the answer is `D(root, root)`.

mod brute;
mod plan;
mod stability;

pub use brute::{brute_force_distance, DEFAULT_MAX_EDGES};
pub use plan::{EditPlan, MatchedChain};
pub use stability::{stability_check, StabilityReport};

use crate::editable::PiecewiseMap;
use crate::error::{Error, Result};
use crate::tree::Dendrogram;

/// Chain from a bottom vertex up to a fixed top.
struct Chain {
    bottom: usize,
    weight: PiecewiseMap,
    norm: f64,
}

/// Per-tree data for the solver, over the canonical tree.
struct Side {
    tree: Dendrogram,
    /// Total norm strictly below each vertex.
    below: Vec<f64>,
    /// Vertices strictly below each vertex.
    region: Vec<Vec<usize>>,
    /// Chains ending at each non-root vertex, one per vertex of its subtree.
    chains: Vec<Vec<Chain>>,
    /// Each vertex with its ancestors and descendants.
    comparable: Vec<Vec<usize>>,
}

impl Side {
    fn new(tree: Dendrogram) -> Self {
        let t = tree.structure();
        let n = t.len();
        let norm: Vec<f64> = (0..n).map(|v| tree.weight(v).map_or(0.0, |w| w.norm())).collect();
        let mut below = vec![0.0; n];
        for v in t.postorder() {
            below[v] = t.children(v).iter().map(|&c| below[c] + norm[c]).sum();
        }
        let region: Vec<Vec<usize>> = (0..n).map(|v| t.subtree(v)[1..].to_vec()).collect();
        let mut chains: Vec<Vec<Chain>> = Vec::with_capacity(n);
        for top in 0..n {
            let mut list = Vec::new();
            if let Some(w) = tree.weight(top) {
                let mut stack = vec![(top, w.clone())];
                while let Some((u, acc)) = stack.pop() {
                    for &c in t.children(u) {
                        let next = acc.add(tree.weight(c).expect("edge")).expect("same channels");
                        stack.push((c, next));
                    }
                    let n = acc.norm();
                    list.push(Chain {
                        bottom: u,
                        weight: acc,
                        norm: n,
                    });
                }
            }
            chains.push(list);
        }
        let comparable = (0..n)
            .map(|v| {
                let mut c = t.subtree(v);
                c.extend(t.ancestors(v));
                c
            })
            .collect();
        Side {
            tree,
            below,
            region,
            chains,
            comparable,
        }
    }

    fn len(&self) -> usize {
        self.tree.len()
    }
}

/// Best bottom pair for a pair of chain tops.
#[derive(Clone, Copy)]
struct TopPair {
    gain: f64,
    bottom_a: usize,
    bottom_b: usize,
}

/// Memoized solver for one pair of dendrograms.
pub struct DistanceSolver {
    a: Side,
    b: Side,
    d_memo: Vec<Option<f64>>,
    pick_memo: Vec<Vec<(usize, usize)>>,
    m_memo: Vec<Option<Option<TopPair>>>,
}

fn check_inputs(a: &Dendrogram, b: &Dendrogram) -> Result<()> {
    if a.channels() != b.channels() {
        return Err(Error::ChannelMismatch {
            left: a.channels(),
            right: b.channels(),
        });
    }
    for d in [a, b] {
        let t = d.structure();
        for v in 0..t.len() {
            if d.weight(v).is_some_and(|w| !w.is_bounded()) {
                return Err(Error::Unbounded(t.id(v).to_string()));
            }
        }
    }
    Ok(())
}

impl DistanceSolver {
    pub fn new(a: &Dendrogram, b: &Dendrogram) -> Result<Self> {
        check_inputs(a, b)?;
        let a = Side::new(a.canonicalize());
        let b = Side::new(b.canonicalize());
        let cells = a.len() * b.len();
        Ok(DistanceSolver {
            a,
            b,
            d_memo: vec![None; cells],
            pick_memo: vec![Vec::new(); cells],
            m_memo: vec![None; cells],
        })
    }

    /// Canonical form of the first dendrogram, on which vertex ids refer.
    pub fn canonical_a(&self) -> &Dendrogram {
        &self.a.tree
    }

    pub fn canonical_b(&self) -> &Dendrogram {
        &self.b.tree
    }

    /// `D(v, w)` for vertices of the canonical trees, given by id.
    pub fn children_assignment(&mut self, v: &str, w: &str) -> Result<f64> {
        let find = |d: &Dendrogram, id: &str| {
            d.structure().index_of(id).ok_or_else(|| {
                Error::Precondition(format!("'{id}' is not a vertex of the canonical tree"))
            })
        };
        let (v, w) = (find(&self.a.tree, v)?, find(&self.b.tree, w)?);
        Ok(self.d(v, w))
    }

    /// Optimal value of the dynamic program at the roots.
    pub fn value(&mut self) -> f64 {
        let (ra, rb) = (self.a.tree.structure().root(), self.b.tree.structure().root());
        self.d(ra, rb)
    }

    fn cell(&self, v: usize, w: usize) -> usize {
        v * self.b.len() + w
    }

    fn d(&mut self, v: usize, w: usize) -> f64 {
        let k = self.cell(v, w);
        if let Some(x) = self.d_memo[k] {
            return x;
        }
        let base = self.a.below[v] + self.b.below[w];
        let (saving, picks) = if self.a.region[v].is_empty() || self.b.region[w].is_empty() {
            (0.0, Vec::new())
        } else {
            self.assign(v, w)
        };
        self.pick_memo[k] = picks;
        let x = base - saving;
        self.d_memo[k] = Some(x);
        x
    }

    fn m(&mut self, t: usize, s: usize) -> Option<TopPair> {
        let k = self.cell(t, s);
        if let Some(x) = self.m_memo[k] {
            return x;
        }
        // Candidates ordered by an upper bound on their gain: the L1
        // distance is at least the gap between norms, and so is D.
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (i, ca) in self.a.chains[t].iter().enumerate() {
            let na = self.a.below[ca.bottom];
            for (j, cb) in self.b.chains[s].iter().enumerate() {
                let nb = self.b.below[cb.bottom];
                let ub = 2.0 * ca.norm.min(cb.norm) + 2.0 * na.min(nb);
                if ub > 0.0 {
                    cand.push((ub, i, j));
                }
            }
        }
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut best: Option<TopPair> = None;
        let mut best_gain = 0.0;
        for (ub, i, j) in cand {
            if ub <= best_gain {
                break;
            }
            let (u, x) = (self.a.chains[t][i].bottom, self.b.chains[s][j].bottom);
            let ca = &self.a.chains[t][i];
            let cb = &self.b.chains[s][j];
            let shrink = ca.weight.l1_distance_unchecked(&cb.weight);
            let partial = ca.norm + cb.norm - shrink + self.a.below[u] + self.b.below[x];
            if partial <= best_gain {
                continue;
            }
            let gain = partial - self.d(u, x);
            if gain > best_gain {
                best_gain = gain;
                best = Some(TopPair {
                    gain,
                    bottom_a: u,
                    bottom_b: x,
                });
            }
        }
        self.m_memo[k] = Some(best);
        best
    }

    /// Maximum total gain of a pairing of antichains below `v` and `w`.
    fn assign(&mut self, v: usize, w: usize) -> (f64, Vec<(usize, usize)>) {
        let order = self.a.region[v].clone();
        let region_b = self.b.region[w].clone();
        let (n, m) = (order.len(), region_b.len());
        let mut local = vec![usize::MAX; self.b.len()];
        for (j, &s) in region_b.iter().enumerate() {
            local[s] = j;
        }
        let mut pos = vec![usize::MAX; self.a.len()];
        for (p, &t) in order.iter().enumerate() {
            pos[t] = p;
        }
        // Positive-gain partners of every top, best first.
        let mut options: Vec<Vec<(f64, usize)>> = Vec::with_capacity(n);
        for &t in &order {
            let mut list = Vec::new();
            for (j, &s) in region_b.iter().enumerate() {
                if let Some(p) = self.m(t, s) {
                    list.push((p.gain, j));
                }
            }
            list.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            options.push(list);
        }
        if options.iter().all(Vec::is_empty) {
            return (0.0, Vec::new());
        }
        let words = m.div_ceil(64);
        let masks: Vec<Vec<u64>> = region_b
            .iter()
            .map(|&s| {
                let mut mask = vec![0u64; words];
                for &c in &self.b.comparable[s] {
                    if local[c] != usize::MAX {
                        mask[local[c] / 64] |= 1 << (local[c] % 64);
                    }
                }
                mask
            })
            .collect();
        let (ta, tb) = (self.a.tree.structure(), self.b.tree.structure());
        let skip: Vec<usize> = (0..n).map(|p| p + self.a.region[order[p]].len() + 1).collect();

        // A-side bound: each undecided subtree contributes its best
        // antichain of options, ignoring conflicts on the B side.
        let mut sub_a = vec![0.0; n];
        for p in (0..n).rev() {
            let own = options[p].first().map_or(0.0, |o| o.0);
            let kids: f64 = ta.children(order[p]).iter().map(|&c| sub_a[pos[c]]).sum();
            sub_a[p] = own.max(kids);
        }
        // The undecided part from position p on is the forest of vertices at
        // positions ≥ p whose parent is decided (or is v).
        let frontier: Vec<Vec<usize>> = (0..=n)
            .map(|p| {
                (p..n)
                    .filter(|&q| {
                        let par = ta.parent(order[q]).expect("below v");
                        par == v || pos[par] < p
                    })
                    .collect()
            })
            .collect();
        let bound_a: Vec<f64> = frontier.iter().map(|f| f.iter().map(|&q| sub_a[q]).sum()).collect();
        let ancestors_a: Vec<Vec<usize>> = order
            .iter()
            .map(|&t| ta.ancestors(t).take_while(|&u| u != v).map(|u| pos[u]).collect())
            .collect();
        let kids_a: Vec<Vec<usize>> = order.iter().map(|&t| ta.children(t).iter().map(|&c| pos[c]).collect()).collect();
        // best_b[p][j]: best gain of B vertex j with an A top at position ≥ p.
        let mut best_b = vec![vec![0.0; m]; n + 1];
        for p in (0..n).rev() {
            let (head, tail) = best_b.split_at_mut(p + 1);
            head[p].copy_from_slice(&tail[0]);
            for &(g, j) in &options[p] {
                if g > head[p][j] {
                    head[p][j] = g;
                }
            }
        }
        let kids_b: Vec<Vec<usize>> = region_b
            .iter()
            .map(|&s| tb.children(s).iter().map(|&c| local[c]).collect())
            .collect();
        let roots_b: Vec<usize> = tb.children(w).iter().map(|&c| local[c]).collect();

        let mut pairing = Pairing {
            options: &options,
            masks: &masks,
            skip: &skip,
            bound_a: &bound_a,
            frontier: &frontier,
            kids_a: &kids_a,
            scratch_a: vec![0.0; n],
            best_b: &best_b,
            kids_b: &kids_b,
            roots_b: &roots_b,
            scratch: vec![0.0; m],
            memo: std::collections::HashMap::new(),
        };
        let empty = vec![0u64; words];
        // A greedy pairing is feasible, so the optimum is at least its gain
        // and searching just below it still yields an exact result.
        let greedy = {
            let mut all: Vec<(f64, usize, usize)> = options
                .iter()
                .enumerate()
                .flat_map(|(p, o)| o.iter().map(move |&(g, j)| (g, p, j)))
                .collect();
            all.sort_by(|x, y| y.0.total_cmp(&x.0));
            let (mut taken_a, mut taken_b, mut total) = (vec![false; n], empty.clone(), 0.0);
            for (g, p, j) in all {
                let clash = taken_a[p] || ancestors_a[p].iter().any(|&q| taken_a[q]);
                if clash || is_set(&taken_b, j) {
                    continue;
                }
                taken_a[p..skip[p]].iter_mut().for_each(|x| *x = true);
                for q in &ancestors_a[p] {
                    taken_a[*q] = true;
                }
                for (b, mk) in taken_b.iter_mut().zip(&masks[j]) {
                    *b |= mk;
                }
                total += g;
            }
            total
        };
        let need = greedy - 1e-9 * greedy.max(1.0);
        let (best, _) = pairing.solve(0, &empty, need);
        // Replay the stored choices along the optimal path.
        let mut picks = Vec::new();
        let (mut p, mut blocked) = (0usize, empty);
        while p < n {
            let Some(&(value, exact, choice)) = pairing.memo.get(&(p, blocked.clone())) else {
                break;
            };
            if value <= 0.0 {
                break;
            }
            debug_assert!(exact);
            match choice {
                None => p += 1,
                Some(j) => {
                    picks.push((order[p], region_b[j]));
                    for (b, mk) in blocked.iter_mut().zip(&masks[j]) {
                        *b |= mk;
                    }
                    p = skip[p];
                }
            }
        }
        (best, picks)
    }

    /// The witnessing plan of the optimum, in terms of the original
    /// (non-canonical) dendrograms `a` and `b`.
    pub fn plan(&mut self, a: &Dendrogram, b: &Dendrogram) -> Result<EditPlan> {
        self.value();
        let (ta, tb) = (self.a.tree.structure(), self.b.tree.structure());
        let mut kept_a = vec![false; ta.len()];
        let mut kept_b = vec![false; tb.len()];
        kept_a[ta.root()] = true;
        kept_b[tb.root()] = true;
        let mut chains = Vec::new();
        let mut stack = vec![(ta.root(), tb.root())];
        while let Some((v, w)) = stack.pop() {
            let picks = self.pick_memo[self.cell(v, w)].clone();
            for (t, s) in picks {
                let p = self.m_memo[self.cell(t, s)]
                    .flatten()
                    .expect("picked pairs have a gain");
                let (u, x) = (p.bottom_a, p.bottom_b);
                for (tree, kept, lo, hi) in [(ta, &mut kept_a, u, t), (tb, &mut kept_b, x, s)] {
                    let mut y = lo;
                    kept[y] = true;
                    while y != hi {
                        y = tree.parent(y).expect("top is an ancestor");
                        kept[y] = true;
                    }
                }
                chains.push(MatchedChain {
                    a_top: ta.id(v).to_string(),
                    a_bottom: ta.id(u).to_string(),
                    b_top: tb.id(w).to_string(),
                    b_bottom: tb.id(x).to_string(),
                    shrink_cost: 0.0,
                });
                // m() evaluated D(u, x) when it chose this bottom pair.
                stack.push((u, x));
            }
        }
        let deleted_a = original_deletions(a, ta, &kept_a);
        let deleted_b = original_deletions(b, tb, &kept_b);
        EditPlan {
            deleted_a,
            deleted_b,
            matched_chains: chains,
            total_cost: 0.0,
        }
        .recompute(a, b)
    }
}

/// Maps kept canonical vertices back to `orig`: a canonical edge stands for
/// the original edge of the same id plus the ghosted edges above it.
fn original_deletions(
    orig: &Dendrogram,
    canon: &crate::tree::TreeStructure,
    kept: &[bool],
) -> Vec<String> {
    let t = orig.structure();
    let mut keep = vec![false; t.len()];
    keep[t.root()] = true;
    for c in 0..canon.len() {
        if !kept[c] {
            continue;
        }
        let mut v = t.index_of(canon.id(c)).expect("canonical ids come from the original");
        keep[v] = true;
        while let Some(p) = t.parent(v) {
            if p == t.root() || t.children(p).len() != 1 {
                break;
            }
            keep[p] = true;
            v = p;
        }
    }
    (0..t.len())
        .filter(|&v| !keep[v])
        .map(|v| t.id(v).to_string())
        .collect()
}

/// Pairing of A-side tops, visited in preorder, with B-side tops.
///
/// Positions index the preorder of the A-side region: the vertex at
/// position `p` is either a top (paired with an unblocked B vertex, its
/// subtree then skipped) or not (move to `p + 1`). Everything before `p` is
/// decided, so `(p, blocked)` describes the remaining problem, and different
/// orders of the same pairs share one memo entry.
///
/// `solve` is fail-soft: a result above `need` is exact, anything else is
/// only an upper bound. The memo records which.
struct Pairing<'a> {
    options: &'a [Vec<(f64, usize)>],
    masks: &'a [Vec<u64>],
    skip: &'a [usize],
    bound_a: &'a [f64],
    frontier: &'a [Vec<usize>],
    kids_a: &'a [Vec<usize>],
    scratch_a: Vec<f64>,
    best_b: &'a [Vec<f64>],
    kids_b: &'a [Vec<usize>],
    roots_b: &'a [usize],
    scratch: Vec<f64>,
    memo: std::collections::HashMap<(usize, Vec<u64>), (f64, bool, Option<usize>)>,
}

fn is_set(bits: &[u64], j: usize) -> bool {
    bits[j / 64] & (1 << (j % 64)) != 0
}

impl Pairing<'_> {
    /// B-side bound: unblocked B vertices in their best antichain, each
    /// valued at its best gain against the remaining A tops.
    fn bound_b(&mut self, p: usize, blocked: &[u64]) -> f64 {
        let best = &self.best_b[p];
        // Region order is a preorder, so reverse visits children first.
        for j in (0..best.len()).rev() {
            let kids: f64 = self.kids_b[j].iter().map(|&c| self.scratch[c]).sum();
            self.scratch[j] = if is_set(blocked, j) { kids } else { kids.max(best[j]) };
        }
        self.roots_b.iter().map(|&r| self.scratch[r]).sum()
    }

    /// A-side bound: undecided A vertices in their best antichain, each
    /// valued at its best unblocked option.
    fn bound_a(&mut self, p: usize, blocked: &[u64]) -> f64 {
        for q in (p..self.options.len()).rev() {
            let own = self.options[q]
                .iter()
                .find(|o| !is_set(blocked, o.1))
                .map_or(0.0, |o| o.0);
            let kids: f64 = self.kids_a[q].iter().map(|&c| self.scratch_a[c]).sum();
            self.scratch_a[q] = own.max(kids);
        }
        self.frontier[p].iter().map(|&q| self.scratch_a[q]).sum()
    }

    fn bound(&mut self, p: usize, blocked: &[u64]) -> f64 {
        if self.bound_a[p] <= 0.0 {
            return 0.0;
        }
        let a = self.bound_a(p, blocked);
        if a <= 0.0 {
            return 0.0;
        }
        a.min(self.bound_b(p, blocked))
    }

    /// Best gain from position `p` on, and whether it is exact.
    fn solve(&mut self, p: usize, blocked: &[u64], need: f64) -> (f64, bool) {
        if p >= self.options.len() {
            return (0.0, true);
        }
        let key = (p, blocked.to_vec());
        if let Some(&(v, exact, _)) = self.memo.get(&key) {
            if exact || v <= need {
                return (v, exact);
            }
        }
        let ub = self.bound(p, blocked);
        if ub <= 0.0 {
            self.memo.insert(key, (0.0, true, None));
            return (0.0, true);
        }
        if ub <= need {
            self.memo.insert(key, (ub, false, None));
            return (ub, false);
        }
        // Exact branch values compete for the choice; bounds only matter
        // when nothing beats `need`.
        let (mut best, mut bound) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (v, exact) = self.solve(p + 1, blocked, need);
        if exact {
            best = v;
        } else {
            bound = v;
        }
        let mut choice = None;
        let mut next = blocked.to_vec();
        for &(gain, j) in &self.options[p] {
            if is_set(blocked, j) {
                continue;
            }
            let floor = need.max(best);
            let cap = gain + self.bound_a[self.skip[p]];
            if cap <= floor {
                // Options are sorted by gain, so none of the rest helps, but
                // the cap still bounds them.
                bound = bound.max(cap);
                break;
            }
            for ((x, b), mk) in next.iter_mut().zip(blocked).zip(&self.masks[j]) {
                *x = b | mk;
            }
            let (c, exact) = self.solve(self.skip[p], &next.clone(), floor - gain);
            if !exact {
                bound = bound.max(gain + c);
            } else if gain + c > best {
                best = gain + c;
                choice = Some(j);
            }
        }
        let result = if best > need {
            (best, true, choice)
        } else {
            (best.max(bound), false, None)
        };
        self.memo.insert(key, result);
        (result.0, result.1)
    }
}

/// Edit distance between two dendrograms, with a plan that attains it.
///
/// The dendrograms must have the same channel count and finite weights on
/// every edge (truncate root edges first). The returned value is the cost of
/// the returned plan, recomputed from the weights.
pub fn edit_distance(a: &Dendrogram, b: &Dendrogram) -> Result<(f64, EditPlan)> {
    let mut solver = DistanceSolver::new(a, b)?;
    let plan = solver.plan(a, b)?;
    Ok((plan.total_cost, plan))
}

/// Edit distance without the plan.
pub fn distance(a: &Dendrogram, b: &Dendrogram) -> Result<f64> {
    Ok(edit_distance(a, b)?.0)
}
