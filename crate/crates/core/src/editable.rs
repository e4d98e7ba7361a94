//! Piecewise weight maps: the editable space of integrable functions from the
//! real line to `k` nonnegative channels.
//!
//! A [`PiecewiseMap`] is a finite list of disjoint half-open segments
//! `[start, end)`, each carrying an affine value per channel. Outside the
//! segments the map is zero. Affine pieces are stored in global coordinates,
//! `value(x) = intercept + slope * x`, so restricting a piece never touches its
//! coefficients.
//!
//! The monoid operation is pointwise addition, the metric is the L1 distance
//! with the per-channel absolute difference summed over channels, and the norm
//! is the distance to the zero map.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Breakpoints closer than this are treated as the same point.
pub const BREAKPOINT_TOL: f64 = 1e-9;

/// Slack allowed when checking that values are nonnegative at piece endpoints.
pub const NONNEG_TOL: f64 = 1e-9;

/// One segment of a map, in owned form. Used for construction and
/// serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub intercept: Vec<f64>,
    pub slope: Vec<f64>,
}

impl Piece {
    pub fn constant(start: f64, end: f64, value: Vec<f64>) -> Self {
        let slope = vec![0.0; value.len()];
        Piece {
            start,
            end,
            intercept: value,
            slope,
        }
    }

    pub fn affine(start: f64, end: f64, intercept: Vec<f64>, slope: Vec<f64>) -> Self {
        Piece {
            start,
            end,
            intercept,
            slope,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.slope.iter().all(|s| *s == 0.0)
    }
}

/// Borrowed view of one segment.
#[derive(Clone, Copy, Debug)]
pub struct PieceRef<'a> {
    pub start: f64,
    pub end: f64,
    pub intercept: &'a [f64],
    pub slope: &'a [f64],
}

impl PieceRef<'_> {
    pub fn is_constant(&self) -> bool {
        self.slope.iter().all(|s| *s == 0.0)
    }

    pub fn value(&self, channel: usize, x: f64) -> f64 {
        eval(self.intercept[channel], self.slope[channel], x)
    }

    pub fn to_owned(&self) -> Piece {
        Piece {
            start: self.start,
            end: self.end,
            intercept: self.intercept.to_vec(),
            slope: self.slope.to_vec(),
        }
    }
}

/// Compactly supported piecewise-affine map `R -> R_{>=0}^k`.
///
/// Invariants, enforced by every constructor and preserved by every
/// operation:
/// - segments are sorted, pairwise disjoint and nonempty;
/// - every channel is nonnegative on the closure of every segment;
/// - no segment is zero in all channels, and adjacent segments with identical
///   coefficients are merged, so structural equality is meaningful;
/// - only a final constant segment may extend to `+inf` (an untruncated root
///   weight); such a map has infinite norm.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMap {
    channels: usize,
    spans: Vec<(f64, f64)>,
    // Per piece: `channels` intercepts followed by `channels` slopes.
    coef: Vec<f64>,
}

#[inline]
fn eval(intercept: f64, slope: f64, x: f64) -> f64 {
    if slope == 0.0 {
        intercept
    } else {
        intercept + slope * x
    }
}

/// Exact integral of `|d(x)|` over an interval of length `len` where `d` is
/// affine with endpoint values `d0`, `d1`.
#[inline]
fn abs_affine_integral(d0: f64, d1: f64, len: f64) -> f64 {
    if d0 == 0.0 && d1 == 0.0 {
        return 0.0;
    }
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * len
    } else {
        let (a, b) = (d0.abs(), d1.abs());
        0.5 * (a * a + b * b) / (a + b) * len
    }
}

impl PiecewiseMap {
    /// The neutral element.
    pub fn zero(channels: usize) -> Self {
        assert!(channels > 0, "a map needs at least one channel");
        PiecewiseMap {
            channels,
            spans: Vec::new(),
            coef: Vec::new(),
        }
    }

    /// Builds a map from owned pieces, validating every invariant.
    pub fn from_pieces(channels: usize, pieces: Vec<Piece>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidMap("channel count must be positive".into()));
        }
        let mut spans = Vec::with_capacity(pieces.len());
        let mut coef = Vec::with_capacity(pieces.len() * 2 * channels);
        let mut prev_end = f64::NEG_INFINITY;
        for (i, p) in pieces.into_iter().enumerate() {
            if p.intercept.len() != channels || p.slope.len() != channels {
                return Err(Error::InvalidMap(format!(
                    "piece {i}: expected {channels} channel values"
                )));
            }
            if !p.start.is_finite() || p.end.is_nan() || p.end == f64::NEG_INFINITY {
                return Err(Error::InvalidMap(format!("piece {i}: non-finite start")));
            }
            if p.start >= p.end {
                return Err(Error::InvalidMap(format!(
                    "piece {i}: start {} is not below end {}",
                    p.start, p.end
                )));
            }
            if p.start < prev_end - BREAKPOINT_TOL {
                return Err(Error::InvalidMap(format!(
                    "piece {i}: overlaps or is out of order"
                )));
            }
            if p.intercept.iter().chain(&p.slope).any(|v| !v.is_finite()) {
                return Err(Error::InvalidMap(format!("piece {i}: non-finite value")));
            }
            if p.end.is_infinite() && !p.is_constant() {
                return Err(Error::InvalidMap(format!(
                    "piece {i}: only constant pieces may be unbounded"
                )));
            }
            for c in 0..channels {
                let lo = eval(p.intercept[c], p.slope[c], p.start);
                let hi = if p.end.is_finite() {
                    eval(p.intercept[c], p.slope[c], p.end)
                } else {
                    lo
                };
                if lo < -NONNEG_TOL || hi < -NONNEG_TOL {
                    return Err(Error::InvalidMap(format!(
                        "piece {i}: channel {c} is negative on [{}, {}]",
                        p.start, p.end
                    )));
                }
            }
            if prev_end.is_infinite() && prev_end > 0.0 {
                return Err(Error::InvalidMap(format!(
                    "piece {i}: follows an unbounded piece"
                )));
            }
            // Clamp tiny overlaps produced by rounding.
            let start = p.start.max(prev_end);
            if start >= p.end {
                continue;
            }
            prev_end = p.end;
            spans.push((start, p.end));
            coef.extend_from_slice(&p.intercept);
            coef.extend_from_slice(&p.slope);
        }
        let mut map = PiecewiseMap {
            channels,
            spans,
            coef,
        };
        map.simplify();
        Ok(map)
    }

    /// `value · χ_[start, end)` on a single channel.
    pub fn indicator(start: f64, end: f64, value: f64) -> Result<Self> {
        Self::constant(start, end, &[value])
    }

    pub fn constant(start: f64, end: f64, values: &[f64]) -> Result<Self> {
        Self::from_pieces(values.len(), vec![Piece::constant(start, end, values.to_vec())])
    }

    pub fn affine(start: f64, end: f64, intercept: &[f64], slope: &[f64]) -> Result<Self> {
        Self::from_pieces(
            intercept.len(),
            vec![Piece::affine(start, end, intercept.to_vec(), slope.to_vec())],
        )
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// True for the neutral element.
    pub fn is_zero(&self) -> bool {
        self.spans.is_empty()
    }

    fn piece(&self, i: usize) -> PieceRef<'_> {
        let k = self.channels;
        let base = 2 * k * i;
        PieceRef {
            start: self.spans[i].0,
            end: self.spans[i].1,
            intercept: &self.coef[base..base + k],
            slope: &self.coef[base + k..base + 2 * k],
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = PieceRef<'_>> + '_ {
        (0..self.spans.len()).map(move |i| self.piece(i))
    }

    /// Smallest interval containing the support, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.spans.first()?.0, self.spans.last()?.1))
    }

    pub fn support_length(&self) -> f64 {
        self.spans.iter().map(|(s, e)| e - s).sum()
    }

    pub fn is_bounded(&self) -> bool {
        self.spans.last().is_none_or(|(_, e)| e.is_finite())
    }

    /// Value of every channel at `x`.
    pub fn value_at(&self, x: f64) -> Vec<f64> {
        let idx = self.spans.partition_point(|(_, e)| *e <= x);
        match self.spans.get(idx) {
            Some((s, _)) if *s <= x => {
                let p = self.piece(idx);
                (0..self.channels).map(|c| p.value(c, x)).collect()
            }
            _ => vec![0.0; self.channels],
        }
    }

    fn check_channels(&self, other: &Self) -> Result<()> {
        if self.channels != other.channels {
            return Err(Error::ChannelMismatch {
                left: self.channels,
                right: other.channels,
            });
        }
        Ok(())
    }

    /// Pointwise sum (the monoid operation).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_channels(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let k = self.channels;
        let mut out = PiecewiseMap::zero(k);
        let mut buf = vec![0.0; 2 * k];
        for_each_cell(self, other, |x0, x1, pa, pb| {
            buf.iter_mut().for_each(|v| *v = 0.0);
            for p in [pa, pb].into_iter().flatten() {
                for c in 0..k {
                    buf[c] += p.intercept[c];
                    buf[k + c] += p.slope[c];
                }
            }
            out.spans.push((x0, x1));
            out.coef.extend_from_slice(&buf);
        });
        out.simplify();
        Ok(out)
    }

    /// Sum of many maps; the zero map when `maps` is empty.
    pub fn sum<'a>(channels: usize, maps: impl IntoIterator<Item = &'a PiecewiseMap>) -> Result<Self> {
        maps.into_iter()
            .try_fold(PiecewiseMap::zero(channels), |acc, m| acc.add(m))
    }

    /// Exact `∫ Σ_c |a_c(x) - b_c(x)| dx`.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_channels(other)?;
        Ok(self.l1_distance_unchecked(other))
    }

    pub(crate) fn l1_distance_unchecked(&self, other: &Self) -> f64 {
        let k = self.channels;
        let mut total = 0.0;
        for_each_cell(self, other, |x0, x1, pa, pb| {
            let len = x1 - x0;
            for c in 0..k {
                let (ia, sa) = pa.map_or((0.0, 0.0), |p| (p.intercept[c], p.slope[c]));
                let (ib, sb) = pb.map_or((0.0, 0.0), |p| (p.intercept[c], p.slope[c]));
                if len.is_infinite() {
                    if ia != ib || sa != sb {
                        total = f64::INFINITY;
                    }
                    continue;
                }
                let d0 = eval(ia, sa, x0) - eval(ib, sb, x0);
                let d1 = eval(ia, sa, x1) - eval(ib, sb, x1);
                total += abs_affine_integral(d0, d1, len);
            }
        });
        total
    }

    /// Distance to the zero map.
    pub fn norm(&self) -> f64 {
        let mut total = 0.0;
        for p in self.pieces() {
            let len = p.end - p.start;
            for c in 0..self.channels {
                if len.is_infinite() {
                    if p.intercept[c] != 0.0 {
                        return f64::INFINITY;
                    }
                    continue;
                }
                total += abs_affine_integral(p.value(c, p.start), p.value(c, p.end), len);
            }
        }
        total
    }

    /// Restriction to `[lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let mut out = PiecewiseMap::zero(self.channels);
        for (i, &(s, e)) in self.spans.iter().enumerate() {
            let (s2, e2) = (s.max(lo), e.min(hi));
            if s2 < e2 {
                out.spans.push((s2, e2));
                let w = 2 * self.channels;
                out.coef.extend_from_slice(&self.coef[i * w..(i + 1) * w]);
            }
        }
        out.simplify();
        out
    }

    /// Equal to `self` below `k`, zero from `k` on.
    pub fn truncate(&self, k: f64) -> Self {
        self.restrict(f64::NEG_INFINITY, k)
    }

    /// Multiplies every channel by a nonnegative factor.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor >= 0.0 && factor.is_finite());
        if factor == 0.0 {
            return PiecewiseMap::zero(self.channels);
        }
        let mut out = self.clone();
        out.coef.iter_mut().for_each(|v| *v *= factor);
        out.simplify();
        out
    }

    /// Projection onto a single channel.
    pub fn channel(&self, c: usize) -> Self {
        assert!(c < self.channels);
        let mut out = PiecewiseMap::zero(1);
        for p in self.pieces() {
            out.spans.push((p.start, p.end));
            out.coef.push(p.intercept[c]);
            out.coef.push(p.slope[c]);
        }
        out.simplify();
        out
    }

    pub fn to_pieces(&self) -> Vec<Piece> {
        self.pieces().map(|p| p.to_owned()).collect()
    }

    // Drops all-zero pieces and merges touching pieces with identical
    // coefficients.
    fn simplify(&mut self) {
        let w = 2 * self.channels;
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(self.spans.len());
        let mut coef: Vec<f64> = Vec::with_capacity(self.coef.len());
        for (i, &(s, e)) in self.spans.iter().enumerate() {
            let c = &self.coef[i * w..(i + 1) * w];
            if c.iter().all(|v| *v == 0.0) {
                continue;
            }
            if let Some(last) = spans.last_mut() {
                let n = coef.len();
                if last.1 == s && coef[n - w..] == *c {
                    last.1 = e;
                    continue;
                }
            }
            spans.push((s, e));
            // Normalize negative zeros so equality is structural.
            coef.extend(c.iter().map(|v| if *v == 0.0 { 0.0 } else { *v }));
        }
        self.spans = spans;
        self.coef = coef;
    }
}

/// Walks the common refinement of the breakpoints of `a` and `b`, calling `f`
/// for every elementary interval covered by at least one of them.
fn for_each_cell<'a, F>(a: &'a PiecewiseMap, b: &'a PiecewiseMap, mut f: F)
where
    F: FnMut(f64, f64, Option<PieceRef<'a>>, Option<PieceRef<'a>>),
{
    let mut pts: Vec<f64> = Vec::with_capacity(2 * (a.spans.len() + b.spans.len()));
    for &(s, e) in a.spans.iter().chain(&b.spans) {
        pts.push(s);
        pts.push(e);
    }
    pts.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    let mut cuts: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match cuts.last() {
            Some(&last) if p - last <= BREAKPOINT_TOL || p == last => {}
            _ => cuts.push(p),
        }
    }
    let (mut ia, mut ib) = (0usize, 0usize);
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mid = if x1.is_infinite() { x0 + 1.0 } else { 0.5 * (x0 + x1) };
        while ia < a.spans.len() && a.spans[ia].1 <= mid {
            ia += 1;
        }
        while ib < b.spans.len() && b.spans[ib].1 <= mid {
            ib += 1;
        }
        let pa = (ia < a.spans.len() && a.spans[ia].0 <= mid).then(|| a.piece(ia));
        let pb = (ib < b.spans.len() && b.spans[ib].0 <= mid).then(|| b.piece(ib));
        if pa.is_some() || pb.is_some() {
            f(x0, x1, pa, pb);
        }
    }
}

/// Outcome of checking the editable-space axioms on a sample of maps.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EditableAxiomsReport {
    /// Identity, symmetry and triangle inequality.
    pub p1_metric_ok: bool,
    /// Neutral element, commutativity and associativity of the sum.
    pub p2_monoid_ok: bool,
    /// `d(0, a*b) = d(0, a) + d(0, b)`.
    pub p3_norm_additive_ok: bool,
    /// `d(c*a, c*b) = d(a, b)`.
    pub p4_translation_invariant_ok: bool,
    pub max_violation: f64,
}

/// Checks P1–P4 over all pairs and triples drawn from `samples`.
pub fn check_axioms(samples: &[PiecewiseMap], tolerance: f64) -> Result<EditableAxiomsReport> {
    let Some(first) = samples.first() else {
        return Ok(EditableAxiomsReport {
            p1_metric_ok: true,
            p2_monoid_ok: true,
            p3_norm_additive_ok: true,
            p4_translation_invariant_ok: true,
            max_violation: 0.0,
        });
    };
    let k = first.channels();
    for s in samples {
        first.check_channels(s)?;
    }
    let zero = PiecewiseMap::zero(k);
    let n = samples.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| samples[i].l1_distance_unchecked(&samples[j])).collect())
        .collect();
    let norms: Vec<f64> = samples.iter().map(|s| s.norm()).collect();

    let (mut p1, mut p2, mut p3, mut p4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        p1 = p1.max(dist[i][i]);
        p1 = p1.max((samples[i].l1_distance_unchecked(&zero) - norms[i]).abs());
        let with_zero = samples[i].add(&zero)?;
        p2 = p2.max(with_zero.l1_distance_unchecked(&samples[i]));
        for j in 0..n {
            p1 = p1.max((dist[i][j] - dist[j][i]).abs());
            p1 = p1.max(-dist[i][j]);
            let ab = samples[i].add(&samples[j])?;
            let ba = samples[j].add(&samples[i])?;
            p2 = p2.max(ab.l1_distance_unchecked(&ba));
            p3 = p3.max((ab.norm() - norms[i] - norms[j]).abs());
            for l in 0..n {
                p1 = p1.max(dist[i][l] - dist[i][j] - dist[j][l]);
                let c = &samples[l];
                let ca = c.add(&samples[i])?;
                let cb = c.add(&samples[j])?;
                p4 = p4.max((ca.l1_distance_unchecked(&cb) - dist[i][j]).abs());
                let left = ab.add(c)?;
                let right = samples[i].add(&samples[j].add(c)?)?;
                p2 = p2.max(left.l1_distance_unchecked(&right));
            }
        }
    }
    Ok(EditableAxiomsReport {
        p1_metric_ok: p1 <= tolerance,
        p2_monoid_ok: p2 <= tolerance,
        p3_norm_additive_ok: p3 <= tolerance,
        p4_translation_invariant_ok: p4 <= tolerance,
        max_violation: p1.max(p2).max(p3).max(p4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(a: f64, b: f64) -> PiecewiseMap {
        PiecewiseMap::indicator(a, b, 1.0).unwrap()
    }

    fn lin(a: f64, b: f64, intercept: f64, slope: f64) -> PiecewiseMap {
        PiecewiseMap::affine(a, b, &[intercept], &[slope]).unwrap()
    }

    #[test]
    fn add_zero_is_neutral() {
        let a = chi(0.0, 1.0);
        assert_eq!(a.add(&PiecewiseMap::zero(1)).unwrap(), a);
    }

    #[test]
    fn add_overlapping_indicators() {
        let s = chi(0.0, 1.0).add(&chi(0.0, 2.0)).unwrap();
        let pieces = s.to_pieces();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0], Piece::constant(0.0, 1.0, vec![2.0]));
        assert_eq!(pieces[1], Piece::constant(1.0, 2.0, vec![1.0]));
    }

    #[test]
    fn add_affine_pieces_cancel_slope() {
        let s = lin(0.0, 1.0, 0.0, 1.0).add(&lin(0.0, 1.0, 1.0, -1.0)).unwrap();
        assert_eq!(s, chi(0.0, 1.0));
        assert!(s.pieces().all(|p| p.is_constant()));
    }

    #[test]
    fn add_rejects_channel_mismatch() {
        let a = chi(0.0, 1.0);
        let b = PiecewiseMap::constant(0.0, 1.0, &[1.0, 1.0]).unwrap();
        assert!(matches!(a.add(&b), Err(Error::ChannelMismatch { .. })));
        assert!(a.l1_distance(&b).is_err());
    }

    #[test]
    fn distance_to_self_is_zero() {
        let a = lin(0.0, 1.0, 0.0, 2.0).add(&chi(0.5, 3.0)).unwrap();
        assert_eq!(a.l1_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn shrink_costs_on_a_two_piece_weight() {
        // t·χ[0,1) + χ[1,1.3)  vs  (t-0.3)·χ[0.3,1.3)
        let a = lin(0.0, 1.0, 0.0, 1.0).add(&chi(1.0, 1.3)).unwrap();
        let b = lin(0.3, 1.3, -0.3, 1.0);
        assert!((a.l1_distance(&b).unwrap() - 0.3).abs() < 1e-12);
        // 2(t-0.3)·χ[0.3,1.3)  vs  2t·χ[0,1) + 2·χ[1,1.3)
        let c = lin(0.3, 1.3, -0.6, 2.0);
        let d = lin(0.0, 1.0, 0.0, 2.0)
            .add(&PiecewiseMap::indicator(1.0, 1.3, 2.0).unwrap())
            .unwrap();
        assert!((c.l1_distance(&d).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn crossing_affine_difference() {
        // |2t - 1| on [0,1) integrates to 1/2.
        let a = lin(0.0, 1.0, 0.0, 2.0);
        let b = chi(0.0, 1.0);
        assert!((a.l1_distance(&b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norms() {
        assert_eq!(PiecewiseMap::zero(1).norm(), 0.0);
        assert_eq!(PiecewiseMap::indicator(2.0, 5.0, 3.0).unwrap().norm(), 9.0);
        assert!((lin(0.0, 1.0, 0.0, 2.0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation() {
        assert_eq!(chi(0.0, 2.0).truncate(1.0), chi(0.0, 1.0));
        assert_eq!(chi(0.0, 1.0).truncate(5.0), chi(0.0, 1.0));
        let unbounded = PiecewiseMap::indicator(0.0, f64::INFINITY, 1.0).unwrap();
        assert!(!unbounded.is_bounded());
        assert_eq!(unbounded.norm(), f64::INFINITY);
        assert_eq!(unbounded.truncate(1.0), chi(0.0, 1.0));
        let t = chi(0.0, 2.0).truncate(1.0);
        assert_eq!(t.truncate(1.0), t);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(PiecewiseMap::indicator(0.0, 1.0, -1.0).is_err());
        // t - 0.5 is negative at the left end of [0,1).
        assert!(PiecewiseMap::affine(0.0, 1.0, &[-0.5], &[1.0]).is_err());
        assert!(PiecewiseMap::from_pieces(
            1,
            vec![
                Piece::constant(0.0, 2.0, vec![1.0]),
                Piece::constant(1.0, 3.0, vec![1.0])
            ]
        )
        .is_err());
    }

    #[test]
    fn zero_pieces_are_dropped() {
        let m = PiecewiseMap::indicator(0.0, 1.0, 0.0).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn restriction_of_affine_piece_is_exact() {
        let a = lin(0.0, 1.0, 0.0, 2.0);
        let left = a.restrict(0.0, 0.5);
        let right = a.restrict(0.5, 1.0);
        assert_eq!(left.add(&right).unwrap(), a);
        assert!((left.norm() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn axioms_on_zero_sample() {
        let r = check_axioms(&[PiecewiseMap::zero(1)], 1e-9).unwrap();
        assert!(r.p1_metric_ok && r.p2_monoid_ok && r.p3_norm_additive_ok && r.p4_translation_invariant_ok);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn value_lookup() {
        let a = lin(0.0, 1.0, 0.0, 2.0).add(&chi(1.0, 2.0)).unwrap();
        assert_eq!(a.value_at(0.25), vec![0.5]);
        assert_eq!(a.value_at(1.5), vec![1.0]);
        assert_eq!(a.value_at(2.0), vec![0.0]);
        assert_eq!(a.value_at(-1.0), vec![0.0]);
    }
}
