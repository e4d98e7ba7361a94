//! Labeled distance matrices, their upper-triangle correlation and heatmaps.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::distance::distance;
use crate::error::{Error, Result};
use crate::tree::Dendrogram;

/// Symmetric tolerance used when validating matrices read from disk.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks shape, symmetry, a zero diagonal and nonnegative entries.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "{} labels need {} values, got {}",
                n,
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) is negative or not finite"
                    )));
                }
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidInput(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(DistanceMatrix { labels, values })
    }

    /// Fills the matrix from its strict upper triangle, row by row.
    pub fn from_upper(labels: Vec<String>, upper: &[f64]) -> Result<Self> {
        let n = labels.len();
        let mut values = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                values[i * n + j] = upper[k];
                values[j * n + i] = upper[k];
                k += 1;
            }
        }
        DistanceMatrix::new(labels, values)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    /// Strictly upper-triangular entries, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }

    /// Mean of the entries `(i, j)`, `i ≠ j`, selected by `keep`.
    pub fn mean_where(&self, keep: impl Fn(usize, usize) -> bool) -> Option<f64> {
        let n = self.len();
        let (mut s, mut c) = (0.0, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                if keep(i, j) {
                    s += self.get(i, j);
                    c += 1;
                }
            }
        }
        (c > 0).then(|| s / c as f64)
    }
}

/// Pairwise edit distances, computed on `jobs` worker threads (all cores
/// when `None`).
pub fn distance_matrix(items: &[(String, Dendrogram)], jobs: Option<usize>) -> Result<DistanceMatrix> {
    let n = items.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let compute = || {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                distance(&items[i].1, &items[j].1).map_err(|e| Error::Pair {
                    left: items[i].0.clone(),
                    right: items[j].0.clone(),
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<f64>>>()
    };
    let upper = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {k} workers: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    DistanceMatrix::from_upper(items.iter().map(|x| x.0.clone()).collect(), &upper)
}

/// Pearson correlation between two samples of equal length.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two samples of equal length ≥ 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("one of the vectors is constant".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of the strict upper triangles of two matrices with
/// the same labels.
pub fn upper_tri_correlation(m1: &DistanceMatrix, m2: &DistanceMatrix) -> Result<f64> {
    if m1.labels() != m2.labels() {
        return Err(Error::InvalidInput("matrices have different labels".into()));
    }
    pearson(&m1.upper(), &m2.upper())
}

/// Grayscale heatmap, white at zero and black at the largest entry, rows and
/// columns in label order.
pub fn heatmap_svg(m: &DistanceMatrix) -> String {
    const CELL: usize = 12;
    const MARGIN: usize = 120;
    let n = m.len();
    let max = m.values.iter().copied().fold(0.0, f64::max);
    let size = MARGIN + n * CELL;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    for (i, label) in m.labels().iter().enumerate() {
        let y = MARGIN + i * CELL + CELL - 2;
        let x = MARGIN + i * CELL + CELL - 2;
        let text = escape(label);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-size="9" text-anchor="end" font-family="monospace">{text}</text>"#,
            MARGIN - 4
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-size="9" text-anchor="start" font-family="monospace" transform="rotate(-90 {x} {})">{text}</text>"#,
            MARGIN - 4,
            MARGIN - 4
        );
    }
    for i in 0..n {
        for j in 0..n {
            let v = if max > 0.0 { m.get(i, j) / max } else { 0.0 };
            let g = (255.0 * (1.0 - v)).round().clamp(0.0, 255.0) as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})"/>"#,
                MARGIN + j * CELL,
                MARGIN + i * CELL
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::editable::PiecewiseMap;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    fn edge(v: f64) -> Dendrogram {
        Dendrogram::from_edges("r", vec![("a", "r", PiecewiseMap::indicator(0.0, 1.0, v).unwrap())], None).unwrap()
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(labels(2), vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(DistanceMatrix::new(labels(2), vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(labels(2), vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(labels(2), vec![0.0, -1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_of_edges_matches_pairwise_calls() {
        let items: Vec<(String, Dendrogram)> =
            [1.0, 2.0, 4.0].iter().enumerate().map(|(i, &v)| (format!("d{i}"), edge(v))).collect();
        let m = distance_matrix(&items, Some(2)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), distance(&items[i].1, &items[j].1).unwrap());
            }
        }
        let one = distance_matrix(&items[..1], None).unwrap();
        assert_eq!(one.get(0, 0), 0.0);
        let dup = distance_matrix(&[items[0].clone(), items[0].clone()], None).unwrap();
        assert_eq!(dup.get(0, 1), 0.0);
    }

    #[test]
    fn correlation_properties() {
        let m = DistanceMatrix::from_upper(labels(4), &[1.0, 2.0, 3.0, 5.0, 4.0, 7.0]).unwrap();
        assert!((upper_tri_correlation(&m, &m).unwrap() - 1.0).abs() < 1e-15);
        let up: Vec<f64> = m.upper().iter().map(|v| 2.0 * v + 3.0).collect();
        let m2 = DistanceMatrix::from_upper(labels(4), &up).unwrap();
        assert!((upper_tri_correlation(&m, &m2).unwrap() - 1.0).abs() < 1e-12);
        let flat = DistanceMatrix::from_upper(labels(4), &[1.0; 6]).unwrap();
        assert!(matches!(upper_tri_correlation(&m, &flat), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn heatmap_is_deterministic() {
        let one = DistanceMatrix::new(labels(1), vec![0.0]).unwrap();
        assert_eq!(heatmap_svg(&one).matches("<rect x=").count(), 1);
        let zero = DistanceMatrix::new(labels(2), vec![0.0; 4]).unwrap();
        let svg = heatmap_svg(&zero);
        assert_eq!(svg.matches("rgb(255,255,255)").count(), 4);
        let m = DistanceMatrix::from_upper(labels(3), &[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(heatmap_svg(&m), heatmap_svg(&m.clone()));
        assert!(heatmap_svg(&m).contains("rgb(0,0,0)"));
    }
}
