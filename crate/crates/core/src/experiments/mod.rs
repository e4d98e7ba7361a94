//! Simulated datasets and the pipelines that turn them into distance
//! matrices: Gaussian point clouds decorated with normalized cluster
//! cardinalities, and warped sine waves decorated with sublevel measures.

pub mod matrix;
pub mod spline;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders::{
    cardinality_weights, merge_tree_from_field, single_linkage, sublevel_measure_weights, unit_weights,
    PointCloud, ScalarField1D,
};
use crate::distance::{stability_check, StabilityReport};
use crate::error::{Error, Result};
use crate::pruning::{calibrate_epsilon, prune};
use crate::tree::Dendrogram;
pub use matrix::{distance_matrix, heatmap_svg, pearson, upper_tri_correlation, DistanceMatrix};
pub use spline::MonotoneCubic;

/// How the cluster pipeline prunes its dendrograms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PruneSetting {
    None,
    Fixed { epsilon: f64 },
    Target { mean_error: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub clouds_per_class: usize,
    pub points: usize,
    pub variance: f64,
    pub seed: u64,
    pub prune: PruneSetting,
    /// Truncation height; the largest merge height of the dataset if unset.
    pub truncate: Option<f64>,
}

impl ClusterConfig {
    /// 30 clouds of 150 points (151 for the outlier class).
    pub fn full(seed: u64) -> Self {
        ClusterConfig {
            clouds_per_class: 10,
            points: 150,
            variance: 0.5,
            seed,
            prune: PruneSetting::Target { mean_error: 0.15 },
            truncate: None,
        }
    }

    /// 12 clouds of 45 points.
    pub fn desk(seed: u64) -> Self {
        ClusterConfig {
            clouds_per_class: 4,
            points: 45,
            ..ClusterConfig::full(seed)
        }
    }

    fn check(&self) -> Result<()> {
        if self.clouds_per_class == 0 || self.points < 3 || !(self.variance > 0.0) {
            return Err(Error::InvalidInput(
                "need at least one cloud per class, three points and a positive variance".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCloud {
    pub label: String,
    pub class: u8,
    pub cloud: PointCloud,
}

/// Gaussian clouds in the plane in three classes: two clusters at (±5, 0);
/// three clusters at (5, 0), (-5, 0), (-10, 0); two clusters plus one
/// outlier at (-10, 0).
pub fn gen_gaussian_clouds(config: &ClusterConfig) -> Result<Vec<LabeledCloud>> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.variance.sqrt()).expect("positive deviation");
    let n = config.points;
    let mut out = Vec::new();
    for class in 1..=3u8 {
        for k in 0..config.clouds_per_class {
            let sizes: Vec<(f64, usize)> = match class {
                1 | 3 => vec![(5.0, n.div_ceil(2)), (-5.0, n / 2)],
                _ => vec![(5.0, n / 3), (-5.0, n / 3), (-10.0, n - 2 * (n / 3))],
            };
            let mut pts = Vec::with_capacity(n + 1);
            for (cx, m) in sizes {
                for _ in 0..m {
                    pts.push(vec![cx + noise.sample(&mut rng), noise.sample(&mut rng)]);
                }
            }
            if class == 3 {
                pts.push(vec![-10.0, 0.0]);
            }
            out.push(LabeledCloud {
                label: format!("class{class}_{k:02}"),
                class,
                cloud: PointCloud::new(pts)?,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub labels: Vec<String>,
    pub classes: Vec<u8>,
    pub matrix: DistanceMatrix,
    pub truncation: f64,
    pub epsilon: f64,
    pub mean_pruning_error: f64,
    /// Mean distance between class 2 and classes 1 and 3.
    pub mean_between: f64,
    /// Mean distance among classes 1 and 3.
    pub mean_within: f64,
}

/// Normalized cardinality dendrograms of every cloud, truncated at `k`.
pub fn cloud_dendrograms(clouds: &[LabeledCloud], k: Option<f64>) -> Result<(Vec<Dendrogram>, f64)> {
    let trees: Vec<_> = clouds.par_iter().map(|c| single_linkage(&c.cloud)).collect();
    let k = k.unwrap_or_else(|| trees.iter().map(|t| t.max_height()).fold(0.0, f64::max));
    let ds = clouds
        .par_iter()
        .zip(&trees)
        .map(|(c, t)| cardinality_weights(&c.cloud, t, true, k))
        .collect::<Result<Vec<_>>>()?;
    Ok((ds, k))
}

/// Applies a pruning setting to a dataset; returns the pruned dendrograms,
/// the threshold used and the mean pruning error.
pub fn prune_dataset(data: &[Dendrogram], setting: PruneSetting, seed: u64) -> Result<(Vec<Dendrogram>, f64, f64)> {
    let eps = match setting {
        PruneSetting::None => return Ok((data.to_vec(), 0.0, 0.0)),
        PruneSetting::Fixed { epsilon } => epsilon,
        PruneSetting::Target { mean_error } => calibrate_epsilon(data, mean_error, seed)?.0,
    };
    let results: Vec<_> = data.par_iter().map(|d| prune(d, eps, seed)).collect();
    let mean = results.iter().map(|r| r.pruning_error).sum::<f64>() / data.len().max(1) as f64;
    Ok((results.into_iter().map(|r| r.pruned).collect(), eps, mean))
}

/// The point-cloud experiment end to end.
pub fn cluster_experiment(config: &ClusterConfig, jobs: Option<usize>) -> Result<ClusterReport> {
    let clouds = gen_gaussian_clouds(config)?;
    let (ds, k) = cloud_dendrograms(&clouds, config.truncate)?;
    let (pruned, epsilon, mean_pe) = prune_dataset(&ds, config.prune, config.seed)?;
    let items: Vec<(String, Dendrogram)> = clouds.iter().map(|c| c.label.clone()).zip(pruned).collect();
    let matrix = distance_matrix(&items, jobs)?;
    let classes: Vec<u8> = clouds.iter().map(|c| c.class).collect();
    let mean_between = matrix
        .mean_where(|i, j| (classes[i] == 2) != (classes[j] == 2))
        .unwrap_or(0.0);
    let mean_within = matrix
        .mean_where(|i, j| classes[i] != 2 && classes[j] != 2)
        .unwrap_or(0.0);
    Ok(ClusterReport {
        labels: clouds.iter().map(|c| c.label.clone()).collect(),
        classes,
        matrix,
        truncation: k,
        epsilon,
        mean_pruning_error: mean_pe,
        mean_between,
        mean_within,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineConfig {
    pub units_per_class: usize,
    pub control_points: usize,
    pub interval: f64,
    pub class_means: [f64; 2],
    pub sd: f64,
    pub grid_step: f64,
    pub seed: u64,
}

impl SineConfig {
    /// 100 units, 50 per class.
    pub fn full(seed: u64) -> Self {
        SineConfig {
            units_per_class: 50,
            control_points: 10,
            interval: 30.0,
            class_means: [3.0, 5.0],
            sd: 2.0,
            grid_step: 0.05,
            seed,
        }
    }

    /// 24 units, 12 per class.
    pub fn desk(seed: u64) -> Self {
        SineConfig {
            units_per_class: 12,
            ..SineConfig::full(seed)
        }
    }

    fn check(&self) -> Result<()> {
        if self.units_per_class == 0
            || self.control_points == 0
            || !(self.interval > 0.0)
            || !(self.sd >= 0.0)
            || !(self.grid_step > 0.0)
            || self.class_means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::InvalidInput("invalid warped-sine configuration".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpedSine {
    pub label: String,
    pub class: u8,
    pub warp: MonotoneCubic,
    pub field: ScalarField1D,
}

/// Draws from `N(mean, sd)` conditioned on being positive.
fn positive_normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let d = Normal::new(mean, sd).expect("finite parameters");
    loop {
        let v = d.sample(rng);
        if v > 0.0 {
            return v;
        }
    }
}

/// `sin ∘ w⁻¹` sampled with step `step` on `[0, w(end)]`.
pub fn warped_sine(warp: &MonotoneCubic, step: f64) -> Result<ScalarField1D> {
    let (_, end) = warp.domain();
    let top = warp.eval(end);
    let n = (top / step).floor() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if top - xs[n] > 1e-9 * top.max(1.0) {
        xs.push(top);
    } else {
        xs[n] = top;
    }
    let ys = xs.iter().map(|&y| warp.inverse(y).sin()).collect();
    ScalarField1D::new(xs, ys)
}

/// Warped sines in two classes whose warp increments have different means.
pub fn gen_warped_sines(config: &SineConfig) -> Result<Vec<WarpedSine>> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.control_points;
    let dx = config.interval / n as f64;
    let mut out = Vec::new();
    for (c, &mean) in config.class_means.iter().enumerate() {
        for k in 0..config.units_per_class {
            let mut xs = vec![0.0];
            let mut ys = vec![0.0];
            for i in 1..=n {
                let v = positive_normal(&mut rng, mean, config.sd);
                xs.push(if i == n { config.interval } else { dx * i as f64 });
                ys.push(ys[i - 1] + v);
            }
            let warp = MonotoneCubic::new(xs, ys)?;
            let field = warped_sine(&warp, config.grid_step)?;
            out.push(WarpedSine {
                label: format!("class{}_{k:02}", c + 1),
                class: c as u8 + 1,
                warp,
                field,
            });
        }
    }
    Ok(out)
}

/// L2 distance between two warps on their common domain, by the trapezoid
/// rule on `samples` points.
pub fn warp_l2(a: &MonotoneCubic, b: &MonotoneCubic, samples: usize) -> f64 {
    let (lo, hi) = a.domain();
    let h = (hi - lo) / (samples - 1) as f64;
    let mut s = 0.0;
    for i in 0..samples {
        let x = lo + h * i as f64;
        let d = a.eval(x) - b.eval(x);
        let w = if i == 0 || i + 1 == samples { 0.5 } else { 1.0 };
        s += w * d * d;
    }
    (s * h).sqrt()
}

/// Samples of a field on `grid`, zero outside its domain.
fn zero_extended(f: &ScalarField1D, grid: &[f64]) -> Vec<f64> {
    let (lo, hi) = (f.xs()[0], f.xs()[f.len() - 1]);
    grid.iter()
        .map(|&x| if x < lo || x > hi { 0.0 } else { f.value(x) })
        .collect()
}

/// Naive L2 distances between fields: every field is resampled on a common
/// grid of `points` points over the union of the domains, zero-extended.
pub fn naive_l2_matrix(fields: &[(String, ScalarField1D)], points: usize) -> Result<DistanceMatrix> {
    let lo = fields.iter().map(|f| f.1.xs()[0]).fold(f64::INFINITY, f64::min);
    let hi = fields.iter().map(|f| f.1.xs()[f.1.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let h = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
    let samples: Vec<Vec<f64>> = fields.iter().map(|f| zero_extended(&f.1, &grid)).collect();
    let n = fields.len();
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = samples[i].iter().zip(&samples[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            upper.push((s * h).sqrt());
        }
    }
    DistanceMatrix::from_upper(fields.iter().map(|f| f.0.clone()).collect(), &upper)
}

/// Unnormalized sublevel-measure dendrograms truncated at a common height:
/// `max(1, largest field value)` unless `k` is given. Above the largest
/// value every weight is the domain length, so a higher `k` adds the same
/// amount to every root edge.
pub fn field_dendrograms(fields: &[ScalarField1D], k: Option<f64>) -> Result<(Vec<Dendrogram>, f64)> {
    let trees = fields
        .par_iter()
        .map(merge_tree_from_field)
        .collect::<Result<Vec<_>>>()?;
    let k = k.unwrap_or_else(|| fields.iter().flat_map(|f| f.ys()).copied().fold(1.0, f64::max));
    let ds = fields
        .par_iter()
        .zip(&trees)
        .map(|(f, t)| sublevel_measure_weights(f, t, false, k))
        .collect::<Result<Vec<_>>>()?;
    Ok((ds, k))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SineReport {
    pub labels: Vec<String>,
    pub classes: Vec<u8>,
    pub dendrogram_matrix: DistanceMatrix,
    pub warping_matrix: DistanceMatrix,
    pub naive_matrix: DistanceMatrix,
    pub truncation: f64,
    pub dendrogram_correlation: f64,
    pub naive_correlation: f64,
}

/// Grid size for the warping distances.
pub const WARP_SAMPLES: usize = 3001;
/// Common grid size for the naive field distances.
pub const NAIVE_POINTS: usize = 1024;

/// The warped-sine experiment end to end.
pub fn sine_experiment(config: &SineConfig, jobs: Option<usize>) -> Result<SineReport> {
    let units = gen_warped_sines(config)?;
    let labels: Vec<String> = units.iter().map(|u| u.label.clone()).collect();
    let fields: Vec<ScalarField1D> = units.iter().map(|u| u.field.clone()).collect();
    let (ds, k) = field_dendrograms(&fields, None)?;
    let items: Vec<(String, Dendrogram)> = labels.iter().cloned().zip(ds).collect();
    let dendrogram_matrix = distance_matrix(&items, jobs)?;
    let n = units.len();
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            upper.push(warp_l2(&units[i].warp, &units[j].warp, WARP_SAMPLES));
        }
    }
    let warping_matrix = DistanceMatrix::from_upper(labels.clone(), &upper)?;
    let named: Vec<(String, ScalarField1D)> = labels.iter().cloned().zip(fields).collect();
    let naive_matrix = naive_l2_matrix(&named, NAIVE_POINTS)?;
    Ok(SineReport {
        dendrogram_correlation: upper_tri_correlation(&dendrogram_matrix, &warping_matrix)?,
        naive_correlation: upper_tri_correlation(&naive_matrix, &warping_matrix)?,
        labels,
        classes: units.iter().map(|u| u.class).collect(),
        dendrogram_matrix,
        warping_matrix,
        naive_matrix,
        truncation: k,
    })
}

/// One stability trial: `sin` on `[0, 30]` sampled with step 0.5, against a
/// copy with uniform noise in `[-ε, ε]` added to every sample; both carry
/// unit weights truncated at their common maximum height.
pub fn stability_trial(epsilon: f64, seed: u64) -> Result<StabilityReport> {
    let f = ScalarField1D::sample(0.0, 30.0, 61, f64::sin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys: Vec<f64> = if epsilon > 0.0 {
        let u = Uniform::new_inclusive(-epsilon, epsilon).expect("valid range");
        f.ys().iter().map(|y| y + u.sample(&mut rng)).collect()
    } else {
        f.ys().to_vec()
    };
    let g = ScalarField1D::new(f.xs().to_vec(), ys)?;
    let (tf, tg) = (merge_tree_from_field(&f)?, merge_tree_from_field(&g)?);
    let k = tf.max_height().max(tg.max_height());
    stability_check(&unit_weights(&tf, k)?, &unit_weights(&tg, k)?, epsilon)
}

/// The pair of fields on `[-1, 2]` whose minima swap depth:
/// `f = |2x+1|` left of 0 and `|x-1| + ε` right of it; `g` moves the `ε`
/// to the left branch. Both jump at 0.
pub fn swapped_minima_fields(epsilon: f64) -> Result<(ScalarField1D, ScalarField1D)> {
    let xs = vec![-1.0, -0.5, 0.0, 0.0, 1.0, 2.0];
    let f = ScalarField1D::new(xs.clone(), vec![1.0, 0.0, 1.0, 1.0 + epsilon, epsilon, 1.0 + epsilon])?;
    let g = ScalarField1D::new(xs, vec![1.0 + epsilon, epsilon, 1.0 + epsilon, 1.0, 0.0, 1.0])?;
    Ok((f, g))
}

/// Sublevel-measure dendrograms of [`swapped_minima_fields`], truncated at
/// `1 + ε`.
pub fn swapped_minima_dendrograms(epsilon: f64) -> Result<(Dendrogram, Dendrogram)> {
    let (f, g) = swapped_minima_fields(epsilon)?;
    let k = 1.0 + epsilon;
    let a = sublevel_measure_weights(&f, &merge_tree_from_field(&f)?, false, k)?;
    let b = sublevel_measure_weights(&g, &merge_tree_from_field(&g)?, false, k)?;
    Ok((a, b))
}
