//! Command-line front end: builds dendrograms from fields, point clouds and
//! Betti tables, computes edit distances and distance matrices, and runs the
//! seeded experiments.
//!
//! Exit codes: 0 on success, 2 when an input is invalid (schema errors,
//! violated preconditions, failed checks), 1 on I/O or internal errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use treedist::builders::{
    betti_weights, cardinality_weights, merge_tree_from_field, single_linkage, sublevel_measure_weights,
    unit_weights,
};
use treedist::distance::edit_distance;
use treedist::editable::{check_axioms, PiecewiseMap};
use treedist::experiments::{
    cluster_experiment, distance_matrix, heatmap_svg, prune_dataset, sine_experiment, upper_tri_correlation,
    ClusterConfig, DistanceMatrix, PruneSetting, SineConfig,
};
use treedist::io;
use treedist::pruning::{calibrate_epsilon, prune};
use treedist::random::{random_map, MapShape};
use treedist::{Dendrogram, Error};

/// Tolerance for the editable-space axiom check.
const AXIOM_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "treedist", version, about = "Edit distances between dendrograms of merge trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a dendrogram from a field CSV (columns x,y).
    BuildField {
        field: PathBuf,
        #[arg(long, value_enum, default_value = "L")]
        theta: FieldTheta,
        /// Truncation height; defaults to the largest field value for
        /// sublevel measures and to the largest merge height otherwise.
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a single-linkage dendrogram from a point cloud CSV.
    BuildCloud {
        cloud: PathBuf,
        #[arg(long, value_enum, default_value = "c")]
        theta: CloudTheta,
        /// Truncation height; defaults to the largest merge height.
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the weights of a dendrogram with heights by Betti steps or
    /// unit weights.
    Decorate {
        tree: PathBuf,
        #[arg(long, conflicts_with = "unit")]
        betti: Option<PathBuf>,
        /// Unit weights instead of a Betti table.
        #[arg(long)]
        unit: bool,
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncate the root edge of a dendrogram.
    Truncate {
        tree: PathBuf,
        #[arg(long)]
        truncate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove leaves of small norm.
    Prune {
        tree: PathBuf,
        #[command(flatten)]
        prune: PruneFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Edit distance between two dendrograms; optionally writes the plan.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Pairwise distances between every dendrogram (*.json) in a directory.
    Matrix {
        dir: PathBuf,
        #[command(flatten)]
        prune: PruneFlags,
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        jobs: Jobs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Gaussian point-cloud experiment; prints a summary.
    SimulateClusters {
        #[command(flatten)]
        run: ExperimentFlags,
        #[command(flatten)]
        prune: PruneFlags,
        #[arg(long)]
        truncate: Option<f64>,
        #[command(flatten)]
        jobs: Jobs,
        /// Distance matrix CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Warped-sine experiment; prints a summary.
    SimulateSines {
        #[command(flatten)]
        run: ExperimentFlags,
        #[command(flatten)]
        jobs: Jobs,
        /// Dendrogram distance matrix CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        warping_out: Option<PathBuf>,
        #[arg(long)]
        naive_out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Pearson correlation of the upper triangles of two matrix CSVs.
    Correlate { a: PathBuf, b: PathBuf },
    /// Check the editable-space axioms on maps from a file or on random maps.
    CheckAxioms {
        /// JSON document `{"format_version": 1, "maps": [...]}`.
        maps: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        #[arg(long)]
        affine: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldTheta {
    /// Sublevel-set measure.
    #[value(name = "L")]
    Measure,
    /// Sublevel-set measure divided by the domain length.
    #[value(name = "Ln")]
    NormalizedMeasure,
    /// Unit weights.
    #[value(name = "1")]
    Unit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CloudTheta {
    /// Cluster cardinality.
    #[value(name = "c")]
    Cardinality,
    /// Cluster cardinality divided by the number of points.
    #[value(name = "cn")]
    NormalizedCardinality,
    #[value(name = "1")]
    Unit,
}

#[derive(Args, Debug)]
struct PruneFlags {
    /// Prune leaves of norm below this threshold.
    #[arg(long, conflicts_with = "prune_target_pe")]
    prune_eps: Option<f64>,
    /// Calibrate the threshold to this mean pruning error.
    #[arg(long)]
    prune_target_pe: Option<f64>,
}

impl PruneFlags {
    fn setting(&self) -> Option<PruneSetting> {
        match (self.prune_eps, self.prune_target_pe) {
            (Some(epsilon), _) => Some(PruneSetting::Fixed { epsilon }),
            (None, Some(mean_error)) => Some(PruneSetting::Target { mean_error }),
            (None, None) => None,
        }
    }
}

#[derive(Args, Debug)]
struct Jobs {
    /// Worker threads for pairwise distances; all cores by default.
    #[arg(long, env = "TREEDIST_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ExperimentFlags {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Paper-scale dataset instead of the small default.
    #[arg(long)]
    full: bool,
    /// Seed of the ChaCha8 generator behind every random draw.
    #[arg(long)]
    seed: Option<u64>,
}

/// A failed command: its exit code and the lines to report.
#[derive(Debug)]
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            lines: vec![message.into()],
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: 1,
            lines: vec![format!("{}: {e}", path.display())],
        }
    }

    fn in_file(path: &Path, e: Error) -> Self {
        let mut f = Failure::from(e);
        f.lines = f.lines.iter().map(|l| format!("{}: {l}", path.display())).collect();
        f
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Pair { source, .. } => exit_code(source),
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            lines: vec![e.to_string()],
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

/// Writes `text` to `path`, or to standard output when no path is given.
fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => write_file(p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn println(out: &mut dyn Write, text: &str) -> Outcome {
    emit(out, None, &format!("{text}\n"))
}

/// Reads a dendrogram and lists every rule it breaks.
fn load_dendrogram(path: &Path) -> std::result::Result<Dendrogram, Failure> {
    let d = io::parse_dendrogram(&read(path)?).map_err(|e| Failure::in_file(path, e))?;
    let violations = d.validate();
    if violations.is_empty() {
        Ok(d)
    } else {
        Err(Failure {
            code: 2,
            lines: violations.iter().map(|v| format!("{}: {v}", path.display())).collect(),
        })
    }
}

fn dendrogram_files(dir: &Path) -> std::result::Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::invalid(format!("{}: no .json dendrograms found", dir.display())));
    }
    Ok(files)
}

fn label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_matrix(m: &DistanceMatrix, out: &mut dyn Write, path: Option<&Path>, svg: Option<&Path>) -> Outcome {
    emit(out, path, &io::matrix_to_csv(m)?)?;
    if let Some(svg) = svg {
        write_file(svg, &heatmap_svg(m))?;
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::BuildField {
            field,
            theta,
            truncate,
            out: path,
        } => {
            let f = io::parse_field(&read(&field)?).map_err(|e| Failure::in_file(&field, e))?;
            let tree = merge_tree_from_field(&f)?;
            let d = match theta {
                FieldTheta::Measure | FieldTheta::NormalizedMeasure => {
                    let top = f.ys().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let normalize = matches!(theta, FieldTheta::NormalizedMeasure);
                    sublevel_measure_weights(&f, &tree, normalize, truncate.unwrap_or(top))?
                }
                FieldTheta::Unit => unit_weights(&tree, truncate.unwrap_or(tree.max_height()))?,
            };
            emit(out, path.as_deref(), &io::dendrogram_to_string(&d))
        }
        Command::BuildCloud {
            cloud,
            theta,
            truncate,
            out: path,
        } => {
            let c = io::parse_cloud(&read(&cloud)?).map_err(|e| Failure::in_file(&cloud, e))?;
            let tree = single_linkage(&c);
            let k = truncate.unwrap_or(tree.max_height());
            let d = match theta {
                CloudTheta::Cardinality => cardinality_weights(&c, &tree, false, k)?,
                CloudTheta::NormalizedCardinality => cardinality_weights(&c, &tree, true, k)?,
                CloudTheta::Unit => unit_weights(&tree, k)?,
            };
            emit(out, path.as_deref(), &io::dendrogram_to_string(&d))
        }
        Command::Decorate {
            tree,
            betti,
            unit,
            truncate,
            out: path,
        } => {
            let d = io::parse_dendrogram(&read(&tree)?).map_err(|e| Failure::in_file(&tree, e))?;
            let mt = d
                .merge_tree()
                .ok_or_else(|| Failure::invalid(format!("{}: decorating needs vertex heights", tree.display())))?;
            let k = truncate.unwrap_or(mt.max_height());
            let decorated = match (betti, unit) {
                (Some(b), _) => {
                    let table = io::parse_betti(&read(&b)?).map_err(|e| Failure::in_file(&b, e))?;
                    betti_weights(&mt, &table, k)?
                }
                (None, true) => unit_weights(&mt, k)?,
                (None, false) => return Err(Failure::invalid("decorate needs --betti TABLE or --unit")),
            };
            emit(out, path.as_deref(), &io::dendrogram_to_string(&decorated))
        }
        Command::Truncate {
            tree,
            truncate,
            out: path,
        } => {
            let d = load_dendrogram(&tree)?;
            emit(out, path.as_deref(), &io::dendrogram_to_string(&d.truncate(truncate)?))
        }
        Command::Prune {
            tree,
            prune: flags,
            seed,
            out: path,
        } => {
            let d = load_dendrogram(&tree)?;
            let eps = match flags.setting() {
                Some(PruneSetting::Fixed { epsilon }) => epsilon,
                Some(PruneSetting::Target { mean_error }) => calibrate_epsilon(std::slice::from_ref(&d), mean_error, seed)?.0,
                _ => return Err(Failure::invalid("prune needs --prune-eps or --prune-target-pe")),
            };
            let r = prune(&d, eps, seed);
            let summary = json!({
                "epsilon": eps,
                "removed_leaves": r.removed_leaves,
                "pruning_error": r.pruning_error,
            });
            let text = io::dendrogram_to_string(&r.pruned);
            match path {
                Some(p) => {
                    write_file(&p, &text)?;
                    println(out, &pretty(&summary))
                }
                None => emit(out, None, &text),
            }
        }
        Command::Distance { a, b, plan } => {
            let (da, db) = (load_dendrogram(&a)?, load_dendrogram(&b)?);
            let (d, p) = edit_distance(&da, &db)?;
            if let Some(path) = plan {
                write_file(&path, &io::plan_to_string(&p))?;
            }
            println(out, &format!("{d:?}"))
        }
        Command::Matrix {
            dir,
            prune: flags,
            truncate,
            seed,
            jobs,
            out: path,
            svg,
        } => {
            let files = dendrogram_files(&dir)?;
            let mut data = Vec::with_capacity(files.len());
            for f in &files {
                let d = load_dendrogram(f)?;
                data.push(match truncate {
                    Some(k) => d.truncate(k).map_err(|e| Failure::in_file(f, e))?,
                    None => d,
                });
            }
            if let Some(setting) = flags.setting() {
                data = prune_dataset(&data, setting, seed)?.0;
            }
            let items: Vec<(String, Dendrogram)> = files.iter().map(|f| label(f)).zip(data).collect();
            let m = distance_matrix(&items, jobs.jobs)?;
            write_matrix(&m, out, path.as_deref(), svg.as_deref())
        }
        Command::SimulateClusters {
            run,
            prune: flags,
            truncate,
            jobs,
            out: path,
            svg,
        } => {
            let mut cfg: ClusterConfig = match &run.config {
                Some(p) => io::from_versioned_str(&read(p)?).map_err(|e| Failure::in_file(p, e))?,
                None if run.full => ClusterConfig::full(0),
                None => ClusterConfig::desk(0),
            };
            if let Some(seed) = run.seed {
                cfg.seed = seed;
            }
            if let Some(setting) = flags.setting() {
                cfg.prune = setting;
            }
            if truncate.is_some() {
                cfg.truncate = truncate;
            }
            let r = cluster_experiment(&cfg, jobs.jobs)?;
            if path.is_some() || svg.is_some() {
                write_matrix(&r.matrix, out, path.as_deref(), svg.as_deref())?;
            }
            let summary = json!({
                "config": cfg,
                "clouds": r.labels.len(),
                "truncation": r.truncation,
                "epsilon": r.epsilon,
                "mean_pruning_error": r.mean_pruning_error,
                "mean_between": r.mean_between,
                "mean_within": r.mean_within,
                "separated": r.mean_between > r.mean_within,
            });
            println(out, &pretty(&summary))
        }
        Command::SimulateSines {
            run,
            jobs,
            out: path,
            warping_out,
            naive_out,
            svg,
        } => {
            let mut cfg: SineConfig = match &run.config {
                Some(p) => io::from_versioned_str(&read(p)?).map_err(|e| Failure::in_file(p, e))?,
                None if run.full => SineConfig::full(0),
                None => SineConfig::desk(0),
            };
            if let Some(seed) = run.seed {
                cfg.seed = seed;
            }
            let r = sine_experiment(&cfg, jobs.jobs)?;
            if path.is_some() || svg.is_some() {
                write_matrix(&r.dendrogram_matrix, out, path.as_deref(), svg.as_deref())?;
            }
            if let Some(p) = warping_out {
                write_file(&p, &io::matrix_to_csv(&r.warping_matrix)?)?;
            }
            if let Some(p) = naive_out {
                write_file(&p, &io::matrix_to_csv(&r.naive_matrix)?)?;
            }
            let summary = json!({
                "config": cfg,
                "units": r.labels.len(),
                "truncation": r.truncation,
                "dendrogram_correlation": r.dendrogram_correlation,
                "naive_correlation": r.naive_correlation,
            });
            println(out, &pretty(&summary))
        }
        Command::Correlate { a, b } => {
            let ma = io::parse_matrix(&read(&a)?).map_err(|e| Failure::in_file(&a, e))?;
            let mb = io::parse_matrix(&read(&b)?).map_err(|e| Failure::in_file(&b, e))?;
            println(out, &format!("{:?}", upper_tri_correlation(&ma, &mb)?))
        }
        Command::CheckAxioms {
            maps,
            samples,
            channels,
            affine,
            seed,
        } => {
            let list = match &maps {
                Some(p) => parse_maps(p)?,
                None => {
                    if channels == 0 {
                        return Err(Failure::invalid("--channels must be positive"));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let shape = MapShape {
                        channels,
                        affine,
                        ..MapShape::default()
                    };
                    (0..samples).map(|_| random_map(&mut rng, &shape)).collect()
                }
            };
            let report = check_axioms(&list, AXIOM_TOL)?;
            println(out, &pretty(&json!(report)))?;
            let ok = report.p1_metric_ok
                && report.p2_monoid_ok
                && report.p3_norm_additive_ok
                && report.p4_translation_invariant_ok;
            if ok {
                Ok(())
            } else {
                Err(Failure::invalid(format!(
                    "axioms violated by up to {:e}",
                    report.max_violation
                )))
            }
        }
    }
}

fn parse_maps(path: &Path) -> std::result::Result<Vec<PiecewiseMap>, Failure> {
    let text = read(path)?;
    let schema = |p: &str, m: &str| Failure::in_file(path, Error::Schema { path: p.into(), message: m.into() });
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| schema("$", &format!("malformed JSON: {e}")))?;
    match v.get("format_version").and_then(|x| x.as_u64()) {
        Some(io::FORMAT_VERSION) => {}
        Some(_) => return Err(schema("format_version", "unsupported version")),
        None => return Err(schema("format_version", "missing field")),
    }
    let Some(items) = v.get("maps").and_then(|m| m.as_array()) else {
        return Err(schema("maps", "expected an array"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, m)| io::map_from_json(m, &format!("maps[{i}]")).map_err(|e| Failure::in_file(path, e)))
        .collect()
}

/// Runs one invocation; `argv[0]` is the program name. Results go to `out`,
/// diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            for line in &f.lines {
                let _ = writeln!(err, "error: {line}");
            }
            f.code
        }
    }
}
