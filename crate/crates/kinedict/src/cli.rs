//! The `kinedict` subcommand driver.
//!
//! Seven subcommands cover the pipeline: `synth` makes data with ground-truth
//! metadata, `learn`/`kmeans` build dictionaries, `coverage` scores them,
//! `fit` recovers poses from keypoints, `plot-hull` draws a dictionary's
//! convex hull, and `inspect` summarizes a dataset.
//!
//! Conventions shared by every subcommand:
//!
//! * Tuning knobs come from flags, with an optional `--config FILE` of JSON
//!   defaults (flat object, kebab-case keys named after the long flags);
//!   explicit flags always win. Required paths are flags-only.
//! * Identical command line + seed ⇒ byte-identical JSON artifacts. SVG output
//!   is structure-identical rather than byte-pinned.
//! * Every artifact carries a provenance block: the command line (program name
//!   reduced to its file stem so artifacts don't depend on the install path),
//!   the resolved seed, and the crate version.
//! * Exit codes: 0 success, 1 usage, 2 bad data, 3 numeric failure.
//! * `KINEDICT_THREADS` caps the rayon thread pool for the whole process.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use kinedict_core::cluster::{coverage, kmeans_quat};
use kinedict_core::dict::{
    learn, learn_quat, solve_code, Dictionary, InnerConfig, LearnConfig, Mode,
};
use kinedict_core::fitting::{fit, FitConfig, FitProblem};
use kinedict_core::mat::Mat;
use kinedict_core::simplex::sparsemax;
use kinedict_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::formats::{
    self, DictionariesRef, DictionaryFile, FitFile, FitReport, HullMetaFile, InspectFile,
    JointSummary, ProblemFile, ProvenanceBlock, TruthFile,
};
use crate::hull;
use crate::ingest::{self, Format, PoseDataset};
use crate::skeleton;
use crate::synth::{self, Generator, SynthOutput, SynthParams};

const INGEST_HELP: &str = "\
Ingestion formats:
  csv-axisangle  rows are `frame_id` followed by 3 reals per joint; each
                 3-vector is a rotation vector (axis times angle): its
                 direction is the rotation axis, its Euclidean norm the
                 rotation angle in radians.
  csv-quat       rows are 4 reals per joint, in w,x,y,z order (normalized and
                 sign-canonicalized on ingest).
  jsonl          one {\"joints\": [[w,x,y,z], ...]} object per line.
  csv-vec        rows are plain feature vectors (no rotations).";

#[derive(Parser)]
#[command(
    name = "kinedict",
    version,
    about = "Sparse quaternion dictionaries for skeletal pose work",
    propagate_version = true
)]
struct Cli {
    /// JSON file of default knob values; explicit flags win.
    ///
    /// A flat object with kebab-case keys named after the long flags, e.g.
    /// {"atoms": 16, "threshold-deg": 5.0}. Only tuning knobs may appear;
    /// input and output paths stay flags-only.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a dictionary from rotation or vector data
    Learn(LearnArgs),
    /// Build a spherical k-means baseline dictionary from rotation data
    Kmeans(KmeansArgs),
    /// Score a dictionary's coverage of a dataset
    Coverage(CoverageArgs),
    /// Fit a skeleton pose to 2D/3D keypoints under dictionary constraints
    Fit(FitArgs),
    /// Generate a synthetic dataset with ground-truth metadata
    Synth(SynthArgs),
    /// Project a dictionary to 2D and draw its convex hull
    PlotHull(PlotHullArgs),
    /// Summarize a rotation dataset as JSON on stdout
    Inspect(InspectArgs),
}

/// Run the CLI against an explicit argument vector (index 0 is the program
/// name). Errors carry the exit class; help and version requests succeed.
pub fn run<I, S>(argv: I) -> CliResult<()>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.print()
                    .map_err(|io| CliError::Data(format!("writing help text: {io}")))
            } else {
                Err(CliError::Usage(e.to_string()))
            };
        }
    };
    init_threads(std::env::var("KINEDICT_THREADS").ok().as_deref())?;
    let file = FileConfig::load(cli.config.as_deref())?;
    let command = command_string(&argv);
    match cli.command {
        Command::Learn(a) => cmd_learn(a, &file, &command),
        Command::Kmeans(a) => cmd_kmeans(a, &file, &command),
        Command::Coverage(a) => cmd_coverage(a, &file, &command),
        Command::Fit(a) => cmd_fit(a, &file, &command),
        Command::Synth(a) => cmd_synth(a, &file, &command),
        Command::PlotHull(a) => cmd_plot_hull(a, &file, &command),
        Command::Inspect(a) => cmd_inspect(a, &file, &command),
    }
}

/// The provenance form of the invocation: program name reduced to its file
/// stem (so the string is independent of the install path and of the working
/// directory the binary was launched from), then the raw arguments.
fn command_string(argv: &[String]) -> String {
    let program = argv
        .first()
        .and_then(|arg0| Path::new(arg0).file_stem())
        .and_then(|stem| stem.to_str())
        .unwrap_or("kinedict")
        .to_string();
    let mut parts = vec![program];
    parts.extend(argv.iter().skip(1).cloned());
    parts.join(" ")
}

/// Apply `KINEDICT_THREADS` to the global rayon pool.
fn init_threads(raw: Option<&str>) -> CliResult<()> {
    let Some(raw) = raw else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "KINEDICT_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    // In-process callers may invoke `run` repeatedly; only the first build can
    // install the global pool, and the cap applies process-wide from then on.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Classify a core-library failure. Input problems that survive our own flag
/// validation reflect the data (or its interplay with the knobs); only
/// genuinely numeric breakdowns get exit code 3.
fn stage_core(e: CoreError, what: &str) -> CliError {
    match e {
        CoreError::DegenerateCombination => CliError::Numeric(format!("{what}: {e}")),
        other => CliError::Data(format!("{what}: {other}")),
    }
}

fn require(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg.into()))
    }
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

/// Every key a config file may set (the union of all subcommand knobs).
const KNOWN_KEYS: &[&str] = &[
    "format",
    "joint",
    "joint-label",
    "atoms",
    "steps",
    "batch",
    "momentum",
    "seed",
    "inner-steps",
    "inner-tol",
    "k",
    "iters",
    "threshold-deg",
    "restarts",
    "max-iters",
    "tol",
    "count",
    "spread-deg",
    "separation-deg",
    "pairs",
    "arc-deg",
    "dim",
    "support",
    "noise",
    "pure-frac",
    "index",
];

/// The parsed `--config` file, if any. Each subcommand deserializes the knobs
/// it understands; keys owned by other subcommands are ignored, keys owned by
/// none are rejected up front.
#[derive(Debug)]
struct FileConfig(Option<serde_json::Value>);

impl FileConfig {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig(None));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading config file {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("parsing config file {}: {e}", path.display())))?;
        let Some(map) = value.as_object() else {
            return Err(CliError::Usage(format!(
                "config file {} must hold a JSON object",
                path.display()
            )));
        };
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config file {}: unknown key \"{key}\"",
                    path.display()
                )));
            }
        }
        Ok(FileConfig(Some(value)))
    }

    fn knobs<T: DeserializeOwned + Default>(&self) -> CliResult<T> {
        match &self.0 {
            None => Ok(T::default()),
            Some(value) => serde_json::from_value(value.clone())
                .map_err(|e| CliError::Usage(format!("config file: {e}"))),
        }
    }
}

/// Resolve one knob: flag beats config file beats built-in default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_format(flag: Option<Format>, file: Option<&str>, default: Format) -> CliResult<Format> {
    if let Some(format) = flag {
        return Ok(format);
    }
    match file {
        Some(name) => name.parse::<Format>().map_err(CliError::Usage),
        None => Ok(default),
    }
}

fn inner_config(steps: Option<usize>, tol: Option<f64>) -> CliResult<InnerConfig> {
    let default = InnerConfig::default();
    let inner = InnerConfig {
        max_steps: steps.unwrap_or(default.max_steps),
        tol: tol.unwrap_or(default.tol),
        ..default
    };
    require(inner.max_steps >= 1, "--inner-steps must be at least 1")?;
    require(
        inner.tol.is_finite() && inner.tol > 0.0,
        "--inner-tol must be a positive number",
    )?;
    Ok(inner)
}

fn read_dictionary(path: &Path) -> CliResult<Dictionary> {
    let file: DictionaryFile = formats::read_json(path)?;
    file.to_core()
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(after_help = INGEST_HELP)]
struct LearnArgs {
    /// Training data file.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Where to write the dictionary JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Input format; csv-vec learns Euclidean atoms, the rest quaternion atoms.
    #[arg(long)]
    format: Option<Format>,
    /// Joint column to train on (rotation formats only).
    #[arg(long)]
    joint: Option<usize>,
    /// Label recorded in the dictionary (defaults to the joint's column name).
    #[arg(long)]
    joint_label: Option<String>,
    /// Number of atoms.
    #[arg(long)]
    atoms: Option<usize>,
    /// Outer learning steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Statistics momentum in [0, 1).
    #[arg(long)]
    momentum: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inner code-solver iteration cap.
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Inner code-solver relative-decrease tolerance.
    #[arg(long)]
    inner_tol: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct LearnKnobs {
    format: Option<String>,
    joint: Option<usize>,
    joint_label: Option<String>,
    atoms: Option<usize>,
    steps: Option<usize>,
    batch: Option<usize>,
    momentum: Option<f64>,
    seed: Option<u64>,
    inner_steps: Option<usize>,
    inner_tol: Option<f64>,
}

fn cmd_learn(a: LearnArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let k: LearnKnobs = file.knobs()?;
    let format = pick_format(a.format, k.format.as_deref(), Format::CsvQuat)?;
    let seed = pick(a.seed, k.seed, 0);
    let n_atoms = pick(a.atoms, k.atoms, 16);
    let steps = pick(a.steps, k.steps, 200);
    let batch = pick(a.batch, k.batch, 64);
    let momentum = pick(a.momentum, k.momentum, 0.9);
    let inner = inner_config(a.inner_steps.or(k.inner_steps), a.inner_tol.or(k.inner_tol))?;
    require(n_atoms >= 1, "--atoms must be at least 1")?;
    require(steps >= 1, "--steps must be at least 1")?;
    require(batch >= 1, "--batch must be at least 1")?;
    require(
        momentum.is_finite() && (0.0..1.0).contains(&momentum),
        "--momentum must lie in [0, 1)",
    )?;

    let provenance = ProvenanceBlock::new(command.to_string(), seed);
    let dict = if format == Format::CsvVec {
        let data = ingest::ingest_vectors(&a.input)?;
        let label = a.joint_label.or(k.joint_label).unwrap_or_else(|| "shape".into());
        let mat = Mat::from_columns(&data.rows)
            .map_err(|e| stage_core(e, "assembling the data matrix"))?;
        let config = LearnConfig {
            mode: Mode::Euclidean,
            n_atoms,
            batch_size: batch,
            steps,
            momentum,
            seed,
            inner,
            joint_label: label,
            ..LearnConfig::default()
        };
        learn(&mat, &config).map_err(|e| stage_core(e, "learning the dictionary"))?
    } else {
        let dataset = ingest::ingest(&a.input, format)?;
        let joint = pick(a.joint, k.joint, 0);
        let column = dataset.joint_column(joint)?;
        let label = a
            .joint_label
            .or(k.joint_label)
            .unwrap_or_else(|| dataset.joint_names[joint].clone());
        let config = LearnConfig {
            mode: Mode::Quaternion,
            n_atoms,
            batch_size: batch,
            steps,
            momentum,
            seed,
            inner,
            joint_label: label,
            ..LearnConfig::default()
        };
        learn_quat(&column, &config).map_err(|e| stage_core(e, "learning the dictionary"))?
    };
    formats::write_json(&a.out, &DictionaryFile::from_core(&dict, Some(provenance)))
}

// ---------------------------------------------------------------------------
// kmeans
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(after_help = INGEST_HELP)]
struct KmeansArgs {
    /// Training data file (rotation formats only).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Where to write the dictionary JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Input format: csv-axisangle, csv-quat, or jsonl.
    #[arg(long)]
    format: Option<Format>,
    /// Joint column to cluster.
    #[arg(long)]
    joint: Option<usize>,
    /// Number of centers.
    #[arg(long)]
    k: Option<usize>,
    /// Lloyd iteration cap.
    #[arg(long)]
    iters: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct KmeansKnobs {
    format: Option<String>,
    joint: Option<usize>,
    k: Option<usize>,
    iters: Option<usize>,
    seed: Option<u64>,
}

fn cmd_kmeans(a: KmeansArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: KmeansKnobs = file.knobs()?;
    let format = pick_format(a.format, kn.format.as_deref(), Format::CsvQuat)?;
    require(
        format.is_rotation(),
        "kmeans clusters rotations; use csv-axisangle, csv-quat, or jsonl",
    )?;
    let centers = pick(a.k, kn.k, 8);
    let iters = pick(a.iters, kn.iters, 100);
    let seed = pick(a.seed, kn.seed, 0);
    require(centers >= 1, "--k must be at least 1")?;
    require(iters >= 1, "--iters must be at least 1")?;

    let dataset = ingest::ingest(&a.input, format)?;
    let column = dataset.joint_column(pick(a.joint, kn.joint, 0))?;
    let dict = kmeans_quat(&column, centers, seed, iters)
        .map_err(|e| stage_core(e, "clustering"))?;
    let provenance = ProvenanceBlock::new(command.to_string(), seed);
    formats::write_json(&a.out, &DictionaryFile::from_core(&dict, Some(provenance)))
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(after_help = INGEST_HELP)]
struct CoverageArgs {
    /// Dictionary JSON to score.
    #[arg(long, value_name = "FILE")]
    dict: PathBuf,
    /// Evaluation data file (rotation formats only).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Where to write the coverage report JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Input format: csv-axisangle, csv-quat, or jsonl.
    #[arg(long)]
    format: Option<Format>,
    /// Joint column to evaluate.
    #[arg(long)]
    joint: Option<usize>,
    /// Geodesic threshold in degrees.
    #[arg(long)]
    threshold_deg: Option<f64>,
    /// Code-solver restarts per sample.
    #[arg(long)]
    restarts: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inner code-solver iteration cap.
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Inner code-solver relative-decrease tolerance.
    #[arg(long)]
    inner_tol: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct CoverageKnobs {
    format: Option<String>,
    joint: Option<usize>,
    threshold_deg: Option<f64>,
    restarts: Option<usize>,
    seed: Option<u64>,
    inner_steps: Option<usize>,
    inner_tol: Option<f64>,
}

fn cmd_coverage(a: CoverageArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: CoverageKnobs = file.knobs()?;
    let format = pick_format(a.format, kn.format.as_deref(), Format::CsvQuat)?;
    require(
        format.is_rotation(),
        "coverage scores rotations; use csv-axisangle, csv-quat, or jsonl",
    )?;
    let threshold_deg = pick(a.threshold_deg, kn.threshold_deg, 5.0);
    let restarts = pick(a.restarts, kn.restarts, 4);
    let seed = pick(a.seed, kn.seed, 0);
    require(
        threshold_deg.is_finite() && threshold_deg >= 0.0,
        "--threshold-deg must be a non-negative number",
    )?;
    require(restarts >= 1, "--restarts must be at least 1")?;
    let inner = inner_config(a.inner_steps.or(kn.inner_steps), a.inner_tol.or(kn.inner_tol))?;

    let dict = read_dictionary(&a.dict)?;
    let dataset = ingest::ingest(&a.input, format)?;
    let column = dataset.joint_column(pick(a.joint, kn.joint, 0))?;
    let report = coverage(&dict, &column, threshold_deg, &inner, restarts, seed)
        .map_err(|e| stage_core(e, "scoring coverage"))?;
    let mean_error_deg = report.per_sample_errors_deg.iter().sum::<f64>()
        / report.per_sample_errors_deg.len() as f64;
    let out = formats::CoverageFile {
        method: report.method,
        joint_label: dict.joint_label().to_string(),
        n_atoms: report.n_atoms,
        threshold_deg: report.threshold_deg,
        ratio: report.ratio,
        mean_error_deg,
        per_sample_errors_deg: report.per_sample_errors_deg,
        provenance: ProvenanceBlock::new(command.to_string(), seed),
    };
    formats::write_json(&a.out, &out)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Args)]
struct FitArgs {
    /// Problem JSON: keypoints, dictionary paths, optional skeleton path.
    /// Paths inside resolve relative to the problem file's directory.
    #[arg(long, value_name = "FILE")]
    problem: PathBuf,
    /// Where to write the fit report JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optimizer restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration cap per restart.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative-decrease convergence threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct FitKnobs {
    restarts: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

fn cmd_fit(a: FitArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: FitKnobs = file.knobs()?;
    let default = FitConfig::default();
    let config = FitConfig {
        restarts: pick(a.restarts, kn.restarts, default.restarts),
        max_iters: pick(a.max_iters, kn.max_iters, default.max_iters),
        seed: pick(a.seed, kn.seed, 0),
        tol: pick(a.tol, kn.tol, default.tol),
        ..default
    };
    require(config.restarts >= 1, "--restarts must be at least 1")?;
    require(config.max_iters >= 1, "--max-iters must be at least 1")?;
    require(
        config.tol.is_finite() && config.tol >= 0.0,
        "--tol must be a non-negative number",
    )?;

    let pf: ProblemFile = formats::read_json(&a.problem)?;
    let base = a
        .problem
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let skel = match &pf.skeleton {
        Some(rel) => skeleton::skeleton_from_file(&base.join(rel))?,
        None => skeleton::default_skeleton(),
    };
    let n_joints = skel.len();
    let dictionaries = match &pf.dictionaries {
        DictionariesRef::All { all } => {
            let dict = read_dictionary(&base.join(all))?;
            vec![dict; n_joints - 1]
        }
        DictionariesRef::PerJoint(paths) => {
            if paths.len() != n_joints - 1 {
                return Err(CliError::Data(format!(
                    "problem lists {} dictionaries for {} non-root joints",
                    paths.len(),
                    n_joints - 1
                )));
            }
            paths
                .iter()
                .map(|p| read_dictionary(&base.join(p)))
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let observed_3d = pf
        .keypoints_3d
        .clone()
        .unwrap_or_else(|| vec![None; n_joints]);
    let problem = FitProblem::new(
        skel,
        dictionaries,
        pf.keypoints_2d.clone(),
        observed_3d,
        pf.lambda_2d,
        pf.lambda_3d,
    )
    .map_err(|e| stage_core(e, "assembling the fit problem"))?;
    let result = fit(&problem, &config).map_err(|e| stage_core(e, "fitting"))?;

    let codes = result
        .logits
        .iter()
        .map(|z| sparsemax(z).map(|p| p.as_slice().to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| stage_core(e, "projecting codes"))?;
    let report = FitReport {
        loss_total: result.losses.total,
        loss_2d: result.losses.l2d,
        loss_3d: result.losses.l3d,
        iterations: result.iterations,
        winning_restart: result.winning_restart,
        camera_scale: result.camera.scale,
        camera_t: result.camera.t,
        camera_r6: result.camera.r6,
        rotations: result.pose.rotations().iter().map(formats::quat_to_array).collect(),
        codes,
    };
    let out = FitFile {
        skeleton_joints: n_joints,
        result: report,
        provenance: ProvenanceBlock::new(command.to_string(), config.seed),
    };
    formats::write_json(&a.out, &out)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SynthArgs {
    /// Generator: clusters, arcs, or planted-euclidean.
    #[arg(long)]
    generator: Generator,
    /// Output directory; receives data.csv and truth.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of samples.
    #[arg(long)]
    count: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Joint label recorded with rotation data.
    #[arg(long)]
    joint_label: Option<String>,
    /// clusters: number of cluster centers.
    #[arg(long)]
    k: Option<usize>,
    /// clusters: tangent-space Gaussian spread in degrees.
    #[arg(long)]
    spread_deg: Option<f64>,
    /// clusters: minimum pairwise center separation in degrees.
    #[arg(long)]
    separation_deg: Option<f64>,
    /// arcs: number of endpoint pairs.
    #[arg(long)]
    pairs: Option<usize>,
    /// arcs: geodesic arc length in degrees.
    #[arg(long)]
    arc_deg: Option<f64>,
    /// planted-euclidean: ambient dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// planted-euclidean: number of hidden atoms.
    #[arg(long)]
    atoms: Option<usize>,
    /// planted-euclidean: maximum support of each combination.
    #[arg(long)]
    support: Option<usize>,
    /// planted-euclidean: additive noise scale.
    #[arg(long)]
    noise: Option<f64>,
    /// planted-euclidean: fraction of samples that are pure atoms.
    #[arg(long)]
    pure_frac: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct SynthKnobs {
    count: Option<usize>,
    seed: Option<u64>,
    joint_label: Option<String>,
    k: Option<usize>,
    spread_deg: Option<f64>,
    separation_deg: Option<f64>,
    pairs: Option<usize>,
    arc_deg: Option<f64>,
    dim: Option<usize>,
    atoms: Option<usize>,
    support: Option<usize>,
    noise: Option<f64>,
    pure_frac: Option<f64>,
}

fn cmd_synth(a: SynthArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: SynthKnobs = file.knobs()?;
    let d = SynthParams::default();
    let params = SynthParams {
        count: pick(a.count, kn.count, d.count),
        seed: pick(a.seed, kn.seed, d.seed),
        joint_label: pick(a.joint_label, kn.joint_label, d.joint_label),
        k: pick(a.k, kn.k, d.k),
        spread_deg: pick(a.spread_deg, kn.spread_deg, d.spread_deg),
        separation_deg: pick(a.separation_deg, kn.separation_deg, d.separation_deg),
        pairs: pick(a.pairs, kn.pairs, d.pairs),
        arc_deg: pick(a.arc_deg, kn.arc_deg, d.arc_deg),
        dim: pick(a.dim, kn.dim, d.dim),
        atoms: pick(a.atoms, kn.atoms, d.atoms),
        support: pick(a.support, kn.support, d.support),
        noise: pick(a.noise, kn.noise, d.noise),
        pure_frac: pick(a.pure_frac, kn.pure_frac, d.pure_frac),
    };
    let output = synth::generate(a.generator, &params)?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| CliError::Data(format!("creating output directory {}: {e}", a.out.display())))?;
    let provenance = ProvenanceBlock::new(command.to_string(), params.seed);
    let data_path = a.out.join("data.csv");
    let (data_format, truth) = match output {
        SynthOutput::Poses { samples, truth } => {
            let dataset = PoseDataset {
                joint_names: vec![params.joint_label.clone()],
                frames: samples.into_iter().map(|q| vec![q]).collect(),
                format: Format::CsvQuat,
            };
            ingest::export(&dataset, &data_path, Format::CsvQuat)?;
            ("csv-quat", truth)
        }
        SynthOutput::Vectors { samples, truth } => {
            ingest::export_vectors(&samples, &data_path)?;
            ("csv-vec", truth)
        }
    };
    let out = TruthFile {
        data_file: "data.csv".into(),
        data_format: data_format.into(),
        truth,
        provenance,
    };
    formats::write_json(&a.out.join("truth.json"), &out)
}

// ---------------------------------------------------------------------------
// plot-hull
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(after_help = INGEST_HELP)]
struct PlotHullArgs {
    /// Dictionary JSON to plot (quaternion mode).
    #[arg(long, value_name = "FILE")]
    dict: PathBuf,
    /// Sample data file (rotation formats only).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output directory; receives hull.csv, hull.svg, hull.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Input format: csv-axisangle, csv-quat, or jsonl.
    #[arg(long)]
    format: Option<Format>,
    /// Joint column to read samples from.
    #[arg(long)]
    joint: Option<usize>,
    /// Sample index to highlight and reconstruct.
    #[arg(long)]
    index: Option<usize>,
    /// Code-solver restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inner code-solver iteration cap.
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Inner code-solver relative-decrease tolerance.
    #[arg(long)]
    inner_tol: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct PlotHullKnobs {
    format: Option<String>,
    joint: Option<usize>,
    index: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    inner_steps: Option<usize>,
    inner_tol: Option<f64>,
}

fn cmd_plot_hull(a: PlotHullArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: PlotHullKnobs = file.knobs()?;
    let format = pick_format(a.format, kn.format.as_deref(), Format::CsvQuat)?;
    require(
        format.is_rotation(),
        "plot-hull reads rotations; use csv-axisangle, csv-quat, or jsonl",
    )?;
    let restarts = pick(a.restarts, kn.restarts, 4);
    let seed = pick(a.seed, kn.seed, 0);
    require(restarts >= 1, "--restarts must be at least 1")?;
    let inner = inner_config(a.inner_steps.or(kn.inner_steps), a.inner_tol.or(kn.inner_tol))?;

    let dict = read_dictionary(&a.dict)?;
    let dataset = ingest::ingest(&a.input, format)?;
    let column = dataset.joint_column(pick(a.joint, kn.joint, 0))?;
    let index = pick(a.index, kn.index, 0);
    require(index < column.len(), "--index is past the end of the dataset")?;

    let code_fit = solve_code(&dict, &column[index].components(), &inner, restarts, seed)
        .map_err(|e| stage_core(e, "solving the highlighted sample's code"))?;
    let plot = hull::emit_hull_plot(&dict, &column, index, code_fit.code.as_slice())?;

    std::fs::create_dir_all(&a.out_dir).map_err(|e| {
        CliError::Data(format!(
            "creating output directory {}: {e}",
            a.out_dir.display()
        ))
    })?;
    std::fs::write(a.out_dir.join("hull.csv"), &plot.csv)
        .map_err(|e| CliError::Data(format!("writing hull.csv: {e}")))?;
    let svg_file = match &plot.svg {
        Some(svg) => {
            // A processing instruction carries the provenance: XML comments
            // cannot contain `--`, which every long flag does.
            let pi = format!(
                "<?kinedict command=\"{}\" seed=\"{}\" version=\"{}\"?>\n",
                command,
                seed,
                env!("CARGO_PKG_VERSION")
            );
            std::fs::write(a.out_dir.join("hull.svg"), format!("{pi}{svg}"))
                .map_err(|e| CliError::Data(format!("writing hull.svg: {e}")))?;
            Some("hull.svg".to_string())
        }
        None => None,
    };
    let meta = HullMetaFile {
        csv_file: "hull.csv".into(),
        svg_file,
        n_atoms: dict.n_atoms(),
        n_samples: column.len(),
        highlighted_sample: index,
        active_atoms: plot.active_atoms,
        provenance: ProvenanceBlock::new(command.to_string(), seed),
    };
    formats::write_json(&a.out_dir.join("hull.json"), &meta)
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(after_help = INGEST_HELP)]
struct InspectArgs {
    /// Data file to summarize (rotation formats only).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Input format: csv-axisangle, csv-quat, or jsonl.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct InspectKnobs {
    format: Option<String>,
}

fn cmd_inspect(a: InspectArgs, file: &FileConfig, command: &str) -> CliResult<()> {
    let kn: InspectKnobs = file.knobs()?;
    let format = pick_format(a.format, kn.format.as_deref(), Format::CsvQuat)?;
    require(
        format.is_rotation(),
        "inspect reads rotations; use csv-axisangle, csv-quat, or jsonl",
    )?;
    let dataset = ingest::ingest(&a.input, format)?;
    let per_joint = (0..dataset.n_joints())
        .map(|j| {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for frame in &dataset.frames {
                let angle = frame[j].to_axis_angle().angle().to_degrees();
                sum += angle;
                max = max.max(angle);
            }
            JointSummary {
                name: dataset.joint_names[j].clone(),
                mean_angle_deg: sum / dataset.n_frames() as f64,
                max_angle_deg: max,
            }
        })
        .collect();
    let doc = InspectFile {
        format: format.name().into(),
        frames: dataset.n_frames(),
        joints: dataset.n_joints(),
        joint_names: dataset.joint_names.clone(),
        per_joint,
        provenance: ProvenanceBlock::new(command.to_string(), 0),
    };
    print!("{}", formats::json_to_string(&doc)?);
    Ok(())
}
