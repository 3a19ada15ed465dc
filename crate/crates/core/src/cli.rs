//! Command-line front end: `predict`, `fit`, `evaluate` and `gen`.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 validation error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{BaselineCoefficients, BaselineKind, BaselineModel, ExternalPredictions};
use crate::binning::BinningConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_model, run_split_protocol, Compensation, EvaluationReport, SessionModel,
    SplitProtocol, TestPool,
};
use crate::features::{FeatureVector, N_FEATURES};
use crate::fitting::{
    extract_all, fit_with, FitOptions, FittedHistogram, FixedWeights, LabeledDataset,
};
use crate::model::predict_features;
use crate::session::{parse_sessions, sessions_to_json, SessionTrace};
use crate::synth::{generate_labeled_dataset, generate_sessions, GeneratorConfig, LabelOptions};
use crate::weights::{ModelWeights, REFERENCE_WEIGHTS_NAME};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Parse { .. } | Error::Csv(_) | Error::Io { .. } => EXIT_USAGE,
        Error::Validation { .. } | Error::Domain { .. } => EXIT_VALIDATION,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qoe",
    version,
    about = "Histogram-based QoE model for adaptive streaming sessions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict the MOS of every session in a trace or dataset file.
    Predict(PredictArgs),
    /// Fit the 22 model weights to a labeled dataset.
    Fit(FitArgs),
    /// Score a model on a labeled dataset, optionally with repeated splits.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Weights file, or `reference` for the bundled reference weights.
    #[arg(long, default_value = REFERENCE_WEIGHTS_NAME)]
    pub weights: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Include the 22 feature frequencies of each session.
    #[arg(long)]
    pub features: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the fitted weights (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Where to write the fit report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Constrain all weights to be non-negative.
    #[arg(long)]
    pub nonnegative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    MultiFactor,
    SingleFactor,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompensationFit {
    Training,
    Test,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Fixed histogram weights (file or `reference`).
    #[arg(long, conflicts_with_all = ["fit", "baseline", "external"])]
    pub weights: Option<String>,
    /// Refit the histogram weights on each training set.
    #[arg(long, conflicts_with_all = ["baseline", "external"])]
    pub fit: bool,
    #[arg(long)]
    pub nonnegative: bool,
    /// Statistic-based comparison model: guo, vriendt or liu.
    #[arg(long, conflicts_with = "external")]
    pub baseline: Option<String>,
    /// Baseline coefficients JSON; without it coefficients are fitted.
    #[arg(long, requires = "baseline")]
    pub coefficients: Option<PathBuf>,
    /// Precomputed predictions CSV (session-id, predicted-mos).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Number of random train/test repetitions; 0 scores the whole dataset.
    #[arg(long, default_value_t = 0)]
    pub splits: usize,
    #[arg(long, default_value_t = 90)]
    pub test_size: usize,
    #[arg(long, value_enum, default_value = "multi-factor")]
    pub test_pool: PoolArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_compensation: bool,
    /// Portion the compensation map is fitted on during split runs.
    #[arg(long, value_enum, default_value = "training")]
    pub compensation_on: CompensationFit,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator config JSON; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub count: usize,
    /// Label sessions with these weights (file or `reference`).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Redraw sessions whose label would sit on the 1 MOS floor.
    #[arg(long)]
    pub reject_clamped: bool,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write `contents` to `path` via a temporary file in the same directory,
/// or to stdout when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn check_output_dir(path: Option<&Path>) -> Result<()> {
    if let Some(dir) = path.and_then(Path::parent) {
        if !dir.as_os_str().is_empty() && !dir.is_dir() {
            return Err(Error::Usage(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
    }
    Ok(())
}

pub fn load_weights(spec: &str) -> Result<ModelWeights> {
    if spec == REFERENCE_WEIGHTS_NAME {
        return Ok(ModelWeights::reference());
    }
    ModelWeights::from_json(&read(Path::new(spec))?)
}

fn load_sessions(path: &Path) -> Result<Vec<SessionTrace>> {
    let sessions = parse_sessions(&read(path)?)?;
    if sessions.is_empty() {
        return Err(Error::Usage(format!(
            "{} contains no sessions",
            path.display()
        )));
    }
    Ok(sessions)
}

fn load_labeled(path: &Path) -> Result<LabeledDataset> {
    LabeledDataset::new(load_sessions(path)?)
}

fn feature_header() -> Vec<String> {
    let mut cols: Vec<String> = (1..=5).map(|n| format!("fq{n}")).collect();
    cols.extend(
        crate::binning::DownSwitchBin::ALL
            .iter()
            .map(|b| format!("fv_{}_{}", b.start(), b.amplitude())),
    );
    cols.push("fum".into());
    cols.extend((1..=6).map(|l| format!("fi{l}")));
    debug_assert_eq!(cols.len(), N_FEATURES);
    cols
}

fn feature_values(fv: &FeatureVector) -> Vec<f64> {
    let mut v = fv.f_quality.to_vec();
    v.extend_from_slice(&fv.f_downswitch);
    v.push(fv.f_um);
    v.extend_from_slice(&fv.f_interruption);
    v
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    check_output_dir(args.output.as_deref())?;
    let weights = load_weights(&args.weights)?;
    let sessions = load_sessions(&args.input)?;
    let features = extract_all(&sessions, &BinningConfig::default())?;
    let predictions: Vec<f64> = features
        .iter()
        .map(|f| predict_features(f, &weights))
        .collect();

    let out = match args.format {
        Format::Csv => {
            let mut header = vec!["session".to_string(), "prediction".to_string()];
            if args.features {
                header.extend(feature_header());
            }
            let mut out = header.join(",");
            out.push('\n');
            for (k, (p, fv)) in predictions.iter().zip(&features).enumerate() {
                out.push_str(&format!("{k},{p:.6}"));
                if args.features {
                    for v in feature_values(fv) {
                        out.push_str(&format!(",{v:.6}"));
                    }
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = predictions
                .iter()
                .zip(&features)
                .zip(&sessions)
                .enumerate()
                .map(|(k, ((p, fv), s))| {
                    let mut row = serde_json::json!({ "session": k, "prediction": p });
                    if let Some(id) = s.id() {
                        row["id"] = id.into();
                    }
                    if args.features {
                        row["features"] = serde_json::to_value(fv).expect("features serialize");
                    }
                    row
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
    };
    emit(args.output.as_deref(), &out)
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    check_output_dir(args.output.as_deref())?;
    check_output_dir(args.report.as_deref())?;
    let dataset = load_labeled(&args.input)?;
    let options = FitOptions {
        nonnegative: args.nonnegative,
    };
    let report = fit_with(&dataset, &BinningConfig::default(), options)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(args.output.as_deref(), &(report.weights.to_json() + "\n"))?;
    if let Some(path) = &args.report {
        emit(Some(path), &(report.to_json() + "\n"))?;
    }
    Ok(())
}

fn build_model(args: &EvaluateArgs, sessions: &[SessionTrace]) -> Result<Box<dyn SessionModel>> {
    if let Some(name) = &args.baseline {
        let kind: BaselineKind = name.parse()?;
        return Ok(Box::new(match &args.coefficients {
            Some(path) => {
                let c = BaselineCoefficients::from_json(&read(path)?)?;
                if c.model != kind {
                    return Err(Error::Usage(format!(
                        "coefficients file is for {} but --baseline is {kind}",
                        c.model
                    )));
                }
                BaselineModel::with_coefficients(c)
            }
            None => BaselineModel::fitted(kind),
        }));
    }
    if let Some(path) = &args.external {
        let ext = ExternalPredictions::from_csv(path.display().to_string(), &read(path)?)?;
        if let Some(s) = sessions
            .iter()
            .find(|s| !ext.by_id.contains_key(s.id().unwrap_or_default()))
        {
            return Err(Error::Usage(format!(
                "{} has no prediction for session {:?}",
                path.display(),
                s.id().unwrap_or_default()
            )));
        }
        return Ok(Box::new(ext));
    }
    if args.fit {
        return Ok(Box::new(FittedHistogram {
            config: BinningConfig::default(),
            options: FitOptions {
                nonnegative: args.nonnegative,
            },
        }));
    }
    let weights = load_weights(args.weights.as_deref().unwrap_or(REFERENCE_WEIGHTS_NAME))?;
    Ok(Box::new(FixedWeights::new(weights)))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluationReport> {
    check_output_dir(args.output.as_deref())?;
    let mut sessions = load_sessions(&args.input)?;
    // external predictions are matched by id; fall back to the record index
    for (k, s) in sessions.iter_mut().enumerate() {
        if s.id().is_none() {
            *s = s.clone().with_id(k.to_string());
        }
    }
    let model = build_model(args, &sessions)?;
    let dataset = LabeledDataset::new(sessions)?;

    let report = if args.splits > 0 {
        let protocol = SplitProtocol {
            n_repetitions: args.splits,
            test_pool: match args.test_pool {
                PoolArg::MultiFactor => TestPool::MultiFactor,
                PoolArg::SingleFactor => TestPool::SingleFactor,
                PoolArg::All => TestPool::All,
            },
            test_size: args.test_size,
            rng_seed: args.seed,
        };
        let compensation = match (args.no_compensation, args.compensation_on) {
            (true, _) => Compensation::None,
            (false, CompensationFit::Training) => Compensation::Training,
            (false, CompensationFit::Test) => Compensation::Test,
        };
        run_split_protocol(&dataset, &protocol, model.as_ref(), compensation)?
    } else {
        evaluate_model(&dataset, model.as_ref(), !args.no_compensation)?
    };

    let out = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.per_split_csv(),
    };
    emit(args.output.as_deref(), &out)?;
    Ok(report)
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    check_output_dir(args.output.as_deref())?;
    let mut config = match &args.config {
        Some(path) => GeneratorConfig::from_json(&read(path)?)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    if args.count == 0 {
        return Err(Error::Usage("--count must be positive".into()));
    }
    let sessions = match &args.weights {
        Some(spec) => {
            let weights = load_weights(spec)?;
            let options = LabelOptions {
                noise_sd: args.noise,
                reject_clamped: args.reject_clamped,
                ..Default::default()
            };
            generate_labeled_dataset(&config, args.count, &weights, &options)?.into_sessions()
        }
        None => generate_sessions(&config, args.count)?,
    };
    emit(
        args.output.as_deref(),
        &(sessions_to_json(&sessions) + "\n"),
    )
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Predict(a) => cmd_predict(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a).map(|_| ()),
        Command::Gen(a) => cmd_gen(a),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
