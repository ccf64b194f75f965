//! Command implementations behind the `esd` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use esd_core::dataio::{
    build_problem, load_dataset, make_splits, read_samples, set_counts, write_samples, ClassProblem,
    Dataset, Normalization, SplitKind, BONN_SAMPLING_RATE_HZ,
};
use esd_core::nn::{gradient_check, GradCheckOptions, GradCheckReport, ModelDims, ModelParams};
use esd_core::noise::{corrupt_dataset, corrupt_samples, NoiseKind, NoiseSpec};
use esd_core::pipeline::{
    default_length_axis, evaluate, run_protocol, run_protocol_with, segment_length_sweep, snr_sweep, sweep_csv,
    synthetic_fixture, table_csv, write_json, write_text, FixtureSpec, MetricsReport, NoiseProtocol, ProtocolOptions,
    SnrSweepOptions, SweepTraining, TrainConfig, DEFAULT_SNR_AXIS_DB,
};
use esd_core::rng::{derive_seed, Gaussian};
use esd_core::{Checkpoint, Matrix};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;

const NOISE_SEED_STREAM: u64 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] esd_core::Error),

    #[error("config file {path}: {reason}")]
    ConfigFile { path: PathBuf, reason: String },

    #[error("{0}")]
    Usage(String),

    #[error("gradient check failed: max relative error {max_error:.3e} exceeds {tolerance:.1e}")]
    GradCheck { max_error: f64, tolerance: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use esd_core::Error as E;
        match self {
            CliError::ConfigFile { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::GradCheck { .. } => EXIT_FAILURE,
            CliError::Core(e) => match e {
                E::Config(_) | E::Argument(_) | E::Ingestion { .. } | E::Segmentation { .. } => EXIT_CONFIG,
                E::Io { .. }
                | E::Parse { .. }
                | E::SignalLength { .. }
                | E::DegenerateInput(_)
                | E::Json { .. }
                | E::Shape(_) => EXIT_DATA,
                E::Divergence { .. } => EXIT_DIVERGENCE,
                E::Consistency(_) => EXIT_FAILURE,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "esd", version, about = "EEG seizure detection with a peephole LSTM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a recording manifest and summarize it
    Ingest(IngestArgs),
    /// Corrupt one signal file with synthetic noise
    Synth(SynthArgs),
    /// Train and evaluate under a split protocol
    Train(TrainArgs),
    /// Evaluate a saved checkpoint
    Eval(EvalArgs),
    /// Sweep SNR or segment length
    Sweep(SweepArgs),
    /// Compare analytic gradients with finite differences
    Gradcheck(GradcheckArgs),
}

/// Flags shared by every subcommand. Flags beat config-file values, which
/// beat built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// A-E, ABCD-E, A-C-E or A-B-C-D-E
    #[arg(long, global = true)]
    pub problem: Option<String>,
    /// holdout:<frac>, kfold:<k> or loo
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// <kind>:<snr_db>, kind one of muscle, eyeblink, white
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub noise: Vec<String>,
    #[arg(long, global = true)]
    pub segment_length: Option<usize>,
    /// raw or zscore
    #[arg(long, global = true)]
    pub normalization: Option<String>,
    /// JSON manifest mapping set letters to directories
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Use the built-in synthetic two-class data instead of recordings
    #[arg(long, global = true)]
    pub synthetic: bool,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub lstm_units: Option<usize>,
    #[arg(long, global = true)]
    pub dense_units: Option<usize>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    /// matched or clean-train
    #[arg(long, global = true)]
    pub noise_protocol: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Signal file, one sample per line
    #[arg(long)]
    pub input: PathBuf,
    /// Output file name inside the output directory
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the added noise component under this name
    #[arg(long)]
    pub dump_noise: Option<PathBuf>,
    #[arg(long, default_value_t = BONN_SAMPLING_RATE_HZ)]
    pub sampling_rate: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write one checkpoint per fold
    #[arg(long)]
    pub checkpoint: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxisArg {
    Snr,
    Length,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub axis: Option<SweepAxisArg>,
    /// Comma-separated SNR values in dB
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_values: Vec<f64>,
    /// Comma-separated noise kinds
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<String>,
    /// Comma-separated segment lengths
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    /// Train one model per noise kind instead of one per point
    #[arg(long)]
    pub shared_model: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10)]
    pub models: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Coordinates sampled per model; all when absent
    #[arg(long)]
    pub coordinates: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub axis: Option<SweepAxisArg>,
    pub snr_values: Option<Vec<f64>>,
    pub kinds: Option<Vec<NoiseKind>>,
    pub lengths: Option<Vec<usize>>,
    pub shared_model: Option<bool>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Relative to the config file's directory.
    pub manifest: Option<PathBuf>,
    pub synthetic: Option<bool>,
    pub fixture: Option<FixtureSpec>,
    pub problem: Option<ClassProblem>,
    pub split: Option<SplitKind>,
    pub split_seed: Option<u64>,
    pub seed: Option<u64>,
    pub train: Option<TrainConfig>,
    /// `<kind>:<snr_db>` strings.
    pub noise: Option<Vec<String>>,
    pub noise_protocol: Option<NoiseProtocol>,
    /// Relative to the working directory.
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub sweep: Option<SweepFileConfig>,
}

impl RunConfigFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut cfg: RunConfigFile = serde_json::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if let Some(m) = cfg.manifest.as_mut() {
            if m.is_relative() {
                *m = path.parent().unwrap_or_else(|| Path::new("")).join(&*m);
            }
        }
        Ok(cfg)
    }
}

/// Where the signals come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Manifest(PathBuf),
    Synthetic(FixtureSpec),
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub data: Option<DataSource>,
    pub problem: ClassProblem,
    pub split: SplitKind,
    pub split_seed: u64,
    pub train: TrainConfig,
    pub noise: Vec<NoiseSpec>,
    pub noise_protocol: NoiseProtocol,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub sweep: SweepFileConfig,
}

pub const DEFAULT_OUT_DIR: &str = "results";

fn parse<T: std::str::FromStr<Err = esd_core::Error>>(s: &str) -> CliResult<T> {
    Ok(s.parse()?)
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => RunConfigFile::read(path)?,
            None => RunConfigFile::default(),
        };
        Self::merge(args, file)
    }

    /// Flags over file values over defaults.
    pub fn merge(args: &CommonArgs, file: RunConfigFile) -> CliResult<Self> {
        let seed = args.seed.or(file.seed);
        let mut train = file.train.unwrap_or_default();
        if let Some(s) = seed {
            train.seed = s;
        }
        if let Some(l) = args.segment_length {
            train.segment_length = l;
        }
        if let Some(n) = &args.normalization {
            train.normalization = parse::<Normalization>(n)?;
        }
        if let Some(e) = args.epochs {
            train.epochs = e;
        }
        if let Some(b) = args.batch_size {
            train.batch_size = b;
        }
        if let Some(b) = args.lstm_units {
            train.lstm_units = b;
        }
        if let Some(d) = args.dense_units {
            train.dense_units = d;
        }
        if let Some(lr) = args.learning_rate {
            train.optimizer = train.optimizer.with_learning_rate(lr);
        }

        let synthetic_spec = || {
            let mut spec = file.fixture.clone().unwrap_or_default();
            if let Some(s) = seed {
                spec.seed = s;
            }
            DataSource::Synthetic(spec)
        };
        let data = match (&args.manifest, args.synthetic) {
            (Some(_), true) => return Err(usage("--synthetic and --manifest are mutually exclusive")),
            (Some(m), false) => Some(DataSource::Manifest(m.clone())),
            (None, true) => Some(synthetic_spec()),
            (None, false) if file.synthetic == Some(true) => Some(synthetic_spec()),
            (None, false) => file.manifest.clone().map(DataSource::Manifest),
        };

        let problem = match &args.problem {
            Some(p) => parse(p)?,
            None => file.problem.unwrap_or_else(ClassProblem::two_class_a_e),
        };
        let split = match &args.split {
            Some(s) => parse(s)?,
            None => file.split.unwrap_or(SplitKind::Holdout { train_fraction: 0.8 }),
        };
        let split_seed = seed.or(file.split_seed).unwrap_or(train.seed);
        let noise_seed = derive_seed(train.seed, NOISE_SEED_STREAM);
        let noise_text = if args.noise.is_empty() {
            file.noise.unwrap_or_default()
        } else {
            args.noise.clone()
        };
        let noise = noise_text
            .iter()
            .map(|s| NoiseSpec::parse_with_seed(s, noise_seed))
            .collect::<esd_core::Result<Vec<_>>>()?;
        let noise_protocol = match &args.noise_protocol {
            Some(p) => parse(p)?,
            None => file.noise_protocol.unwrap_or_default(),
        };
        let jobs = args.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(usage("--jobs must be positive"));
        }
        Ok(Settings {
            data,
            problem,
            split,
            split_seed,
            train,
            noise,
            noise_protocol,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            jobs,
            sweep: file.sweep.unwrap_or_default(),
        })
    }

    /// Loads the configured data as a labelled dataset.
    pub fn dataset(&self) -> CliResult<Dataset> {
        match &self.data {
            Some(DataSource::Synthetic(spec)) => Ok(synthetic_fixture(spec)?),
            Some(DataSource::Manifest(path)) => {
                let signals = load_dataset(path)?;
                Ok(build_problem(&signals, &self.problem)?)
            }
            None => Err(usage("no data: pass --manifest <file> or --synthetic")),
        }
    }
}

/// Bounds rayon's global pool. Only the first call has an effect.
pub fn configure_threads(jobs: Option<usize>) {
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub signals: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub signal_length: usize,
    pub sampling_rate_hz: f64,
    pub total_signals: usize,
    pub sets: BTreeMap<String, SetSummary>,
}

pub fn cmd_ingest(args: &IngestArgs) -> CliResult<IngestSummary> {
    let settings = Settings::resolve(&args.common)?;
    configure_threads(settings.jobs);
    let path = match &settings.data {
        Some(DataSource::Manifest(p)) => p.clone(),
        _ => return Err(usage("ingest needs --manifest <file>")),
    };
    let signals = load_dataset(&path)?;
    let mut sets = BTreeMap::new();
    for (set, count) in set_counts(&signals) {
        let values = signals.iter().filter(|s| s.set_label == set).flat_map(|s| s.samples.iter().copied());
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        sets.insert(set.to_string(), SetSummary { signals: count, min, max });
    }
    let summary = IngestSummary {
        signal_length: signals.first().map_or(0, |s| s.len()),
        sampling_rate_hz: signals.first().map_or(BONN_SAMPLING_RATE_HZ, |s| s.sampling_rate_hz),
        total_signals: signals.len(),
        sets,
    };
    write_json(&settings.out.join("ingest_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthOutcome {
    pub output: PathBuf,
    pub noise_output: Option<PathBuf>,
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub measured_snr_db: f64,
    pub seed: u64,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<SynthOutcome> {
    let settings = Settings::resolve(&args.common)?;
    let spec = match settings.noise.as_slice() {
        [spec] => *spec,
        [] => return Err(usage("synth needs --noise <kind>:<snr_db>")),
        _ => return Err(usage("synth takes exactly one --noise")),
    };
    let clean = read_samples(&args.input)?;
    let mix = corrupt_samples(&clean, spec.kind, spec.snr_db, spec.seed, args.sampling_rate)?;
    let name = match &args.output {
        Some(n) => n.clone(),
        None => {
            let stem = args.input.file_stem().map_or("signal".into(), |s| s.to_string_lossy().into_owned());
            PathBuf::from(format!("{stem}_{}_{}dB.txt", spec.kind, spec.snr_db))
        }
    };
    let output = settings.out.join(name);
    make_parent(&output)?;
    write_samples(&output, &mix.noisy)?;
    let noise_output = match &args.dump_noise {
        Some(n) => {
            let p = settings.out.join(n);
            make_parent(&p)?;
            write_samples(&p, &mix.noise)?;
            Some(p)
        }
        None => None,
    };
    Ok(SynthOutcome {
        output,
        noise_output,
        kind: spec.kind,
        snr_db: spec.snr_db,
        measured_snr_db: esd_core::noise::snr_db(&clean, &mix.noise)?,
        seed: spec.seed,
    })
}

fn make_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| esd_core::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub folds: usize,
    pub files: Vec<PathBuf>,
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<TrainSummary> {
    let settings = Settings::resolve(&args.common)?;
    configure_threads(settings.jobs);
    let dataset = settings.dataset()?;
    let plan = make_splits(&dataset.labels, settings.split, settings.split_seed)?;
    let options = ProtocolOptions {
        keep_params: args.checkpoint,
    };
    let result = match settings.noise.as_slice() {
        [] => run_protocol(&dataset, &settings.train, &plan, options)?,
        [spec] => {
            let noisy = corrupt_dataset(&dataset, spec)?;
            match settings.noise_protocol {
                NoiseProtocol::Matched => {
                    // the augmentation copy equals `noisy`: same spec, same seeds
                    let mut config = settings.train.clone();
                    config.augmentation.push(*spec);
                    run_protocol_with(&dataset, &noisy, &config, &plan, options)?
                }
                NoiseProtocol::CleanTrain => run_protocol_with(&dataset, &noisy, &settings.train, &plan, options)?,
            }
        }
        _ => return Err(usage("train takes at most one --noise; use sweep for several")),
    };

    let dir = &settings.out;
    let mut files = vec![dir.join("train_result.json"), dir.join("train_table.csv")];
    write_json(&files[0], &RunRecord { settings: &settings, result: &result })?;
    write_text(&files[1], &table_csv(&[result.table_row()]))?;
    if args.checkpoint {
        for fold in &result.folds {
            if let Some(params) = &fold.params {
                let mut config = result.config.clone();
                config.classes = Some(result.class_names.len());
                let c = Checkpoint::new(config, result.class_names.clone(), result.positive_class, params.clone());
                let path = dir.join("checkpoints").join(format!("fold_{:03}.json", fold.fold));
                c.write(&path)?;
                files.push(path);
            }
        }
    }
    Ok(TrainSummary {
        accuracy: result.aggregate.accuracy,
        sensitivity: result.aggregate.sensitivity,
        specificity: result.aggregate.specificity,
        folds: result.folds.len(),
        files,
    })
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    settings: &'a Settings,
    result: &'a T,
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<MetricsReport> {
    let settings = Settings::resolve(&args.common)?;
    configure_threads(settings.jobs);
    let checkpoint = Checkpoint::read(&args.checkpoint)?;
    let mut dataset = settings.dataset()?;
    if dataset.class_names.len() != checkpoint.class_names.len() {
        return Err(usage(format!(
            "checkpoint classifies {} classes, data has {}",
            checkpoint.class_names.len(),
            dataset.class_names.len()
        )));
    }
    if let [spec] = settings.noise.as_slice() {
        dataset = corrupt_dataset(&dataset, spec)?;
    } else if settings.noise.len() > 1 {
        return Err(usage("eval takes at most one --noise"));
    }
    let examples = esd_core::pipeline::prepare(&dataset, &checkpoint.config)?;
    let all: Vec<usize> = (0..examples.len()).collect();
    let report = evaluate(&checkpoint.params, &examples, &all, checkpoint.positive_class, None)?;
    write_json(&settings.out.join("eval_metrics.json"), &report)?;
    Ok(report)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<Vec<PathBuf>> {
    let settings = Settings::resolve(&args.common)?;
    configure_threads(settings.jobs);
    let dataset = settings.dataset()?;
    let plan = make_splits(&dataset.labels, settings.split, settings.split_seed)?;
    let file = &settings.sweep;
    let axis = args.axis.or(file.axis).unwrap_or(SweepAxisArg::Snr);
    let result = match axis {
        SweepAxisArg::Snr => {
            let snr_values = if !args.snr_values.is_empty() {
                args.snr_values.clone()
            } else {
                file.snr_values.clone().unwrap_or_else(|| DEFAULT_SNR_AXIS_DB.to_vec())
            };
            let kinds = if !args.kinds.is_empty() {
                args.kinds.iter().map(|k| parse(k)).collect::<CliResult<Vec<NoiseKind>>>()?
            } else {
                file.kinds.clone().unwrap_or_else(|| NoiseKind::ALL.to_vec())
            };
            let training = if args.shared_model || file.shared_model.unwrap_or(false) {
                SweepTraining::Shared
            } else {
                SweepTraining::PerPoint
            };
            let options = SnrSweepOptions {
                protocol: settings.noise_protocol,
                training,
            };
            snr_sweep(&dataset, &settings.train, &plan, &kinds, &snr_values, options)?
        }
        SweepAxisArg::Length => {
            let lengths = if !args.lengths.is_empty() {
                args.lengths.clone()
            } else {
                file.lengths
                    .clone()
                    .unwrap_or_else(|| default_length_axis(dataset.signals.first().map_or(0, |s| s.len())))
            };
            segment_length_sweep(&dataset, &settings.train, &plan, &lengths)?
        }
    };
    let json = settings.out.join("sweep_result.json");
    let csv = settings.out.join("sweep.csv");
    write_json(&json, &RunRecord { settings: &settings, result: &result })?;
    write_text(&csv, &sweep_csv(&result))?;
    info!("sweep wrote {} points", result.points.len());
    Ok(vec![json, csv])
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSummary {
    pub models: Vec<GradCheckReport>,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks tiny random models: 4 LSTM units, L = 2, 3 dense units, 5
/// timesteps, cycling through 2, 3 and 5 classes.
pub fn cmd_gradcheck(args: &GradcheckArgs) -> CliResult<GradcheckSummary> {
    let settings = Settings::resolve(&args.common)?;
    configure_threads(settings.jobs);
    if args.models == 0 {
        return Err(usage("--models must be positive"));
    }
    let input_size = args.common.segment_length.unwrap_or(2);
    let mut reports = Vec::with_capacity(args.models);
    for m in 0..args.models {
        let seed = derive_seed(settings.train.seed, m as u64);
        let classes = [2, 3, 5][m % 3];
        let dims = ModelDims {
            input_size,
            lstm_units: args.common.lstm_units.unwrap_or(4),
            dense_units: args.common.dense_units.unwrap_or(3),
            classes,
        };
        let mut g = Gaussian::new(seed);
        let mut params = ModelParams::init(dims, seed);
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.5 * g.sample());
        }
        let segments = Matrix::from_vec(5, input_size, g.fill(5 * input_size))?;
        let example = esd_core::dataio::SegmentedExample {
            segments,
            label: m % classes,
        };
        let options = GradCheckOptions {
            step: args.step,
            tolerance: args.tolerance,
            max_coordinates: args.coordinates,
            seed,
        };
        reports.push(gradient_check(&params, &example, &options)?);
    }
    let max_error = reports.iter().map(|r| r.max_error).fold(0.0, f64::max);
    let summary = GradcheckSummary {
        passed: reports.iter().all(|r| r.passed),
        models: reports,
        max_error,
        tolerance: args.tolerance,
    };
    write_json(&settings.out.join("gradcheck.json"), &summary)?;
    Ok(summary)
}

/// Parses and runs one invocation; returns the text to print.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Ingest(a) => {
            let s = cmd_ingest(a)?;
            let mut out = format!(
                "{} signals, N = {}, fs = {} Hz\n",
                s.total_signals, s.signal_length, s.sampling_rate_hz
            );
            for (set, v) in &s.sets {
                out.push_str(&format!("set {set}: {} signals, range [{}, {}]\n", v.signals, v.min, v.max));
            }
            Ok(out)
        }
        Command::Synth(a) => {
            let s = cmd_synth(a)?;
            Ok(format!(
                "wrote {} ({} at {} dB, measured {:.6} dB)\n",
                s.output.display(),
                s.kind,
                s.snr_db,
                (s.measured_snr_db * 1e6).round() / 1e6 + 0.0
            ))
        }
        Command::Train(a) => {
            let s = cmd_train(a)?;
            let pct = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{:.2}", 100.0 * x));
            Ok(format!(
                "{} fold(s): Sens {} Spec {} Acc {:.2}\n",
                s.folds,
                pct(s.sensitivity),
                pct(s.specificity),
                100.0 * s.accuracy
            ))
        }
        Command::Eval(a) => {
            let r = cmd_eval(a)?;
            Ok(format!("{} examples: Acc {:.2}\n", r.confusion.total(), 100.0 * r.accuracy))
        }
        Command::Sweep(a) => {
            let files = cmd_sweep(a)?;
            Ok(files.iter().map(|f| format!("wrote {}\n", f.display())).collect())
        }
        Command::Gradcheck(a) => {
            let s = cmd_gradcheck(a)?;
            let line = format!(
                "{} models, max relative error {:.3e} (tolerance {:.1e})\n",
                s.models.len(),
                s.max_error,
                s.tolerance
            );
            if s.passed {
                Ok(line)
            } else {
                Err(CliError::GradCheck {
                    max_error: s.max_error,
                    tolerance: s.tolerance,
                })
            }
        }
    }
}
