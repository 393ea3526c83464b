//! `expsig`: generate synthetic series, compute signatures, fit and evaluate
//! expected-signature, AR and GP models.
//!
//! Exit status is 0 on success, 1 for usage and input errors and 2 when a
//! numerical procedure fails.

mod config;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use expsig::baselines::ar::ArModel;
use expsig::baselines::gp::{gp_fit, GpFitOptions, GpHyperparams, GpModel};
use expsig::datagen::{generate, DiffusionConfig, GeneratorConfig, GeneratorKind, LabeledSeries};
use expsig::experiment::{
    run_crossval, run_diffusion_study, write_diffusion_csv, CrossValConfig, DiffusionStudyConfig,
    ModelConfig,
};
use expsig::linalg::Matrix;
use expsig::{
    moments_from_mu, reconstruct_time_series, signature_with_embedding, Embedding, EsSpec, Error,
    FittedEsModel, MeanPrediction, RebasePolicy, TargetMode, TimeSeries, TruncatedTensor,
};

#[derive(Parser, Debug)]
#[command(name = "expsig", version, about = "Expected-signature regression for time series")]
#[command(args_override_self = true)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// JSON file whose keys mirror the command-line flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a labeled series (columns t, r, m_true).
    Generate(GenerateArgs),
    /// Truncated signature of a series as JSON.
    Sig(SigArgs),
    /// Rebuild a series from a signature and its observation times.
    Reconstruct(ReconstructArgs),
    /// Fit a model on a series and save it as JSON.
    Fit(FitArgs),
    /// One-step conditional means from a saved model.
    Predict(PredictArgs),
    /// Repeated random sub-sampling comparison of models.
    Crossval(CrossvalArgs),
    /// Signature regression of a diffusion's terminal value on its driver.
    Diffusion(DiffusionArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Ar,
    PolyAr,
    MixPolyAr,
    Arch,
}

#[derive(Args, Debug, Clone)]
struct GeneratorArgs {
    #[arg(long, value_enum, default_value_t = Kind::Ar)]
    kind: Kind,
    /// Number of observations.
    #[arg(long, default_value_t = 4000)]
    length: usize,
    #[arg(long, default_value_t = 0.7)]
    sigma: f64,
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    /// AR coefficients Φ_0,Φ_1,…
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.6,0.15,-0.1")]
    phi: Vec<f64>,
    /// ARCH mean coefficients β_0,β_1,…
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.5")]
    beta: Vec<f64>,
    /// ARCH variance coefficients α_0,α_1,…
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5")]
    alpha: Vec<f64>,
}

impl GeneratorArgs {
    fn config(&self, seed: u64) -> GeneratorConfig {
        let kind = match self.kind {
            Kind::Ar => GeneratorKind::Ar { phi: self.phi.clone() },
            Kind::PolyAr => GeneratorKind::PolyAr,
            Kind::MixPolyAr => GeneratorKind::MixPolyAr,
            Kind::Arch => GeneratorKind::Arch {
                beta: self.beta.clone(),
                alpha: self.alpha.clone(),
            },
        };
        GeneratorConfig {
            sigma: self.sigma,
            burn_in: self.burn_in,
            ..GeneratorConfig::new(kind, self.length, seed)
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EmbeddingArg {
    TimeJoined,
    Linear,
}

impl From<EmbeddingArg> for Embedding {
    fn from(e: EmbeddingArg) -> Self {
        match e {
            EmbeddingArg::TimeJoined => Embedding::TimeJoined,
            EmbeddingArg::Linear => Embedding::Linear,
        }
    }
}

#[derive(Args, Debug)]
struct SigArgs {
    /// Series CSV with columns t, r.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    degree: usize,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::TimeJoined)]
    embedding: EmbeddingArg,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Signature JSON as written by `sig`.
    #[arg(long)]
    signature: PathBuf,
    /// Observation times t_0,t_1,…
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Es,
    Ar,
    Gp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Reduced,
    Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RebaseArg {
    Shift,
    Absolute,
}

#[derive(Args, Debug, Clone)]
struct EsArgs {
    /// ES past window holds p + 1 points.
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Reduced)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::TimeJoined)]
    embedding: EmbeddingArg,
    #[arg(long, value_enum, default_value_t = RebaseArg::Shift)]
    rebase: RebaseArg,
}

impl EsArgs {
    fn spec(&self) -> EsSpec {
        EsSpec {
            p: self.p,
            q: self.q,
            n: self.n,
            m: self.m,
            embedding: self.embedding.into(),
            rebase: match self.rebase {
                RebaseArg::Shift => RebasePolicy::Shift,
                RebaseArg::Absolute => RebasePolicy::Absolute,
            },
            mode: match self.mode {
                ModeArg::Reduced => TargetMode::Reduced,
                ModeArg::Tensor => TargetMode::Tensor,
            },
            ridge: self.ridge,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct GpArgs {
    /// Lag order of the AR and GP models.
    #[arg(long, default_value_t = 3)]
    lags: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Rows used for hyperparameter search.
    #[arg(long, default_value_t = 400)]
    max_opt_rows: usize,
    /// Fit a constant prior mean instead of zero.
    #[arg(long)]
    constant_mean: bool,
}

impl GpArgs {
    fn options(&self, seed: u64) -> GpFitOptions {
        GpFitOptions {
            restarts: self.restarts,
            max_opt_rows: self.max_opt_rows,
            constant_mean: self.constant_mean,
            seed,
            ..GpFitOptions::default()
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Series CSV with columns t, r.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Es)]
    model: ModelKind,
    #[command(flatten)]
    es: EsArgs,
    #[command(flatten)]
    gp: GpArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Series CSV with columns t, r.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct CrossvalArgs {
    /// Labeled series CSV (t, r, m_true); simulated when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Models to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ar,es,gp")]
    models: Vec<ModelKind>,
    #[arg(long, default_value_t = 20)]
    folds: usize,
    /// Fraction of windows held out per repetition.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[command(flatten)]
    es: EsArgs,
    #[command(flatten)]
    gp: GpArgs,
}

#[derive(Args, Debug)]
struct DiffusionArgs {
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0.25)]
    horizon: f64,
    /// Grid intervals on [0, horizon].
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    degrees: Vec<usize>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    b: f64,
}

/// A fitted model as persisted by `fit`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
enum SavedModel {
    Es(FittedEsModel),
    Ar(ArModel),
    Gp {
        lags: usize,
        hyper: GpHyperparams,
        prior_mean: f64,
        inputs: Matrix,
        outputs: Vec<f64>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Where outputs go: files in `--out`, or stdout.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir })
    }

    /// Writes `name` in the output directory, or to stdout.
    fn emit(&self, name: &str, write: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
        match &self.dir {
            Some(d) => {
                let mut f = BufWriter::new(File::create(d.join(name))?);
                write(&mut f)?;
                f.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock)?;
                lock.flush()?;
            }
        }
        Ok(())
    }

    /// Side outputs only land in the output directory.
    fn emit_file(&self, name: &str, write: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
        if self.dir.is_some() {
            self.emit(name, write)
        } else {
            Ok(())
        }
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn read_series(path: &Path) -> CliResult<TimeSeries> {
    Ok(TimeSeries::read_csv(open(path)?)?)
}

fn run(cli: Cli) -> CliResult<()> {
    let sink = Sink::new(cli.out.clone())?;
    match cli.command {
        Command::Generate(args) => {
            let data = generate(&args.generator.config(cli.seed))?;
            for w in &data.warnings {
                eprintln!("warning: {w}");
            }
            sink.emit("series.csv", |w| Ok(data.write_csv(w)?))
        }
        Command::Sig(args) => {
            let ts = read_series(&args.input)?;
            let sig = signature_with_embedding(&ts, args.degree, args.embedding.into());
            sink.emit("signature.json", |w| {
                serde_json::to_writer_pretty(&mut *w, &sig)?;
                writeln!(w)?;
                Ok(())
            })
        }
        Command::Reconstruct(args) => {
            let sig: TruncatedTensor = serde_json::from_reader(open(&args.signature)?)?;
            let ts = reconstruct_time_series(&sig, &args.times)?;
            sink.emit("series.csv", |w| Ok(ts.write_csv(w)?))
        }
        Command::Fit(args) => {
            let ts = read_series(&args.input)?;
            let saved = match args.model {
                ModelKind::Es => {
                    let model = FittedEsModel::fit(&ts, &args.es.spec())?;
                    eprintln!(
                        "ES fit: rows {}, rank {}, R² {:.6}, adjusted R² {:.6}",
                        model.diagnostics.rows,
                        model.diagnostics.rank,
                        model.r2(),
                        model.adj_r2()
                    );
                    SavedModel::Es(model)
                }
                ModelKind::Ar => {
                    let model = ArModel::fit(&ts, args.gp.lags)?;
                    eprintln!("AR fit: R² {:.6}, adjusted R² {:.6}", model.stats.r2, model.stats.adj_r2);
                    SavedModel::Ar(model)
                }
                ModelKind::Gp => {
                    let (x, y) = lag_rows(&ts, args.gp.lags)?;
                    let model = gp_fit(&x, &y, &args.gp.options(cli.seed))?;
                    eprintln!(
                        "GP fit: h {:.6}, λ {:.6}, σ² {:.6}",
                        model.hyper.h, model.hyper.lambda, model.hyper.noise_var
                    );
                    SavedModel::Gp {
                        lags: args.gp.lags,
                        hyper: model.hyper,
                        prior_mean: model.prior_mean,
                        inputs: x,
                        outputs: y,
                    }
                }
            };
            sink.emit("model.json", |w| {
                serde_json::to_writer_pretty(&mut *w, &saved)?;
                writeln!(w)?;
                Ok(())
            })
        }
        Command::Predict(args) => {
            let saved: SavedModel = serde_json::from_reader(open(&args.model)?)?;
            let ts = read_series(&args.input)?;
            let rows = predict(&saved, &ts)?;
            sink.emit("predictions.csv", |w| {
                writeln!(w, "k,t,mean,variance")?;
                for (k, mean, var) in rows {
                    let var = var.map(|v| v.to_string()).unwrap_or_default();
                    writeln!(w, "{k},{},{mean},{var}", ts.times()[k])?;
                }
                Ok(())
            })
        }
        Command::Crossval(args) => {
            let data = match &args.input {
                Some(path) => LabeledSeries::read_csv(open(path)?)?,
                None => {
                    let d = generate(&args.generator.config(cli.seed))?;
                    for w in &d.warnings {
                        eprintln!("warning: {w}");
                    }
                    d
                }
            };
            let models: Vec<ModelConfig> = args
                .models
                .iter()
                .map(|m| match m {
                    ModelKind::Es => ModelConfig::Es(args.es.spec()),
                    ModelKind::Ar => ModelConfig::Ar { p: args.gp.lags },
                    ModelKind::Gp => ModelConfig::Gp {
                        p: args.gp.lags,
                        options: args.gp.options(cli.seed),
                    },
                })
                .collect();
            let cv = CrossValConfig {
                folds: args.folds,
                holdout: args.holdout,
                seed: cli.seed,
                in_sample: true,
            };
            let report = run_crossval(&data, &models, &cv)?;
            match cli.format {
                Format::Csv => sink.emit("metrics.csv", |w| Ok(report.write_metrics_csv(w)?))?,
                Format::Text => sink.emit("report.txt", |w| Ok(w.write_all(report.to_text().as_bytes())?))?,
            }
            sink.emit_file("folds.csv", |w| Ok(report.write_folds_csv(w)?))?;
            sink.emit_file("timing.csv", |w| Ok(report.write_timing_csv(w)?))?;
            if cli.format == Format::Csv {
                sink.emit_file("report.txt", |w| Ok(w.write_all(report.to_text().as_bytes())?))?;
            }
            if let Some(r) = report.es_gp_time_ratio() {
                eprintln!("ES/GP time ratio: {r:.3e}");
            }
            Ok(())
        }
        Command::Diffusion(args) => {
            let cfg = DiffusionStudyConfig {
                diffusion: DiffusionConfig {
                    samples: args.samples,
                    horizon: args.horizon,
                    steps: args.steps,
                    a: args.a,
                    b: args.b,
                    seed: cli.seed,
                    ..DiffusionConfig::default()
                },
                degrees: args.degrees,
                train_fraction: args.train_fraction,
            };
            let (rows, resampled) = run_diffusion_study(&cfg)?;
            if resampled > 0 {
                eprintln!("{resampled} exploding paths were redrawn");
            }
            match cli.format {
                Format::Csv => sink.emit("diffusion.csv", |w| Ok(write_diffusion_csv(&rows, w)?)),
                Format::Text => sink.emit("diffusion.txt", |w| {
                    writeln!(w, "{:>6}  {:>12}  {:>12}", "degree", "R2 train", "R2 backtest")?;
                    for r in &rows {
                        writeln!(w, "{:>6}  {:>12.6}  {:>12.6}", r.degree, r.r2_train, r.r2_backtest)?;
                    }
                    Ok(())
                }),
            }
        }
    }
}

/// Lag rows `[r_k, …, r_{k-p+1}]` and next values `r_{k+1}`.
fn lag_rows(ts: &TimeSeries, p: usize) -> CliResult<(Matrix, Vec<f64>)> {
    if p == 0 || ts.len() < p + 2 {
        return Err(CliError::Lib(Error::SeriesTooShort {
            needed: p + 2,
            got: ts.len(),
        }));
    }
    let r = ts.values();
    let idx: Vec<usize> = (p - 1..r.len() - 1).collect();
    let x = expsig::baselines::ar::lag_matrix(r, p, &idx)?;
    Ok((x, idx.iter().map(|&k| r[k + 1]).collect()))
}

/// `(k, mean of r_{k+1}, variance if the model gives one)` for every window.
fn predict(saved: &SavedModel, ts: &TimeSeries) -> CliResult<Vec<(usize, f64, Option<f64>)>> {
    let r = ts.values();
    match saved {
        SavedModel::Es(model) => model
            .predict_series(ts)?
            .into_iter()
            .map(|(k, pred)| match pred {
                MeanPrediction::Scalar(m) => Ok((k, m, None)),
                MeanPrediction::Tensor(mu) => {
                    if model.spec.q == 1 && mu.degree() >= 2 {
                        let (m, v) = moments_from_mu(&mu)?;
                        Ok((k, m, Some(v)))
                    } else {
                        Ok((k, mu.coeff(&[2])?, None))
                    }
                }
            })
            .collect(),
        SavedModel::Ar(model) => {
            let p = model.order;
            Ok((p.saturating_sub(1)..r.len())
                .map(|k| {
                    let lags: Vec<f64> = (0..p).map(|i| r[k - i]).collect();
                    (k, model.predict(&lags), None)
                })
                .collect())
        }
        SavedModel::Gp {
            lags,
            hyper,
            prior_mean,
            inputs,
            outputs,
        } => {
            let model = GpModel::condition(inputs.clone(), outputs.clone(), *hyper, *prior_mean)?;
            Ok((lags.saturating_sub(1)..r.len())
                .map(|k| {
                    let x: Vec<f64> = (0..*lags).map(|i| r[k - i]).collect();
                    let (m, v) = model.predict(&x);
                    (k, m, Some(v))
                })
                .collect())
        }
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
