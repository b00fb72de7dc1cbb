// stol: structured-output transfer learning experiments, end to end.
//
// Subcommands:
//   synth         write seeded source/target datasets (+ sealed truth)
//   train-source  fit a linear chain scorer on a fully labeled dataset
//   adapt         learn delta weights for a target domain on a frozen model
//   predict       decode label sequences with a saved model
//   eval          mean normalized Hamming error of a model on a dataset
//
// Every command is a pure function of its inputs and flags: reruns produce
// byte-identical files. Exit codes: 0 success (training converged), 2
// usage or data error, 3 training stopped at the iteration cap.
// STOL_LOG controls log verbosity (error, warn, info, debug, trace).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stol_core::chain_model::Domain;
use stol_core::datagen::{generate, mask_labels, shift, DomainParams, DEFAULT_SHIFT_DEGREES};
use stol_core::inference::{decode, hamming_loss};
use stol_core::io::{
    read_dataset, read_json, write_dataset, write_json, write_predictions, Metrics, ModelFile,
    ModelKind,
};
use stol_core::trainer::{adapt, train_source, Termination, TrainConfig, TrainReport};
use stol_core::{Dataset64, LinearScorer64};

#[derive(Parser)]
#[command(
    name = "stol",
    about = "Structured-output transfer learning toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded source and covariate-shifted target datasets
    Synth(SynthArgs),
    /// Train a linear chain scorer on a fully labeled dataset
    TrainSource(TrainSourceArgs),
    /// Adapt a frozen source model to a target dataset
    Adapt(AdaptArgs),
    /// Decode label sequences for every sample in a dataset
    Predict(PredictArgs),
    /// Evaluate a model against true labels
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// PRNG seed; fixes every byte of the output
    #[arg(long)]
    seed: u64,
    /// Number of source samples
    #[arg(long, default_value_t = 200)]
    n_source: usize,
    /// Number of target samples
    #[arg(long, default_value_t = 240)]
    n_target: usize,
    /// Target samples that keep their labels
    #[arg(long)]
    l: usize,
    /// Output directory (must exist); writes source.jsonl, target.jsonl,
    /// target.truth.jsonl, synth.json
    #[arg(long)]
    out: PathBuf,
    /// Label alphabet size
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Emission noise standard deviation
    #[arg(long, default_value_t = 0.6)]
    sigma: f64,
    /// Shortest sequence length
    #[arg(long, default_value_t = 4)]
    t_min: usize,
    /// Longest sequence length
    #[arg(long, default_value_t = 8)]
    t_max: usize,
    /// Self-transition probability of the label chain
    #[arg(long, default_value_t = 0.85)]
    self_transition: f64,
    /// Rotation of the target emissions, degrees
    #[arg(long, default_value_t = DEFAULT_SHIFT_DEGREES)]
    shift_degrees: f64,
    /// Translation of the target emissions, "x,y"
    #[arg(long, default_value = "0.5,-0.25")]
    shift_translation: String,
}

#[derive(Args)]
struct TrainConfigArgs {
    /// Regularization constant
    #[arg(long, default_value_t = 100.0)]
    c: f64,
    /// Cutting-plane termination threshold
    #[arg(long, default_value_t = 1e-3)]
    eps_cp: f64,
    /// Inner QP tolerance
    #[arg(long, default_value_t = 1e-8)]
    eps_qp: f64,
    /// Cutting-plane iteration cap
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

impl TrainConfigArgs {
    fn to_config(&self) -> TrainConfig<f64> {
        TrainConfig {
            c: self.c,
            eps_cp: self.eps_cp,
            eps_qp: self.eps_qp,
            max_cp_iters: self.max_iters,
        }
    }
}

#[derive(Args)]
struct TrainSourceArgs {
    /// Fully labeled training dataset (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the model JSON
    #[arg(long)]
    out: PathBuf,
    /// Where to write the training report (default: `<out stem>.report.json`)
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    train: TrainConfigArgs,
}

#[derive(Args)]
struct AdaptArgs {
    /// Frozen source model (kind = linear)
    #[arg(long)]
    source_model: PathBuf,
    /// Target dataset with at least one labeled sample (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the adapted model JSON (kind = transfer)
    #[arg(long)]
    out: PathBuf,
    /// Where to write the training report (default: `<out stem>.report.json`)
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    train: TrainConfigArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON (linear or transfer)
    #[arg(long)]
    model: PathBuf,
    /// Dataset to decode (labels ignored)
    #[arg(long = "in")]
    input: PathBuf,
    /// Predictions file: one JSON label array per line
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model JSON (linear or transfer)
    #[arg(long)]
    model: PathBuf,
    /// Dataset to evaluate on
    #[arg(long = "in")]
    input: PathBuf,
    /// Fully labeled truth dataset in the same sample order (defaults to
    /// the labels of --in)
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Metrics JSON output
    #[arg(long)]
    out: PathBuf,
}

/// Training report file: the resolved configuration next to the trace, so
/// a run can be audited from its artifacts alone.
#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    input: String,
    config: TrainConfig<f64>,
    report: &'a TrainReport<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("STOL_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::TrainSource(args) => cmd_train_source(&args),
        Command::Adapt(args) => cmd_adapt(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Eval(args) => cmd_eval(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn require_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("input file {} does not exist", path.display());
    }
    Ok(())
}

fn require_output_slot(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if p.as_os_str().is_empty() => Path::new("."),
        Some(p) => p,
        None => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("output directory {} does not exist", parent.display());
    }
    Ok(())
}

fn parse_translation(text: &str) -> Result<Vec<f64>> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let parts = parts.with_context(|| format!("cannot parse translation {text:?}"))?;
    if parts.len() != 2 {
        bail!(
            "translation must have exactly two components, got {}",
            parts.len()
        );
    }
    Ok(parts)
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode> {
    if !args.out.is_dir() {
        bail!("output directory {} does not exist", args.out.display());
    }
    if args.l > args.n_target {
        bail!("--l {} exceeds --n-target {}", args.l, args.n_target);
    }
    if args.t_min < 1 || args.t_min > args.t_max {
        bail!("invalid length range [{}, {}]", args.t_min, args.t_max);
    }
    if args.k < 1 {
        bail!("--k must be at least 1");
    }

    let source_params: DomainParams<f64> = stol_core::datagen::source_params(
        args.k,
        args.sigma,
        args.self_transition,
        (args.t_min, args.t_max),
    );

    let translation = parse_translation(&args.shift_translation)?;
    let target_params = shift(&source_params, args.shift_degrees, &translation)?;

    let source = generate(&source_params, args.n_source, args.seed, Domain::Source)?;
    let target_full = generate(
        &target_params,
        args.n_target,
        args.seed.wrapping_add(1),
        Domain::Target,
    )?;
    let (target_masked, target_truth) =
        mask_labels(&target_full, args.l, args.seed.wrapping_add(2))?;

    #[derive(Serialize)]
    struct SynthMeta<'a> {
        seed: u64,
        n_source: usize,
        n_target: usize,
        l: usize,
        source_params: &'a DomainParams<f64>,
        target_params: &'a DomainParams<f64>,
    }

    write_dataset(&args.out.join("source.jsonl"), &source)?;
    write_dataset(&args.out.join("target.jsonl"), &target_masked)?;
    write_dataset(&args.out.join("target.truth.jsonl"), &target_truth)?;
    write_json(
        &args.out.join("synth.json"),
        &SynthMeta {
            seed: args.seed,
            n_source: args.n_source,
            n_target: args.n_target,
            l: args.l,
            source_params: &source_params,
            target_params: &target_params,
        },
    )?;
    log::info!(
        "wrote {} source and {} target samples ({} labeled) to {}",
        args.n_source,
        args.n_target,
        args.l,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    name.push_str(".report.json");
    out.with_file_name(name)
}

fn finish_training(
    command: &str,
    input: &Path,
    config: TrainConfig<f64>,
    report: &TrainReport<f64>,
    model: &ModelFile<f64>,
    out: &Path,
    report_path: &Path,
) -> Result<ExitCode> {
    write_json(out, model)?;
    write_json(
        report_path,
        &RunReport {
            command,
            input: input.display().to_string(),
            config,
            report,
        },
    )?;
    log::info!(
        "{command}: {} iterations, working set {}, objective {:.6}",
        report.iterations,
        report.working_set_size,
        report.final_primal_objective
    );
    Ok(match report.terminated_by {
        Termination::Converged => ExitCode::SUCCESS,
        Termination::IterationCap => ExitCode::from(3),
    })
}

fn cmd_train_source(args: &TrainSourceArgs) -> Result<ExitCode> {
    require_input(&args.input)?;
    require_output_slot(&args.out)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&args.out));
    require_output_slot(&report_path)?;
    let config = args.train.to_config();
    config.validate()?;

    let dataset: Dataset64 = read_dataset(&args.input)?;
    let (scorer, report) = train_source(&dataset, &config)?;
    let model = ModelFile::from_linear(&scorer);
    finish_training(
        "train-source",
        &args.input,
        config,
        &report,
        &model,
        &args.out,
        &report_path,
    )
}

fn cmd_adapt(args: &AdaptArgs) -> Result<ExitCode> {
    require_input(&args.source_model)?;
    require_input(&args.input)?;
    require_output_slot(&args.out)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&args.out));
    require_output_slot(&report_path)?;
    let config = args.train.to_config();
    config.validate()?;

    let model: ModelFile<f64> = read_json(&args.source_model)?;
    if model.kind != ModelKind::Linear {
        bail!(
            "--source-model must be a linear model, got kind \"transfer\" in {}",
            args.source_model.display()
        );
    }
    let source: LinearScorer64 = model.to_linear()?;
    let dataset: Dataset64 = read_dataset(&args.input)?;
    let (ts, report) = adapt(&source, &dataset, &config)?;
    let model = ModelFile::from_transfer(&ts);
    finish_training(
        "adapt",
        &args.input,
        config,
        &report,
        &model,
        &args.out,
        &report_path,
    )
}

fn predictions_for(model: &ModelFile<f64>, dataset: &Dataset64) -> Result<Vec<Vec<usize>>> {
    let map = model.map();
    if dataset.d != map.d() || dataset.k != map.k() {
        bail!(
            "dataset is d={}, K={} but the model expects d={}, K={}",
            dataset.d,
            dataset.k,
            map.d(),
            map.k()
        );
    }
    let weights = model.decode_weights()?;
    dataset
        .samples
        .iter()
        .map(|sample| decode(&map, &weights, &sample.x).map_err(Into::into))
        .collect()
}

fn cmd_predict(args: &PredictArgs) -> Result<ExitCode> {
    require_input(&args.model)?;
    require_input(&args.input)?;
    require_output_slot(&args.out)?;
    let model: ModelFile<f64> = read_json(&args.model)?;
    let dataset: Dataset64 = read_dataset(&args.input)?;
    let predictions = predictions_for(&model, &dataset)?;
    write_predictions(&args.out, &predictions)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    require_input(&args.model)?;
    require_input(&args.input)?;
    require_output_slot(&args.out)?;
    let model: ModelFile<f64> = read_json(&args.model)?;
    let dataset: Dataset64 = read_dataset(&args.input)?;

    let truth: Vec<Vec<usize>> = match &args.truth {
        Some(path) => {
            require_input(path)?;
            let truth_ds: Dataset64 = read_dataset(path)?;
            if truth_ds.len() != dataset.len() {
                bail!(
                    "truth file has {} samples, dataset has {}",
                    truth_ds.len(),
                    dataset.len()
                );
            }
            truth_ds
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.y.clone()
                        .with_context(|| format!("truth sample {i} has no labels"))
                })
                .collect::<Result<_>>()?
        }
        None => dataset
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.y.clone().with_context(|| {
                    format!("sample {i} has no labels; pass --truth for a sealed truth file")
                })
            })
            .collect::<Result<_>>()?,
    };

    let predictions = predictions_for(&model, &dataset)?;
    let per_sample: Vec<f64> = predictions
        .iter()
        .zip(&truth)
        .map(|(pred, gold)| hamming_loss::<f64>(gold, pred).map_err(Into::into))
        .collect::<Result<Vec<f64>>>()?;
    let n = per_sample.len();
    let mean_hamming = if n == 0 {
        0.0
    } else {
        per_sample.iter().sum::<f64>() / n as f64
    };
    write_json(
        &args.out,
        &Metrics {
            mean_hamming,
            n,
            per_sample,
        },
    )?;
    log::info!("mean normalized Hamming error: {mean_hamming:.4} over {n} samples");
    Ok(ExitCode::SUCCESS)
}
