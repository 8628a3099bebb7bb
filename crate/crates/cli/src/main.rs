//! `pvtkin`: synthetic kinship data, siamese PVT training and ensemble
//! analysis from the command line.
//!
//! Failures print a single `error: <kind>: <message>` line on stderr and exit
//! with status 1. Usage errors print the usage text and exit with status 2.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pvtkin_core::checkpoint::{load_checkpoint, save_checkpoint};
use pvtkin_core::data::{
    from_prediction_set, generate_synthetic, parse_submission_csv, read_label_set,
    read_prediction_set, submission_csv, write_submission_csv, KinshipDataset, SyntheticConfig,
    HOLDOUT_FILE, IMAGE_DIR,
};
use pvtkin_core::gradsuite::{run_suite, SuiteConfig, DEFAULT_TOLERANCE};
use pvtkin_core::metrics::{
    corr_matrix, diversity_report, heuristic_weights, matrix_csv, matrix_text, roc_auc,
    weighted_ensemble, PredictionSet, DEFAULT_LAMBDA,
};
use pvtkin_core::pipeline::{predict_ids, run_training, ExperimentConfig, TrainingData};
use pvtkin_core::siamese::write_history;
use pvtkin_core::{Error, Result};

/// Environment variable consulted when `--seed` is not given.
const SEED_ENV: &str = "PVTKIN_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "pvtkin",
    version,
    about = "PVT siamese kinship verification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct SeedArg {
    /// RNG seed [env: PVTKIN_SEED]
    #[arg(long, env = SEED_ENV, hide_env = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic kinship dataset.
    Gen(GenArgs),
    /// Train a siamese model from a TOML experiment file.
    Train(TrainArgs),
    /// Score image pairs with a trained checkpoint.
    Predict(PredictArgs),
    /// Fuse several submission files by a weighted sum.
    Ensemble(EnsembleArgs),
    /// Pearson correlation matrix of several submission files.
    Corr(CorrArgs),
    /// ROC-AUC of a submission file against labels.
    Auc(AucArgs),
    /// Diversity report: AUCs, correlations and score histograms.
    Report(ReportArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 16)]
    families: usize,
    #[arg(long, default_value_t = 4)]
    persons: usize,
    #[arg(long, default_value_t = 3)]
    images: usize,
    /// Image height and width.
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    channels: usize,
    #[arg(long)]
    snr: Option<f64>,
    /// Trailing families reserved for the labelled holdout list.
    #[arg(long, default_value_t = 4)]
    holdout_families: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Experiment config (flat TOML).
    config: PathBuf,
    /// Checkpoint path.
    #[arg(long, default_value = "model.ckpt")]
    out: PathBuf,
    /// Per-epoch `epoch,loss,holdout_auc` CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Overrides the config's seed.
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory holding `images/`.
    #[arg(long)]
    data: PathBuf,
    /// Submission-format file listing the pairs; scores are ignored.
    /// Defaults to the dataset's holdout list.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Comma-separated non-negative weights, one per input.
    #[arg(long, value_delimiter = ',', conflicts_with = "auto")]
    weights: Option<Vec<f64>>,
    /// Derive weights from validation AUC and mutual correlation.
    #[arg(long, requires = "labels")]
    auto: bool,
    /// Correlation penalty for `--auto`.
    #[arg(long, default_value_t = DEFAULT_LAMBDA, requires = "auto")]
    lambda: f64,
    /// Labels in submission format (0/1 scores).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorrArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Also write the matrix as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AucArgs {
    predictions: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write the report as long-form CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Random shapes per operation.
    #[arg(long, default_value_t = 10)]
    cases: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    seed: SeedArg,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_sets(paths: &[PathBuf]) -> Result<Vec<PredictionSet>> {
    paths.iter().map(|p| read_prediction_set(p)).collect()
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let defaults = SyntheticConfig::default();
    let cfg = SyntheticConfig {
        families: a.families,
        persons_per_family: a.persons,
        images_per_person: a.images,
        height: a.size,
        width: a.size,
        channels: a.channels,
        signal_to_noise: a.snr.unwrap_or(defaults.signal_to_noise),
        holdout_families: a.holdout_families,
        seed: a.seed.seed.unwrap_or(0),
        ..defaults
    };
    let set = generate_synthetic(&cfg)?;
    set.write_to(&a.out)?;
    println!(
        "images {} relations {} holdout_pairs {} out {}",
        set.images.len(),
        set.relations.len(),
        set.holdout.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed.seed {
        cfg.seed = seed;
    }
    let data = TrainingData::load(&cfg.data)?;
    let start = Instant::now();
    let (model, history) = run_training(&cfg, &data, |s| {
        let auc = s
            .holdout_auc
            .map(|v| format!(" holdout_auc {v:.6}"))
            .unwrap_or_default();
        println!(
            "epoch {} loss {:.6}{auc} elapsed {:.1}s",
            s.epoch,
            s.loss,
            start.elapsed().as_secs_f64()
        );
        let _ = std::io::stdout().flush();
    })?;
    save_checkpoint(&a.out, &model)?;
    if let Some(h) = &a.history {
        write_history(h, &history)?;
    }
    println!("saved {}", a.out.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = load_checkpoint(&a.model)?;
    let dataset = KinshipDataset::load_dir(&a.data.join(IMAGE_DIR))?;
    let pairs_path = a.pairs.unwrap_or_else(|| a.data.join(HOLDOUT_FILE));
    let ids: Vec<String> = parse_submission_csv(&pairs_path)?
        .into_iter()
        .map(|r| r.pair_id)
        .collect();
    let preds = predict_ids(&model, &dataset, &ids)?;
    let records = from_prediction_set(&preds);
    match &a.out {
        Some(p) => write_submission_csv(p, &records),
        None => emit(None, &submission_csv(&records)?),
    }
}

fn cmd_ensemble(a: EnsembleArgs) -> Result<()> {
    let sets = read_sets(&a.inputs)?;
    let weights = if a.auto {
        let labels = read_label_set(a.labels.as_deref().expect("clap requires labels"))?;
        let w = heuristic_weights(&sets, &labels, a.lambda)?;
        let shown: Vec<String> = w.iter().map(|x| format!("{x:.6}")).collect();
        eprintln!("weights {}", shown.join(","));
        w
    } else {
        let w = a.weights.unwrap_or_else(|| vec![1.0; sets.len()]);
        if w.len() != sets.len() {
            return Err(Error::Parameter(format!(
                "{} weights for {} inputs",
                w.len(),
                sets.len()
            )));
        }
        w
    };
    let fused = weighted_ensemble(&sets, &weights)?;
    let records = from_prediction_set(&fused);
    match &a.out {
        Some(p) => write_submission_csv(p, &records),
        None => emit(None, &submission_csv(&records)?),
    }
}

fn cmd_corr(a: CorrArgs) -> Result<()> {
    let m = corr_matrix(&read_sets(&a.inputs)?)?;
    print!("{}", matrix_text(&m));
    if let Some(p) = &a.out {
        write_file(p, &matrix_csv(&m))?;
    }
    Ok(())
}

fn cmd_auc(a: AucArgs) -> Result<()> {
    let preds = read_prediction_set(&a.predictions)?;
    let labels = read_label_set(&a.labels)?;
    println!("{:.6}", roc_auc(&preds, &labels)?);
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let sets = read_sets(&a.inputs)?;
    let labels = a.labels.as_deref().map(read_label_set).transpose()?;
    let report = diversity_report(&sets, labels.as_ref())?;
    print!("{}", report.to_text());
    if let Some(p) = &a.out {
        write_file(p, &report.to_csv())?;
    }
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<()> {
    let cfg = SuiteConfig {
        cases: a.cases,
        seed: a.seed.seed.unwrap_or(0),
        ..SuiteConfig::default()
    };
    let report = run_suite(&cfg)?;
    print!("{}", report.to_text(a.tolerance));
    if report.passed(a.tolerance) {
        Ok(())
    } else {
        Err(Error::Evaluation(format!(
            "max relative error {:.3e} exceeds {:.1e}",
            report.max_rel_error(),
            a.tolerance
        )))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Corr(a) => cmd_corr(a),
        Command::Auc(a) => cmd_auc(a),
        Command::Report(a) => cmd_report(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
