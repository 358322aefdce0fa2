//! `foulscan` command-line tool: fit prototype banks, score frames,
//! evaluate scores, build transect reports, and export exemplars.
//!
//! Exit codes: 0 on success, 2 for usage and configuration errors, 3 for
//! bad or inconsistent input data.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "foulscan", version, about = "Prototype-based hull fouling detection")]
struct Cli {
    /// Base seed. `fit` uses seeds `seed..seed+N`; `video` seeds the frame selection.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a two-class prototype bank from labelled frame embeddings.
    Fit(FitArgs),
    /// Score frames against a bank and write a per-frame table.
    Score(ScoreArgs),
    /// Compare scores with labels: average precision and an operating point.
    Eval(EvalArgs),
    /// Build a transect report and timeline from a native-rate frame stream.
    Video(VideoArgs),
    /// Export the closest training components for every prototype.
    Exemplars(ExemplarArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub prototypes_per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub components: usize,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 3)]
    pub refine_rounds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub temperature: f64,
    #[arg(long, default_value = "no_fouling")]
    pub background_class: String,
    #[arg(long, default_value = "fouling")]
    pub foreground_class: String,
    /// Exemplars stored with each prototype in the bank file.
    #[arg(long, default_value_t = 5)]
    pub exemplars_top: usize,
    /// Also write the per-seed fit report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub coverage_threshold: f64,
    /// Component count; defaults to the value the bank was fitted with.
    #[arg(long)]
    pub components: Option<usize>,
    /// Foreground class to report; defaults to the bank's first.
    #[arg(long)]
    pub target_class: Option<String>,
    #[arg(long)]
    pub heatmap_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub target_recall: f64,
    /// Evaluation report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Precision-recall table; defaults to the report path with a `.pr.csv` extension.
    #[arg(long)]
    pub pr_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VideoArgs {
    #[arg(long)]
    pub hull_bank: PathBuf,
    #[arg(long)]
    pub fouling_bank: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out_report: PathBuf,
    #[arg(long)]
    pub out_timeline: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub sample_fps: f64,
    /// Native frame rate; estimated from the container timestamps when absent.
    #[arg(long)]
    pub native_fps: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 0.75)]
    pub hull_threshold: f64,
    #[arg(long, default_value_t = 0.25)]
    pub fouling_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub coverage_threshold: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 8)]
    pub per_group: usize,
    /// Component count; defaults to the fouling bank's.
    #[arg(long)]
    pub components: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExemplarArgs {
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Restrict the search to frames labelled `train`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .target(env_logger::Target::Stderr)
        .init();

    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a, cli.seed),
        Command::Score(a) => commands::score(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Video(a) => commands::video(&a, cli.seed),
        Command::Exemplars(a) => commands::exemplars(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
