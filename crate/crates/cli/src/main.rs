//! `appstress`: the stress-prediction pipeline as subcommands.
//!
//! Exit status is 0 on success, 1 on a fatal error and 2 on a configuration
//! error. Row-level input problems go to stderr as `<file> line:<n> <reason>`.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use appstress::pipeline::{self, FileDiagnostics, MODELS_DIR, REPORT_CSV, TRUTH_FILE, USAGE_SVG};
use appstress::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "appstress", version, about = "Predict daily perceived stress from smartphone app usage")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the input logs and write normalized copies to <out>/clean.
    Ingest,
    /// Write per-day features.csv and labels.csv.
    Featurize,
    /// Grid-search and fit one model per user; writes <out>/models.
    Train,
    /// Score per-user and pooled models; writes report.csv and report.txt.
    Evaluate,
    /// Print mean usage per category.
    Report {
        /// Also write usage.svg, a scatter of uses per day against seconds per use.
        #[arg(long)]
        plot: bool,
    },
    /// Generate a synthetic cohort in the ingest formats plus truth.csv.
    Synth,
}

/// Options shared by every subcommand. Each overrides the config file.
#[derive(Args, Debug, Default)]
pub struct Common {
    /// TOML config file; relative paths in it are resolved against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// App usage events, CSV or JSONL [default: <out>/app_events.csv].
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Screen-on intervals [default: <out>/screen.csv].
    #[arg(long, global = true)]
    pub screen: Option<PathBuf>,
    /// Stress responses [default: <out>/ema.csv].
    #[arg(long, global = true)]
    pub ema: Option<PathBuf>,
    /// App category mapping CSV; replaces the bundled one.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    /// IANA zone used for day boundaries [default: UTC].
    #[arg(long, global = true)]
    pub timezone: Option<String>,
    /// Keep only weekday usage inside this window, e.g. 09:00-18:00, or off.
    #[arg(long, global = true, value_name = "HH:MM-HH:MM")]
    pub work_hours: Option<String>,
    /// Daily label from up to three responses: mean, max or last [default: mean].
    #[arg(long, global = true)]
    pub reducer: Option<String>,
    /// Fraction of each user's days used for training [default: 0.7].
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    /// Train/test split: chronological or random_stratified [default: chronological].
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// Cross-validation folds [default: 10].
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Seed for folds, random splits and synth [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML grid file with `c_values` and `[[kernels]]` tables.
    #[arg(long, global = true)]
    pub grid: Option<PathBuf>,
    /// Skip the pooled model in evaluate.
    #[arg(long, global = true)]
    pub no_pooled: bool,
    /// Users with fewer labeled days are skipped [default: 10].
    #[arg(long, global = true)]
    pub min_days: Option<usize>,
    /// SMO sweep budget per solve [default: 100].
    #[arg(long, global = true)]
    pub max_passes: Option<usize>,
    /// synth: number of users [default: 22].
    #[arg(long, global = true)]
    pub users: Option<usize>,
    /// synth: weekdays per user [default: 30].
    #[arg(long, global = true)]
    pub days: Option<usize>,
    /// synth: share of days on which usage follows stress, 0 to 1 [default: 0.9].
    #[arg(long, global = true)]
    pub signal: Option<f64>,
    /// synth: homogeneous or per_user_rules [default: per_user_rules].
    #[arg(long, global = true)]
    pub heterogeneity: Option<String>,
    /// synth: probability a prompt goes unanswered [default: 0.1].
    #[arg(long, global = true)]
    pub missing_rate: Option<f64>,
}

fn print_diagnostics(files: &[FileDiagnostics]) {
    for f in files {
        for d in &f.diagnostics {
            eprintln!("{} {d}", f.path.display());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let resolved = config::resolve(&cli.common)?;
    let cfg = resolved.pipeline;
    match cli.command {
        Command::Ingest => {
            let ing = pipeline::run_ingest(&cfg)?;
            print_diagnostics(&ing.diagnostics);
            println!(
                "{} events ({} after clipping), {} screen intervals, {} responses",
                ing.raw_events,
                ing.events.len(),
                ing.screen.len(),
                ing.ema.len()
            );
        }
        Command::Featurize => {
            let f = pipeline::run_featurize(&cfg)?;
            print_diagnostics(&f.diagnostics);
            println!("{} feature days, {} labeled days", f.features.len(), f.labels.len());
        }
        Command::Train => {
            let t = pipeline::run_train(&cfg)?;
            print!("{}", t.summary);
            println!("{} models written to {}", t.models.len(), cfg.out(MODELS_DIR).display());
        }
        Command::Evaluate => {
            let (_, table) = pipeline::run_evaluate(&cfg)?;
            print!("{table}");
            println!("wrote {}", cfg.out(REPORT_CSV).display());
        }
        Command::Report { plot } => {
            print!("{}", pipeline::run_report(&cfg, plot)?);
            if plot {
                println!("wrote {}", cfg.out(USAGE_SVG).display());
            }
        }
        Command::Synth => {
            let cohort = pipeline::run_synth(&resolved.synth, &cfg.out_dir)?;
            println!(
                "{} users, {} events, {} responses; truth in {}",
                resolved.synth.n_users,
                cohort.events.len(),
                cohort.ema.len(),
                cfg.out(TRUTH_FILE).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
