//! File-level stages: each reads its inputs from disk, writes its outputs,
//! and returns a summary. Output files are written in a fixed order so
//! repeated runs with the same inputs produce identical bytes.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono_tz::Tz;

use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_cohort, render_report_table, render_selection, write_report_csv, EvaluationConfig,
    EvaluationReport,
};
use crate::features::{
    aggregate_daily_label, extract_daily_features, join_features_labels, read_features_csv,
    read_labels_csv, write_features_csv, write_labels_csv, DailyFeatureVector, DailyLabel,
    JoinReport, LabelReducer, LabeledDay,
};
use crate::ingest::{
    apply_work_filter, clip_to_screen_on, normalize_screen_intervals, parse_app_events, parse_ema,
    parse_screen_intervals, write_app_events_csv, write_ema_csv, write_screen_csv, AppEvent,
    Diagnostic, EmaResponse, Format, ParseOutcome, ScreenInterval, WorkHoursFilter,
};
use crate::report::usage_scatter_svg;
use crate::synth::{generate_cohort, write_truth_csv, Cohort, CohortSpec};
use crate::taxonomy::{load_taxonomy, Taxonomy};
use crate::time::parse_timezone;

pub const EVENTS_FILE: &str = "app_events.csv";
pub const SCREEN_FILE: &str = "screen.csv";
pub const EMA_FILE: &str = "ema.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const USAGE_SVG: &str = "usage.svg";
pub const MODELS_DIR: &str = "models";
pub const CLEAN_DIR: &str = "clean";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub events: PathBuf,
    pub screen: PathBuf,
    pub ema: PathBuf,
    /// `None` uses the bundled taxonomy.
    pub taxonomy: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub timezone: String,
    pub work_hours: WorkHoursFilter,
    pub reducer: LabelReducer,
    pub evaluation: EvaluationConfig,
}

impl PipelineConfig {
    /// Inputs where `synth` writes them, all outputs under `out_dir`.
    pub fn in_dir(out_dir: impl Into<PathBuf>) -> Self {
        let out_dir = out_dir.into();
        PipelineConfig {
            events: out_dir.join(EVENTS_FILE),
            screen: out_dir.join(SCREEN_FILE),
            ema: out_dir.join(EMA_FILE),
            taxonomy: None,
            out_dir,
            timezone: "UTC".into(),
            work_hours: WorkHoursFilter::default(),
            reducer: LabelReducer::Mean,
            evaluation: EvaluationConfig::new(),
        }
    }

    pub fn tz(&self) -> Result<Tz> {
        parse_timezone(&self.timezone)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Checks everything that can be checked before reading data.
    pub fn validate(&self) -> Result<()> {
        self.tz()?;
        self.work_hours.validate()?;
        self.evaluation.split.validate()?;
        self.evaluation
            .grid
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.evaluation.base.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.evaluation.folds.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.evaluation.folds.k)));
        }
        if let Some(t) = &self.taxonomy {
            if !t.is_file() {
                return Err(Error::Config(format!("taxonomy file {} not found", t.display())));
            }
        }
        Ok(())
    }

    pub fn load_taxonomy(&self) -> Result<Taxonomy> {
        match &self.taxonomy {
            None => Ok(Taxonomy::bundled()),
            Some(p) => load_taxonomy(open(p)?),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Diagnostics of one input file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileDiagnostics {
    pub path: PathBuf,
    pub rows: usize,
    pub diagnostics: Vec<Diagnostic>,
}

fn parse_file<T>(
    path: &Path,
    parse: fn(BufReader<File>, Format) -> Result<ParseOutcome<T>>,
) -> Result<(Vec<T>, FileDiagnostics)> {
    let outcome = parse(open(path)?, Format::from_path(path))?;
    let diag = FileDiagnostics {
        path: path.to_owned(),
        rows: outcome.rows(),
        diagnostics: outcome.diagnostics,
    };
    Ok((outcome.records, diag))
}

/// Parsed inputs with usage clipped to screen-on time and, when enabled,
/// to working hours.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub events: Vec<AppEvent>,
    pub screen: Vec<ScreenInterval>,
    pub ema: Vec<EmaResponse>,
    pub raw_events: usize,
    pub diagnostics: Vec<FileDiagnostics>,
}

pub fn clean_usage(
    events: &[AppEvent],
    screen: &[ScreenInterval],
    work_hours: &WorkHoursFilter,
) -> Result<(Vec<AppEvent>, Vec<ScreenInterval>)> {
    let screen = normalize_screen_intervals(screen);
    let events = apply_work_filter(&clip_to_screen_on(events, &screen), work_hours)?;
    Ok((events, screen))
}

pub fn load_inputs(cfg: &PipelineConfig) -> Result<Ingested> {
    for p in [&cfg.events, &cfg.screen, &cfg.ema] {
        if !p.is_file() {
            return Err(Error::Config(format!("input file {} not found", p.display())));
        }
    }
    let (events, d1) = parse_file(&cfg.events, parse_app_events)?;
    let (screen, d2) = parse_file(&cfg.screen, parse_screen_intervals)?;
    let (ema, d3) = parse_file(&cfg.ema, parse_ema)?;
    let (clean, screen) = clean_usage(&events, &screen, &cfg.work_hours)?;
    Ok(Ingested {
        raw_events: events.len(),
        events: clean,
        screen,
        ema,
        diagnostics: vec![d1, d2, d3],
    })
}

/// Validates and normalizes the inputs into `<out>/clean/`.
pub fn run_ingest(cfg: &PipelineConfig) -> Result<Ingested> {
    cfg.validate()?;
    let ing = load_inputs(cfg)?;
    let dir = cfg.out(CLEAN_DIR);
    write_app_events_csv(create(&dir.join(EVENTS_FILE))?, &ing.events)?;
    write_screen_csv(create(&dir.join(SCREEN_FILE))?, &ing.screen)?;
    write_ema_csv(create(&dir.join(EMA_FILE))?, &ing.ema)?;
    Ok(ing)
}

#[derive(Debug, Clone, Default)]
pub struct Featurized {
    pub features: Vec<DailyFeatureVector>,
    pub labels: Vec<DailyLabel>,
    pub diagnostics: Vec<FileDiagnostics>,
}

/// Daily features and labels from in-memory records.
pub fn featurize_records(
    events: &[AppEvent],
    screen: &[ScreenInterval],
    ema: &[EmaResponse],
    taxonomy: &Taxonomy,
    tz: Tz,
    work_hours: &WorkHoursFilter,
    reducer: LabelReducer,
) -> Result<(Vec<DailyFeatureVector>, Vec<DailyLabel>)> {
    let (clean, _) = clean_usage(events, screen, work_hours)?;
    Ok((
        extract_daily_features(&clean, taxonomy, tz),
        aggregate_daily_label(ema, tz, reducer),
    ))
}

/// Labeled days of a generated cohort, with default settings.
pub fn cohort_days(cohort: &Cohort) -> Result<(Vec<DailyFeatureVector>, Vec<LabeledDay>)> {
    let (features, labels) = featurize_records(
        &cohort.events,
        &cohort.screen,
        &cohort.ema,
        &Taxonomy::bundled(),
        Tz::UTC,
        &WorkHoursFilter::default(),
        LabelReducer::Mean,
    )?;
    let (days, _) = join_features_labels(&features, &labels);
    Ok((features, days))
}

pub fn run_featurize(cfg: &PipelineConfig) -> Result<Featurized> {
    cfg.validate()?;
    let taxonomy = cfg.load_taxonomy()?;
    let ing = load_inputs(cfg)?;
    let tz = cfg.tz()?;
    let features = extract_daily_features(&ing.events, &taxonomy, tz);
    let labels = aggregate_daily_label(&ing.ema, tz, cfg.reducer);
    write_features_csv(create(&cfg.out(FEATURES_FILE))?, &features)?;
    write_labels_csv(create(&cfg.out(LABELS_FILE))?, &labels)?;
    Ok(Featurized {
        features,
        labels,
        diagnostics: ing.diagnostics,
    })
}

fn read_featurized(cfg: &PipelineConfig) -> Result<(Vec<DailyFeatureVector>, Vec<LabeledDay>, JoinReport)> {
    let (fp, lp) = (cfg.out(FEATURES_FILE), cfg.out(LABELS_FILE));
    for p in [&fp, &lp] {
        if !p.is_file() {
            return Err(Error::Config(format!(
                "{} not found; run featurize first",
                p.display()
            )));
        }
    }
    let features = read_features_csv(open(&fp)?)?;
    let labels = read_labels_csv(open(&lp)?)?;
    let (days, join) = join_features_labels(&features, &labels);
    Ok((features, days, join))
}

/// Outcome of `train`: the printed selection tables.
#[derive(Debug, Clone, Default)]
pub struct Trained {
    pub summary: String,
    pub models: Vec<PathBuf>,
    pub join: JoinReport,
}

/// Selects and fits each user's model on the training split and writes it
/// to `<out>/models/<user>.json`.
pub fn run_train(cfg: &PipelineConfig) -> Result<Trained> {
    cfg.validate()?;
    let (features, days, join) = read_featurized(cfg)?;
    let eval = EvaluationConfig {
        pooled: false,
        ..cfg.evaluation.clone()
    };
    let (report, fits) = evaluate_cohort(&days, &features, &eval)?;
    let mut out = Trained {
        join,
        ..Trained::default()
    };
    for fit in &fits {
        let user = &fit.result.user_id;
        out.summary.push_str(&render_selection(user, &fit.selection));
        let path = cfg.out(MODELS_DIR).join(format!("{user}.json"));
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &fit.model)?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        out.models.push(path);
    }
    for (u, n) in &report.skipped {
        out.summary.push_str(&format!("skipped {u}: {n} labeled days\n"));
    }
    Ok(out)
}

pub fn run_evaluate(cfg: &PipelineConfig) -> Result<(EvaluationReport, String)> {
    cfg.validate()?;
    let (features, days, _) = read_featurized(cfg)?;
    let (report, _) = evaluate_cohort(&days, &features, &cfg.evaluation)?;
    write_report_csv(create(&cfg.out(REPORT_CSV))?, &report)?;
    let table = render_report_table(&report);
    write_text(&cfg.out(REPORT_TXT), &table)?;
    Ok((report, table))
}

/// Category usage table, and with `plot` the scatter SVG.
pub fn run_report(cfg: &PipelineConfig, plot: bool) -> Result<String> {
    let fp = cfg.out(FEATURES_FILE);
    if !fp.is_file() {
        return Err(Error::Config(format!("{} not found; run featurize first", fp.display())));
    }
    let features = read_features_csv(open(&fp)?)?;
    let usage = crate::evaluation::category_usage_summary(&features);
    let mut text = format!("{:<18} {:>12} {:>14}\n", "category", "uses/day", "seconds/use");
    for u in &usage {
        text.push_str(&format!(
            "{:<18} {:>12.3} {:>14.3}\n",
            u.category.as_str(),
            u.uses_per_day,
            u.seconds_per_use
        ));
    }
    if plot {
        write_text(&cfg.out(USAGE_SVG), &usage_scatter_svg(&usage))?;
    }
    Ok(text)
}

/// Writes a generated cohort in the ingest formats plus `truth.csv`.
pub fn run_synth(spec: &CohortSpec, out_dir: &Path) -> Result<Cohort> {
    let cohort = generate_cohort(spec)?;
    write_app_events_csv(create(&out_dir.join(EVENTS_FILE))?, &cohort.events)?;
    write_screen_csv(create(&out_dir.join(SCREEN_FILE))?, &cohort.screen)?;
    write_ema_csv(create(&out_dir.join(EMA_FILE))?, &cohort.ema)?;
    write_truth_csv(create(&out_dir.join(TRUTH_FILE))?, &cohort.truth)?;
    Ok(cohort)
}
