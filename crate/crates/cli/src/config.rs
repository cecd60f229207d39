//! The TOML config file and how flags are layered over it.

use std::fs;
use std::path::{Path, PathBuf};

use appstress::evaluation::{EvaluationConfig, SplitMode};
use appstress::features::LabelReducer;
use appstress::ingest::WorkHoursFilter;
use appstress::model_selection::Grid;
use appstress::pipeline::PipelineConfig;
use appstress::synth::{CohortSpec, Heterogeneity};
use appstress::{Error, Result};
use chrono::NaiveTime;
use serde::Deserialize;

use crate::Common;

/// Every key is optional; missing keys keep their defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub out_dir: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub screen: Option<PathBuf>,
    pub ema: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub timezone: Option<String>,
    /// `"HH:MM-HH:MM"`, Monday to Friday.
    pub work_hours: Option<String>,
    pub reducer: Option<String>,
    pub train_fraction: Option<f64>,
    pub split: Option<String>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<PathBuf>,
    pub pooled: Option<bool>,
    pub min_days: Option<usize>,
    pub max_passes: Option<usize>,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub users: Option<usize>,
    pub days: Option<usize>,
    pub signal: Option<f64>,
    pub heterogeneity: Option<String>,
    pub missing_rate: Option<f64>,
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {what} {}: {e}", path.display())))
}

impl ConfigFile {
    /// Paths in the file are relative to the file's directory.
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let mut cfg: ConfigFile = toml::from_str(&read(path, "config")?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.out_dir,
            &mut cfg.events,
            &mut cfg.screen,
            &mut cfg.ema,
            &mut cfg.taxonomy,
            &mut cfg.grid,
        ]
        .into_iter()
        .flatten()
        {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }
}

pub fn load_grid(path: &Path) -> Result<Grid> {
    let grid: Grid = toml::from_str(&read(path, "grid")?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    grid.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(grid)
}

fn parse_work_hours(s: &str, tz: &str) -> Result<WorkHoursFilter> {
    if s == "off" {
        return Ok(WorkHoursFilter::default());
    }
    let bad = || Error::Config(format!("work hours {s:?} must look like 09:00-18:00 or off"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let t = |v: &str| NaiveTime::parse_from_str(v.trim(), "%H:%M").map_err(|_| bad());
    Ok(WorkHoursFilter::enabled(t(a)?, t(b)?, tz))
}

/// Flags take precedence over the file, which takes precedence over defaults.
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub synth: CohortSpec,
}

pub fn resolve(common: &Common) -> Result<Resolved> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let out_dir = common
        .out
        .clone()
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut p = PipelineConfig::in_dir(&out_dir);
    if let Some(v) = common.events.clone().or(file.events) {
        p.events = v;
    }
    if let Some(v) = common.screen.clone().or(file.screen) {
        p.screen = v;
    }
    if let Some(v) = common.ema.clone().or(file.ema) {
        p.ema = v;
    }
    p.taxonomy = common.taxonomy.clone().or(file.taxonomy);
    if let Some(v) = common.timezone.clone().or(file.timezone) {
        p.timezone = v;
    }
    if let Some(v) = common.work_hours.as_deref().or(file.work_hours.as_deref()) {
        p.work_hours = parse_work_hours(v, &p.timezone)?;
    }
    if let Some(v) = common.reducer.as_deref().or(file.reducer.as_deref()) {
        p.reducer = v.parse::<LabelReducer>()?;
    }

    let mut eval = EvaluationConfig::new();
    if let Some(v) = common.grid.as_deref().or(file.grid.as_deref()) {
        eval.grid = load_grid(v)?;
    }
    if let Some(v) = common.train_fraction.or(file.train_fraction) {
        eval.split.train_fraction = v;
    }
    if let Some(v) = common.split.as_deref().or(file.split.as_deref()) {
        eval.split.mode = v.parse::<SplitMode>()?;
    }
    if let Some(v) = common.k.or(file.k) {
        eval.folds.k = v;
    }
    let seed = common.seed.or(file.seed);
    if let Some(s) = seed {
        eval.folds.seed = s;
        eval.split.seed = s;
    }
    if common.no_pooled {
        eval.pooled = false;
    } else if let Some(v) = file.pooled {
        eval.pooled = v;
    }
    if let Some(v) = common.min_days.or(file.min_days) {
        eval.min_days = v;
    }
    if let Some(v) = common.max_passes.or(file.max_passes) {
        eval.base.max_passes = v;
    }
    p.evaluation = eval;

    let mut synth = CohortSpec::default();
    let s = &file.synth;
    if let Some(v) = common.users.or(s.users) {
        synth.n_users = v;
    }
    if let Some(v) = common.days.or(s.days) {
        synth.n_days = v;
    }
    if let Some(v) = common.signal.or(s.signal) {
        synth.signal_strength = v;
    }
    if let Some(v) = common.heterogeneity.as_deref().or(s.heterogeneity.as_deref()) {
        synth.heterogeneity = v.parse::<Heterogeneity>()?;
    }
    if let Some(v) = common.missing_rate.or(s.missing_rate) {
        synth.ema_missing_rate = v;
    }
    if let Some(v) = seed {
        synth.seed = v;
    }
    Ok(Resolved { pipeline: p, synth })
}
