//! Daily feature vectors and daily stress labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AppEvent, EmaResponse};
use crate::taxonomy::{AppCategory, Taxonomy};
use crate::time;

pub const N_FEATURES: usize = 11;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "freq_ent",
    "freq_social",
    "freq_game",
    "freq_utility",
    "freq_browser",
    "time_ent",
    "time_social",
    "time_game",
    "time_utility",
    "time_browser",
    "unique_app_count",
];

/// Usage of one user on one local day: per-category use counts and
/// seconds, plus the number of distinct apps.
///
/// Category arrays are indexed as [`AppCategory::FEATURED`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyFeatureVector {
    pub user_id: String,
    pub date: NaiveDate,
    pub freq: [u64; 5],
    pub time: [u64; 5],
    pub unique_app_count: u64,
}

impl DailyFeatureVector {
    /// The 11 components in column order.
    pub fn components(&self) -> [u64; N_FEATURES] {
        let mut out = [0; N_FEATURES];
        out[..5].copy_from_slice(&self.freq);
        out[5..10].copy_from_slice(&self.time);
        out[10] = self.unique_app_count;
        out
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.components().iter().map(|&v| v as f64).collect()
    }

    pub fn freq_of(&self, c: AppCategory) -> u64 {
        c.feature_index().map_or(0, |i| self.freq[i])
    }

    pub fn time_of(&self, c: AppCategory) -> u64 {
        c.feature_index().map_or(0, |i| self.time[i])
    }
}

/// Splits an event at local midnights. Zero-length events stay whole.
pub fn split_at_midnight(ev: &AppEvent, tz: Tz) -> Vec<AppEvent> {
    if ev.duration() == 0 {
        return vec![ev.clone()];
    }
    let mut out = Vec::new();
    let mut day = ev.start.local_date(tz);
    let last = ev.end.local_date(tz);
    while day <= last {
        let next = day.succ_opt().expect("date in range");
        if let Some(piece) = ev.restricted(time::start_of_day(tz, day), time::start_of_day(tz, next)) {
            out.push(piece);
        }
        day = next;
    }
    out
}

#[derive(Default)]
struct DayAccumulator<'a> {
    freq: [u64; 5],
    time: [u64; 5],
    apps: BTreeSet<&'a str>,
}

/// Aggregates clipped events into one vector per (user, local day) with at
/// least one event. Output is sorted by user then date.
pub fn extract_daily_features(
    events: &[AppEvent],
    taxonomy: &Taxonomy,
    tz: Tz,
) -> Vec<DailyFeatureVector> {
    let mut days: BTreeMap<(&str, NaiveDate), DayAccumulator> = BTreeMap::new();
    let mut categories: HashMap<&str, AppCategory> = HashMap::new();
    for ev in events {
        let category = *categories
            .entry(ev.app_id.as_str())
            .or_insert_with(|| taxonomy.categorize(&ev.app_id));
        for piece in split_at_midnight(ev, tz) {
            let acc = days
                .entry((ev.user_id.as_str(), piece.start.local_date(tz)))
                .or_default();
            acc.apps.insert(ev.app_id.as_str());
            if let Some(i) = category.feature_index() {
                acc.freq[i] += 1;
                acc.time[i] += piece.duration() as u64;
            }
        }
    }
    days.into_iter()
        .map(|((user, date), acc)| DailyFeatureVector {
            user_id: user.to_owned(),
            date,
            freq: acc.freq,
            time: acc.time,
            unique_app_count: acc.apps.len() as u64,
        })
        .collect()
}

/// How the up-to-three responses of one day become one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelReducer {
    /// Arithmetic mean rounded half-up.
    #[default]
    Mean,
    Max,
    /// The latest response of the day.
    Last,
}

impl FromStr for LabelReducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(LabelReducer::Mean),
            "max" => Ok(LabelReducer::Max),
            "last" => Ok(LabelReducer::Last),
            other => Err(Error::Config(format!(
                "unknown label reducer {other:?} (expected mean, max or last)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyLabel {
    pub user_id: String,
    pub date: NaiveDate,
    pub level: u8,
    pub n_responses: u32,
}

/// Mean of integer levels rounded half-up, in exact integer arithmetic.
pub fn mean_half_up(levels: &[u8]) -> u8 {
    let n = levels.len() as u64;
    let sum: u64 = levels.iter().map(|&l| l as u64).sum();
    ((2 * sum + n) / (2 * n)) as u8
}

pub fn aggregate_daily_label(
    responses: &[EmaResponse],
    tz: Tz,
    reducer: LabelReducer,
) -> Vec<DailyLabel> {
    let mut days: BTreeMap<(&str, NaiveDate), Vec<&EmaResponse>> = BTreeMap::new();
    for r in responses {
        days.entry((r.user_id.as_str(), r.at.local_date(tz)))
            .or_default()
            .push(r);
    }
    days.into_iter()
        .map(|((user, date), mut rs)| {
            let level = match reducer {
                LabelReducer::Mean => {
                    mean_half_up(&rs.iter().map(|r| r.level).collect::<Vec<_>>())
                }
                LabelReducer::Max => rs.iter().map(|r| r.level).max().unwrap(),
                LabelReducer::Last => {
                    // Same-second ties resolve to the larger level so the
                    // result does not depend on input order.
                    rs.sort_by_key(|r| (r.at, r.level));
                    rs.last().unwrap().level
                }
            };
            DailyLabel {
                user_id: user.to_owned(),
                date,
                level,
                n_responses: rs.len() as u32,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDay {
    pub features: DailyFeatureVector,
    pub level: u8,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JoinReport {
    pub matched: usize,
    pub unlabeled_days: usize,
    pub featureless_days: usize,
}

impl JoinReport {
    pub fn dropped(&self) -> usize {
        self.unlabeled_days + self.featureless_days
    }
}

/// Inner join on (user, date). Output follows the order of `features`.
pub fn join_features_labels(
    features: &[DailyFeatureVector],
    labels: &[DailyLabel],
) -> (Vec<LabeledDay>, JoinReport) {
    let by_key: BTreeMap<(&str, NaiveDate), u8> = labels
        .iter()
        .map(|l| ((l.user_id.as_str(), l.date), l.level))
        .collect();
    let mut report = JoinReport::default();
    let mut out = Vec::new();
    for f in features {
        match by_key.get(&(f.user_id.as_str(), f.date)) {
            Some(&level) => out.push(LabeledDay {
                features: f.clone(),
                level,
            }),
            None => report.unlabeled_days += 1,
        }
    }
    report.matched = out.len();
    report.featureless_days = by_key.len() - report.matched;
    (out, report)
}

/// Groups labeled days by user, each user's days in date order.
pub fn group_by_user(days: &[LabeledDay]) -> BTreeMap<String, Vec<LabeledDay>> {
    let mut out: BTreeMap<String, Vec<LabeledDay>> = BTreeMap::new();
    for d in days {
        out.entry(d.features.user_id.clone()).or_default().push(d.clone());
    }
    for v in out.values_mut() {
        v.sort_by_key(|d| d.features.date);
    }
    out
}

pub fn write_features_csv<W: Write>(w: W, rows: &[DailyFeatureVector]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["user_id", "date"];
    header.extend(FEATURE_NAMES);
    wr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.user_id.clone(), r.date.to_string()];
        rec.extend(r.components().iter().map(u64::to_string));
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(|e| Error::io("writing features", e))
}

pub fn write_labels_csv<W: Write>(w: W, rows: &[DailyLabel]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user_id", "date", "level", "n_responses"])?;
    for r in rows {
        wr.write_record([
            r.user_id.clone(),
            r.date.to_string(),
            r.level.to_string(),
            r.n_responses.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("writing labels", e))
}

fn schema(msg: String) -> Error {
    Error::Schema(msg)
}

pub fn read_features_csv<R: Read>(r: R) -> Result<Vec<DailyFeatureVector>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 + N_FEATURES {
            return Err(schema(format!("features line {line}: expected 13 columns")));
        }
        let date = rec[1]
            .parse()
            .map_err(|_| schema(format!("features line {line}: bad date")))?;
        let mut comps = [0u64; N_FEATURES];
        for (i, c) in comps.iter_mut().enumerate() {
            *c = rec[2 + i]
                .parse()
                .map_err(|_| schema(format!("features line {line}: bad {}", FEATURE_NAMES[i])))?;
        }
        let mut freq = [0; 5];
        let mut time = [0; 5];
        freq.copy_from_slice(&comps[..5]);
        time.copy_from_slice(&comps[5..10]);
        out.push(DailyFeatureVector {
            user_id: rec[0].to_owned(),
            date,
            freq,
            time,
            unique_app_count: comps[10],
        });
    }
    Ok(out)
}

pub fn read_labels_csv<R: Read>(r: R) -> Result<Vec<DailyLabel>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(schema(format!("labels line {line}: expected 4 columns")));
        }
        let bad = |what: &str| schema(format!("labels line {line}: bad {what}"));
        let level: u8 = rec[2].parse().map_err(|_| bad("level"))?;
        if !(1..=5).contains(&level) {
            return Err(bad("level"));
        }
        out.push(DailyLabel {
            user_id: rec[0].to_owned(),
            date: rec[1].parse().map_err(|_| bad("date"))?,
            level,
            n_responses: rec[3].parse().map_err(|_| bad("n_responses"))?,
        });
    }
    Ok(out)
}
