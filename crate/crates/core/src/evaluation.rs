//! Per-user and pooled evaluation, metrics and reports.
//!
//! A user's days are split into a training and a test part. Model selection
//! (grid search with k-fold cross-validation) sees only the training part;
//! the selected model is retrained on it and scored on the test part. The
//! pooled model instead cross-validates over every user's days at once.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{group_by_user, DailyFeatureVector, LabeledDay};
use crate::model_selection::{
    cross_validate_detailed, grid_search, Classifier, FoldSpec, Grid, GridPoint, SelectionResult,
};
use crate::svm::{KernelSpec, SvmParams};
use crate::taxonomy::AppCategory;

/// Users with fewer labeled days are not evaluated.
pub const MIN_LABELED_DAYS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    Chronological,
    RandomStratified,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chronological" => Ok(SplitMode::Chronological),
            "random_stratified" => Ok(SplitMode::RandomStratified),
            other => Err(Error::Config(format!(
                "unknown split mode {other:?} (expected chronological or random_stratified)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub mode: SplitMode,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            mode: SplitMode::Chronological,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Training-set size for `n` samples: `⌈fraction·n⌉`, leaving at least
    /// one test sample.
    pub fn n_train(&self, n: usize) -> usize {
        let t = (self.train_fraction * n as f64 - 1e-9).ceil() as usize;
        t.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// Index sets of a train/test split, each in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `labels.len()` date-ordered samples.
///
/// Chronological mode takes the earliest days for training. Stratified
/// mode shuffles each class and interleaves classes by relative rank, so
/// every class is spread over train and test in proportion.
pub fn split_train_test(labels: &[u8], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = labels.len();
    if n < 4 {
        return Err(Error::Evaluation(format!("need at least 4 labeled days, got {n}")));
    }
    let n_train = spec.n_train(n);
    let order: Vec<usize> = match spec.mode {
        SplitMode::Chronological => (0..n).collect(),
        SplitMode::RandomStratified => {
            let classes: BTreeSet<u8> = labels.iter().copied().collect();
            if classes.len() < 2 {
                return Err(Error::Evaluation(
                    "stratified split needs at least 2 classes".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut keyed: Vec<(f64, u8, usize)> = Vec::with_capacity(n);
            for c in classes {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                idx.shuffle(&mut rng);
                let m = idx.len() as f64;
                for (rank, i) in idx.into_iter().enumerate() {
                    keyed.push(((rank as f64 + 0.5) / m, c, i));
                }
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|k| k.2).collect()
        }
    };
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Accuracy plus precision and recall macro-averaged over the classes
/// present in `truth`. A class never predicted has precision 0.
pub fn compute_metrics(truth: &[u8], pred: &[u8]) -> Result<Metrics> {
    if truth.len() != pred.len() {
        return Err(Error::Evaluation(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Evaluation("no labels to score".into()));
    }
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let classes: BTreeSet<u8> = truth.iter().copied().collect();
    let (mut precision, mut recall) = (0.0, 0.0);
    for &c in &classes {
        let tp = truth.iter().zip(pred).filter(|&(&t, &p)| t == c && p == c).count() as f64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as f64;
        let actual = truth.iter().filter(|&&t| t == c).count() as f64;
        if predicted > 0.0 {
            precision += tp / predicted;
        }
        recall += tp / actual;
    }
    let k = classes.len() as f64;
    Ok(Metrics {
        accuracy: correct as f64 / truth.len() as f64,
        precision: precision / k,
        recall: recall / k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserResult {
    pub user_id: String,
    pub cv_accuracy: f64,
    pub test_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub kernel: KernelSpec,
    pub c: f64,
    /// The final model predicts a constant because training held one class.
    pub fallback: bool,
    pub converged: bool,
}

/// A user's selected and retrained model with its scores.
#[derive(Debug, Clone)]
pub struct UserFit {
    pub result: UserResult,
    pub selection: SelectionResult,
    pub model: Classifier,
}

pub fn points_and_labels(days: &[LabeledDay]) -> (Vec<Vec<f64>>, Vec<u8>) {
    days.iter().map(|d| (d.features.to_vector(), d.level)).unzip()
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Selects, retrains and tests one user's model. `days` must be in date
/// order and belong to one user.
pub fn evaluate_user(
    days: &[LabeledDay],
    grid: &Grid,
    base: &SvmParams,
    folds: &FoldSpec,
    split: &SplitSpec,
) -> Result<UserFit> {
    let user_id = days
        .first()
        .map(|d| d.features.user_id.clone())
        .ok_or_else(|| Error::Evaluation("no days to evaluate".into()))?;
    let (points, labels) = points_and_labels(days);
    let parts = split_train_test(&labels, split)?;
    let (train_x, train_y) = (pick(&points, &parts.train), pick(&labels, &parts.train));
    let selection = grid_search(&train_x, &train_y, grid, base, folds)?;
    let model = Classifier::fit(&train_x, &train_y, &selection.best.kernel, &selection.params)?;
    let pred = parts
        .test
        .iter()
        .map(|&i| model.predict(&points[i]))
        .collect::<Result<Vec<_>>>()?;
    let m = compute_metrics(&pick(&labels, &parts.test), &pred)?;
    Ok(UserFit {
        result: UserResult {
            user_id,
            cv_accuracy: selection.cv_accuracy,
            test_accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            n_train: parts.train.len(),
            n_test: parts.test.len(),
            kernel: selection.best.kernel,
            c: selection.best.c,
            fallback: model.is_fallback(),
            converged: model.converged(),
        },
        selection,
        model,
    })
}

/// Cross-validated scores of one model selected over all users' days
/// together. Accuracy is the selected point's mean fold accuracy;
/// precision and recall come from its out-of-fold predictions.
pub fn evaluate_pooled(
    days: &[LabeledDay],
    grid: &Grid,
    base: &SvmParams,
    folds: &FoldSpec,
) -> Result<UserResult> {
    let users: BTreeSet<&str> = days.iter().map(|d| d.features.user_id.as_str()).collect();
    if users.len() < 2 {
        return Err(Error::Evaluation(format!(
            "pooling needs at least 2 users, got {}",
            users.len()
        )));
    }
    let (points, labels) = points_and_labels(days);
    let selection = grid_search(&points, &labels, grid, base, folds)?;
    let cv = cross_validate_detailed(&points, &labels, &selection.best.kernel, &selection.params, folds)?;
    let m = compute_metrics(&labels, &cv.predictions)?;
    let model = Classifier::fit(&points, &labels, &selection.best.kernel, &selection.params)?;
    Ok(UserResult {
        user_id: "pooled".into(),
        cv_accuracy: selection.cv_accuracy,
        test_accuracy: selection.cv_accuracy,
        precision: m.precision,
        recall: m.recall,
        n_train: points.len(),
        n_test: 0,
        kernel: selection.best.kernel,
        c: selection.best.c,
        fallback: model.is_fallback(),
        converged: model.converged(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryUsage {
    pub category: AppCategory,
    pub uses_per_day: f64,
    pub seconds_per_use: f64,
}

/// Mean daily uses over all (user, day) vectors and mean seconds per use,
/// for each featured category.
pub fn category_usage_summary(days: &[DailyFeatureVector]) -> Vec<CategoryUsage> {
    AppCategory::FEATURED
        .iter()
        .map(|&category| {
            let uses: u64 = days.iter().map(|d| d.freq_of(category)).sum();
            let secs: u64 = days.iter().map(|d| d.time_of(category)).sum();
            CategoryUsage {
                category,
                uses_per_day: if days.is_empty() { 0.0 } else { uses as f64 / days.len() as f64 },
                seconds_per_use: if uses == 0 { 0.0 } else { secs as f64 / uses as f64 },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub cv_accuracy: f64,
    pub test_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<UserResult>,
    pub averages: Averages,
    pub pooled: Option<UserResult>,
    /// Users below the minimum-days gate, with their labeled-day counts.
    pub skipped: Vec<(String, usize)>,
    pub category_usage: Vec<CategoryUsage>,
}

fn averages(rows: &[UserResult]) -> Averages {
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&UserResult) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Averages {
        cv_accuracy: mean(|r| r.cv_accuracy),
        test_accuracy: mean(|r| r.test_accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationConfig {
    pub grid: Grid,
    pub base: SvmParams,
    pub folds: FoldSpec,
    pub split: SplitSpec,
    pub pooled: bool,
    pub min_days: usize,
}

impl EvaluationConfig {
    pub fn new() -> Self {
        EvaluationConfig {
            pooled: true,
            min_days: MIN_LABELED_DAYS,
            ..Default::default()
        }
    }
}

/// Per-user models for every user passing the minimum-days gate, the pooled
/// model, and the usage summary over all featured days.
pub fn evaluate_cohort(
    days: &[LabeledDay],
    features: &[DailyFeatureVector],
    cfg: &EvaluationConfig,
) -> Result<(EvaluationReport, Vec<UserFit>)> {
    let by_user = group_by_user(days);
    let mut skipped = Vec::new();
    let mut eligible = Vec::new();
    for (user, d) in &by_user {
        if d.len() < cfg.min_days.max(4) {
            skipped.push((user.clone(), d.len()));
        } else {
            eligible.push(d);
        }
    }
    let fits = eligible
        .par_iter()
        .map(|d| evaluate_user(d, &cfg.grid, &cfg.base, &cfg.folds, &cfg.split))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<UserResult> = fits.iter().map(|f| f.result.clone()).collect();
    let pooled = if cfg.pooled && by_user.len() >= 2 {
        let all: Vec<LabeledDay> = by_user.values().flatten().cloned().collect();
        Some(evaluate_pooled(&all, &cfg.grid, &cfg.base, &cfg.folds)?)
    } else {
        None
    };
    Ok((
        EvaluationReport {
            averages: averages(&rows),
            rows,
            pooled,
            skipped,
            category_usage: category_usage_summary(features),
        },
        fits,
    ))
}

const CSV_HEADER: [&str; 12] = [
    "user_id",
    "cv_accuracy",
    "test_accuracy",
    "precision",
    "recall",
    "n_train",
    "n_test",
    "kernel",
    "c",
    "fallback",
    "converged",
    "note",
];

fn csv_row(r: &UserResult) -> Vec<String> {
    vec![
        r.user_id.clone(),
        format!("{:.6}", r.cv_accuracy),
        format!("{:.6}", r.test_accuracy),
        format!("{:.6}", r.precision),
        format!("{:.6}", r.recall),
        r.n_train.to_string(),
        r.n_test.to_string(),
        r.kernel.to_string(),
        r.c.to_string(),
        r.fallback.to_string(),
        r.converged.to_string(),
        String::new(),
    ]
}

/// One row per user, then `average` and, when present, `pooled`.
pub fn write_report_csv<W: Write>(w: W, report: &EvaluationReport) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in &report.rows {
        wr.write_record(csv_row(r))?;
    }
    let a = &report.averages;
    let mut avg = vec!["average".to_string()];
    avg.extend([a.cv_accuracy, a.test_accuracy, a.precision, a.recall].map(|v| format!("{v:.6}")));
    avg.extend([
        report.rows.iter().map(|r| r.n_train).sum::<usize>().to_string(),
        report.rows.iter().map(|r| r.n_test).sum::<usize>().to_string(),
    ]);
    avg.extend(std::iter::repeat_n(String::new(), 4));
    let skipped: Vec<String> = report.skipped.iter().map(|(u, n)| format!("{u}:{n}")).collect();
    avg.push(if skipped.is_empty() {
        String::new()
    } else {
        format!("skipped {}", skipped.join(" "))
    });
    wr.write_record(avg)?;
    if let Some(p) = &report.pooled {
        wr.write_record(csv_row(p))?;
    }
    wr.flush().map_err(|e| Error::io("writing report", e))
}

fn pct(v: f64) -> String {
    format!("{:.3}%", 100.0 * v)
}

/// Fixed-width table of cross-validation, test accuracy, precision and
/// recall per user, with averages and the pooled model below.
pub fn render_report_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 5]| {
        out.push_str(&format!(
            "{:<12} {:>10} {:>10} {:>10} {:>10}\n",
            cells[0], cells[1], cells[2], cells[3], cells[4]
        ));
    };
    line(&mut out, ["user", "cv_acc", "test_acc", "precision", "recall"]);
    out.push_str(&"-".repeat(56));
    out.push('\n');
    for r in &report.rows {
        let flag = if r.fallback { format!("{}*", r.user_id) } else { r.user_id.clone() };
        line(
            &mut out,
            [&flag, &pct(r.cv_accuracy), &pct(r.test_accuracy), &pct(r.precision), &pct(r.recall)],
        );
    }
    out.push_str(&"-".repeat(56));
    out.push('\n');
    let a = &report.averages;
    line(
        &mut out,
        ["average", &pct(a.cv_accuracy), &pct(a.test_accuracy), &pct(a.precision), &pct(a.recall)],
    );
    if let Some(p) = &report.pooled {
        line(&mut out, ["pooled", &pct(p.cv_accuracy), "-", &pct(p.precision), &pct(p.recall)]);
    }
    if report.rows.iter().any(|r| r.fallback) {
        out.push_str("* single-class training data, majority model\n");
    }
    for (u, n) in &report.skipped {
        out.push_str(&format!("skipped {u}: {n} labeled days\n"));
    }
    out
}

/// Grid table and selected point, as printed by `train`.
pub fn render_selection(user: &str, sel: &SelectionResult) -> String {
    let mut out = format!("user {user}\n");
    for (gp, acc) in &sel.table {
        out.push_str(&format!("  {:<28} C={:<8} {:.6}\n", gp.kernel.to_string(), gp.c, acc));
    }
    let GridPoint { kernel, c } = sel.best;
    out.push_str(&format!("  selected {kernel} C={c} cv_accuracy={:.6}", sel.cv_accuracy));
    if sel.folds_reduced {
        out.push_str(" (fewer folds than requested)");
    }
    out.push('\n');
    out
}

/// Per-class confusion counts, `counts[(truth, pred)]`.
pub fn confusion_matrix(truth: &[u8], pred: &[u8]) -> BTreeMap<(u8, u8), usize> {
    let mut m = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *m.entry((t, p)).or_default() += 1;
    }
    m
}
