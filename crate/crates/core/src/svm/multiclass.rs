use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::{solve_smo, BinarySvmModel, KernelSpec, SvmParams};

/// One binary machine of a one-vs-one ensemble. A non-negative decision
/// value is a vote for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: u8,
    pub negative: u8,
    pub model: BinarySvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    /// Sorted distinct training labels.
    pub classes: Vec<u8>,
    /// One machine per class pair `(a, b)` with `a < b`, in lexicographic
    /// order; `a` takes the positive role.
    pub pairwise: Vec<PairModel>,
}

impl MulticlassModel {
    pub fn converged(&self) -> bool {
        self.pairwise.iter().all(|p| p.model.converged)
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        predict_multiclass(self, x)
    }
}

/// Trains one machine per pair of classes on that pair's examples only.
pub fn train_multiclass(
    points: &[Vec<f64>],
    labels: &[u8],
    kernel: &KernelSpec,
    params: &SvmParams,
) -> Result<MulticlassModel> {
    if points.len() != labels.len() {
        return Err(Error::Svm(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let classes: Vec<u8> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "need at least two classes, found {:?}",
            classes
        )));
    }
    let mut pairwise = Vec::with_capacity(classes.len() * (classes.len() - 1) / 2);
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (x, &l) in points.iter().zip(labels) {
                if l == a || l == b {
                    xs.push(x.clone());
                    ys.push(if l == a { 1.0 } else { -1.0 });
                }
            }
            pairwise.push(PairModel {
                positive: a,
                negative: b,
                model: solve_smo(&xs, &ys, kernel, params)?,
            });
        }
    }
    Ok(MulticlassModel { classes, pairwise })
}

/// Tallies pairwise outcomes `(winner, |decision value|)` over `classes`.
///
/// Most votes wins; ties go to the larger summed margin of the votes each
/// class won, then to the smaller label.
pub fn vote(classes: &[u8], outcomes: &[(u8, f64)]) -> u8 {
    let mut tally: Vec<(u8, usize, f64)> = classes.iter().map(|&c| (c, 0, 0.0)).collect();
    for &(winner, margin) in outcomes {
        if let Some(t) = tally.iter_mut().find(|t| t.0 == winner) {
            t.1 += 1;
            t.2 += margin;
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| {
            a.1.cmp(&b.1)
                .then(a.2.total_cmp(&b.2))
                .then(b.0.cmp(&a.0))
        })
        .map(|t| t.0)
        .expect("at least one class")
}

pub fn predict_multiclass(m: &MulticlassModel, x: &[f64]) -> Result<u8> {
    let outcomes = m
        .pairwise
        .iter()
        .map(|p| {
            let dv = p.model.decision_value(x)?;
            Ok((if dv >= 0.0 { p.positive } else { p.negative }, dv.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vote(&m.classes, &outcomes))
}
