//! Exhaustive solver for tiny SVM duals, used to check SMO.
//!
//! Every multiplier is either 0, C, or free. For each of the `3ⁿ` patterns
//! the free multipliers and the bias solve the linear stationarity system
//!
//! ```text
//! Σ_{j∈F} yᵢyⱼKᵢⱼ αⱼ + yᵢ b = 1 − C Σ_{j∈U} yᵢyⱼKᵢⱼ    (i ∈ F)
//! Σ_{j∈F} yⱼ αⱼ           =   − C Σ_{j∈U} yⱼ
//! ```
//!
//! where `U` holds the multipliers at C. Feasible candidates are scored by
//! the dual objective and the best is returned. The dual is concave, so the
//! best feasible stationary pattern is the optimum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::svm::KernelSpec;

pub const MAX_ORACLE_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub objective: f64,
    pub alphas: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Zero,
    Upper,
    Free,
}

pub fn brute_force_svm_oracle(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &KernelSpec,
    c: f64,
) -> Result<OracleSolution> {
    let n = points.len();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::Synth(format!(
            "oracle is limited to {MAX_ORACLE_POINTS} points, got {n}"
        )));
    }
    if n != labels.len() {
        return Err(Error::Synth("points and labels differ in length".into()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::DegenerateLabels(
            "oracle needs both classes".into(),
        ));
    }
    let kernel = kernel.validated()?;
    let q = DMatrix::from_fn(n, n, |i, j| {
        labels[i] * labels[j] * kernel.eval(&points[i], &points[j])
    });
    let objective = |a: &[f64]| {
        let av = DVector::from_column_slice(a);
        av.sum() - 0.5 * (av.transpose() * &q * &av)[(0, 0)]
    };
    let feas_tol = 1e-9 * c.max(1.0);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut states = vec![State::Zero; n];
    for code in 0..3usize.pow(n as u32) {
        let mut rest = code;
        for s in states.iter_mut() {
            *s = [State::Zero, State::Upper, State::Free][rest % 3];
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| states[i] == State::Free).collect();
        let mut alpha: Vec<f64> = states
            .iter()
            .map(|s| if *s == State::Upper { c } else { 0.0 })
            .collect();

        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = labels[i];
                rhs[r] = 1.0 - (0..n).map(|j| q[(i, j)] * alpha[j]).sum::<f64>();
            }
            for (s, &j) in free.iter().enumerate() {
                a[(m, s)] = labels[j];
            }
            rhs[m] = -(0..n).map(|j| labels[j] * alpha[j]).sum::<f64>();

            let Ok(sol) = a.clone().svd(true, true).solve(&rhs, 1e-12) else {
                continue;
            };
            // Inconsistent singular systems have no stationary point here.
            if (&a * &sol - &rhs).amax() > 1e-8 * (1.0 + rhs.amax()) {
                continue;
            }
            if free.iter().enumerate().any(|(r, _)| sol[r] < -feas_tol || sol[r] > c + feas_tol) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        if alpha.iter().zip(labels).map(|(a, y)| a * y).sum::<f64>().abs() > feas_tol * n as f64 {
            continue;
        }
        let obj = objective(&alpha);
        if best.as_ref().is_none_or(|(o, _)| obj > *o) {
            best = Some((obj, alpha));
        }
    }
    let (objective, alphas) = best.expect("all-zero multipliers are always feasible");
    let bias = bias_for(&q, labels, &alphas, c);
    Ok(OracleSolution {
        objective,
        alphas,
        bias,
    })
}

/// Mean margin target over free multipliers, else the midpoint of the
/// feasible bias interval.
fn bias_for(q: &DMatrix<f64>, labels: &[f64], alphas: &[f64], c: f64) -> f64 {
    let n = alphas.len();
    let tol = 1e-9 * c.max(1.0);
    let mut free = Vec::new();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        // yᵢ Σⱼ Qᵢⱼαⱼ = Σⱼ αⱼyⱼKᵢⱼ
        let g: f64 = labels[i] * (0..n).map(|j| q[(i, j)] * alphas[j]).sum::<f64>();
        let target = labels[i] - g;
        if alphas[i] > tol && alphas[i] < c - tol {
            free.push(target);
        } else if (alphas[i] <= tol) == (labels[i] > 0.0) {
            lo = lo.max(target);
        } else {
            hi = hi.min(target);
        }
    }
    if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}
