use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::{KernelSpec, Scaler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Soft-margin constant.
    pub c: f64,
    /// Tolerance on the KKT conditions of the returned solution.
    pub kkt_tol: f64,
    /// Maximum number of full sweeps over the training set.
    pub max_passes: usize,
    /// Multipliers at or below this are treated as zero.
    pub eps: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kkt_tol: 1e-3,
            max_passes: 100,
            eps: 1e-8,
        }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> SvmParams {
        SvmParams {
            c,
            ..SvmParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.c) {
            return Err(Error::Svm(format!("C must be positive, got {}", self.c)));
        }
        if !positive(self.kkt_tol) || !positive(self.eps) {
            return Err(Error::Svm("tolerances must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::Svm("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dense row-major Gram matrix.
pub fn gram_matrix(points: &[Vec<f64>], kernel: &KernelSpec) -> Vec<f64> {
    let n = points.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&points[i], &points[j]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// `W(α) = Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ` for a row-major Gram matrix.
pub fn dual_objective(gram: &[f64], labels: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub box_ok: bool,
    /// `|Σ αᵢ yᵢ|`
    pub equality_residual: f64,
    /// Largest violation of the complementary-slackness conditions.
    pub max_violation: f64,
}

impl KktReport {
    pub fn holds(&self, kkt_tol: f64, equality_tol: f64) -> bool {
        self.box_ok && self.equality_residual <= equality_tol && self.max_violation <= kkt_tol
    }
}

/// Checks a dual solution against the optimality conditions:
/// `yᵢf(xᵢ) ≥ 1` when `αᵢ = 0`, `yᵢf(xᵢ) ≤ 1` when `αᵢ = C`, and
/// `yᵢf(xᵢ) = 1` in between.
pub fn check_kkt(gram: &[f64], labels: &[f64], alphas: &[f64], bias: f64, c: f64, eps: f64) -> KktReport {
    let n = alphas.len();
    let box_ok = alphas.iter().all(|&a| (0.0..=c).contains(&a));
    let equality_residual = alphas.iter().zip(labels).map(|(a, y)| a * y).sum::<f64>().abs();
    let mut max_violation: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alphas[j] * labels[j] * gram[j * n + i]).sum::<f64>() + bias;
        let margin = labels[i] * f;
        let v = if alphas[i] <= eps {
            (1.0 - margin).max(0.0)
        } else if alphas[i] >= c - eps {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        max_violation = max_violation.max(v);
    }
    KktReport {
        box_ok,
        equality_residual,
        max_violation,
    }
}

fn validate_problem(points: &[Vec<f64>], labels: &[f64]) -> Result<()> {
    if points.len() != labels.len() {
        return Err(Error::Svm(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let Some(first) = points.first() else {
        return Err(Error::DegenerateLabels("empty training set".into()));
    };
    for p in points {
        if p.len() != first.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Svm("non-finite feature value".into()));
        }
    }
    if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::Svm(format!("binary labels must be ±1, got {y}")));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::DegenerateLabels(
            "binary training needs both classes".into(),
        ));
    }
    Ok(())
}

/// SMO over a precomputed Gram matrix. Sweeps over every index alternate
/// with runs on the most violating pair, in a fixed index order so results
/// are reproducible.
struct Smo<'a> {
    n: usize,
    gram: &'a [f64],
    y: &'a [f64],
    c: f64,
    tol: f64,
    eps: f64,
    diag: Vec<f64>,
    alpha: Vec<f64>,
    /// `Σⱼ αⱼyⱼKᵢⱼ − yᵢ`: the error at each point, bias excluded.
    f: Vec<f64>,
    /// Points whose multiplier can move to raise `yᵢ f(xᵢ)`.
    up: Vec<bool>,
    /// Points whose multiplier can move to lower it.
    low: Vec<bool>,
    /// Smallest error over `up` and largest over `low`, lowest index on
    /// ties; `usize::MAX` for an empty set.
    ext: (usize, f64, usize, f64),
    steps: usize,
}

impl<'a> Smo<'a> {
    fn new(gram: &'a [f64], y: &'a [f64], params: &SvmParams) -> Self {
        let n = y.len();
        let mut smo = Smo {
            n,
            gram,
            y,
            c: params.c,
            // With the extremes less than 2·tol apart, any bias between them
            // leaves every margin within kkt_tol of its target.
            tol: 0.45 * params.kkt_tol,
            eps: params.eps,
            diag: (0..n).map(|i| gram[i * n + i]).collect(),
            alpha: vec![0.0; n],
            f: y.iter().map(|v| -v).collect(),
            up: vec![false; n],
            low: vec![false; n],
            ext: (usize::MAX, 0.0, usize::MAX, 0.0),
            steps: 0,
        };
        (0..n).for_each(|i| smo.set_alpha(i, 0.0));
        smo.find_extremes();
        smo
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn row(&self, i: usize) -> &'a [f64] {
        &self.gram[i * self.n..(i + 1) * self.n]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn set_alpha(&mut self, i: usize, a: f64) {
        self.alpha[i] = a;
        let (below_c, above_0) = (a < self.c, a > 0.0);
        if self.y[i] > 0.0 {
            (self.up[i], self.low[i]) = (below_c, above_0);
        } else {
            (self.up[i], self.low[i]) = (above_0, below_c);
        }
    }

    /// Σⱼ αⱼ yⱼ K(xⱼ, xᵢ), without the bias.
    fn output(&self, i: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(&self.alpha)
            .zip(self.y)
            .filter(|((_, &a), _)| a != 0.0)
            .map(|((k, a), y)| a * y * k)
            .sum()
    }

    fn find_extremes(&mut self) {
        let (mut iu, mut fu) = (usize::MAX, f64::INFINITY);
        let (mut il, mut fl) = (usize::MAX, f64::NEG_INFINITY);
        for (i, ((&fi, &up), &low)) in self.f.iter().zip(&self.up).zip(&self.low).enumerate() {
            if up && fi < fu {
                (iu, fu) = (i, fi);
            }
            if low && fi > fl {
                (il, fl) = (i, fi);
            }
        }
        self.ext = (iu, fu, il, fl);
    }

    /// Recomputes the errors from scratch, discarding accumulated roundoff.
    fn refresh_errors(&mut self) {
        for i in 0..self.n {
            self.f[i] = self.output(i) - self.y[i];
        }
        self.find_extremes();
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (c, eps) = (self.c, self.eps);
        let (alph1, alph2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.f[i1], self.f[i2]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((alph2 - alph1).max(0.0), (c + alph2 - alph1).min(c))
        } else {
            ((alph1 + alph2 - c).max(0.0), (alph1 + alph2).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (alph2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Non-positive curvature along the constraint line: take the
            // better end point.
            let f1 = y1 * e1 - alph1 * k11 - s * alph2 * k12;
            let f2 = y2 * e2 - s * alph1 * k12 - alph2 * k22;
            let obj = |a2: f64| {
                let a1 = alph1 + s * (alph2 - a2);
                a1 * f1 + a2 * f2 + 0.5 * a1 * a1 * k11 + 0.5 * a2 * a2 * k22 + s * a2 * a1 * k12
            };
            let (lobj, hobj) = (obj(lo), obj(hi));
            if lobj < hobj - eps {
                lo
            } else if lobj > hobj + eps {
                hi
            } else {
                alph2
            }
        };
        if a2 < eps {
            a2 = 0.0;
        } else if a2 > c - eps {
            a2 = c;
        }
        if (a2 - alph2).abs() < eps * (a2 + alph2 + eps) {
            return false;
        }
        let mut a1 = alph1 + s * (alph2 - a2);
        if a1 < eps {
            a2 += s * a1;
            a1 = 0.0;
        } else if a1 > c - eps {
            a2 += s * (a1 - c);
            a1 = c;
        }
        a2 = a2.clamp(0.0, c);

        let (d1, d2) = (y1 * (a1 - alph1), y2 * (a2 - alph2));
        self.set_alpha(i1, a1);
        self.set_alpha(i2, a2);
        // Update the errors and track the extremes in the same pass.
        let (mut iu, mut fu) = (usize::MAX, f64::INFINITY);
        let (mut il, mut fl) = (usize::MAX, f64::NEG_INFINITY);
        let (r1, r2) = (self.row(i1), self.row(i2));
        let rows = self.f.iter_mut().zip(r1).zip(r2).zip(&self.up).zip(&self.low);
        for (i, ((((f, k1), k2), &up), &low)) in rows.enumerate() {
            *f += d1 * k1 + d2 * k2;
            if up && *f < fu {
                (iu, fu) = (i, *f);
            }
            if low && *f > fl {
                (il, fl) = (i, *f);
            }
        }
        self.ext = (iu, fu, il, fl);
        self.steps += 1;
        true
    }

    /// A violating pair while the optimality gap exceeds `2·tol`: the
    /// extreme of the up set, and the low-set partner promising the largest
    /// gain in the objective.
    fn worst_pair(&self) -> Option<(usize, usize)> {
        let (iu, fu, il, fl) = self.ext;
        if iu == usize::MAX || il == usize::MAX || fl - fu <= 2.0 * self.tol {
            return None;
        }
        let kuu = self.diag[iu];
        let (mut best, mut best_gain) = (usize::MAX, f64::NEG_INFINITY);
        let members = self.f.iter().zip(&self.low).zip(&self.diag).zip(self.row(iu));
        for (j, (((&fj, &low), &kjj), &kuj)) in members.enumerate() {
            let gap = fj - fu;
            if !low || gap <= 0.0 {
                continue;
            }
            let gain = gap * gap / (kuu + kjj - 2.0 * kuj).max(1e-12);
            if gain > best_gain {
                (best, best_gain) = (j, gain);
            }
        }
        (best != usize::MAX).then_some((iu, best))
    }

    /// Pairs `i2` with the extreme point it violates most against.
    fn examine(&mut self, i2: usize) -> bool {
        let f2 = self.f[i2];
        let (iu, fu, il, fl) = self.ext;
        let mut partner: Option<(usize, f64)> = None;
        if self.up[i2] && il != usize::MAX && fl - f2 > 2.0 * self.tol {
            partner = Some((il, fl - f2));
        }
        if self.low[i2] && iu != usize::MAX && f2 - fu > 2.0 * self.tol && partner.is_none_or(|(_, g)| f2 - fu > g) {
            partner = Some((iu, f2 - fu));
        }
        let Some((i1, _)) = partner else {
            return false;
        };
        if self.take_step(i1, i2) {
            return true;
        }
        for i1 in 0..self.n {
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        for i1 in 0..self.n {
            if !self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Bias from the current multipliers: the mean of `yᵢ − Σⱼ αⱼyⱼKⱼᵢ`
    /// over free multipliers, else the midpoint of the interval allowed by
    /// the bound ones.
    fn final_bias(&self) -> f64 {
        let mut free_sum = 0.0;
        let mut free_n = 0usize;
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..self.n {
            let target = self.y[i] - self.output(i);
            let a = self.alpha[i];
            if a > self.eps && a < self.c - self.eps {
                free_sum += target;
                free_n += 1;
            } else if (a <= self.eps) == (self.y[i] > 0.0) {
                lower = lower.max(target);
            } else {
                upper = upper.min(target);
            }
        }
        if free_n > 0 {
            free_sum / free_n as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else {
            upper
        }
    }
}

/// Solves the dual on points that are already scaled.
pub fn solve_dual(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &KernelSpec,
    params: &SvmParams,
) -> Result<DualSolution> {
    params.validate()?;
    kernel.validated()?;
    validate_problem(points, labels)?;
    let gram = gram_matrix(points, kernel);
    Ok(solve_gram(&gram, labels, params))
}

pub(crate) fn solve_gram(gram: &[f64], labels: &[f64], params: &SvmParams) -> DualSolution {
    let n = labels.len();
    let mut smo = Smo::new(gram, labels, params);
    // Pair updates outside full sweeps are charged one pass per 3·n, with
    // small problems charged as if n were 100.
    let step_cap = params.max_passes.saturating_mul(3 * n.max(100));
    let mut sweeps = 0;
    let converged = 'outer: loop {
        let steps_before = smo.steps;
        let mut examine_all = true;
        loop {
            let mut changed = 0;
            if examine_all {
                if sweeps >= params.max_passes {
                    break 'outer false;
                }
                sweeps += 1;
                smo.refresh_errors();
                for i in 0..n {
                    if smo.examine(i) {
                        changed += 1;
                    }
                }
            } else {
                while let Some((i1, i2)) = smo.worst_pair() {
                    if !smo.take_step(i1, i2) || smo.steps > step_cap {
                        break;
                    }
                    changed += 1;
                }
            }
            if smo.steps > step_cap {
                break 'outer false;
            }
            if examine_all && changed == 0 {
                break;
            }
            examine_all = !examine_all;
        }
        let report = check_kkt(gram, labels, &smo.alpha, smo.final_bias(), params.c, params.eps);
        if report.max_violation <= params.kkt_tol {
            break true;
        }
        if smo.steps == steps_before {
            // No pair can make progress but the conditions still fail.
            break false;
        }
    };
    DualSolution {
        bias: smo.final_bias(),
        alphas: smo.alpha,
        converged,
        sweeps,
    }
}

/// A trained binary machine. Support points are stored already scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub scaler: Scaler,
    pub support_points: Vec<Vec<f64>>,
    pub support_alphas: Vec<f64>,
    pub support_labels: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl BinarySvmModel {
    /// Decision value for a point already in scaled coordinates.
    pub fn decision_value_scaled(&self, z: &[f64]) -> f64 {
        self.support_points
            .iter()
            .zip(self.support_alphas.iter().zip(&self.support_labels))
            .map(|(sv, (a, y))| a * y * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.decision_value_scaled(&self.scaler.transform(x)?))
    }

    /// `+1` when the decision value is non-negative, else `−1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(x)? >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Dual objective; non-support multipliers are zero and do not contribute.
    pub fn dual_objective(&self) -> f64 {
        let gram = gram_matrix(&self.support_points, &self.kernel);
        dual_objective(&gram, &self.support_labels, &self.support_alphas)
    }
}

pub fn decision_value(model: &BinarySvmModel, x: &[f64]) -> Result<f64> {
    model.decision_value(x)
}

/// Fits the scaler, solves the dual and keeps the multipliers above `eps`.
pub fn solve_smo(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &KernelSpec,
    params: &SvmParams,
) -> Result<BinarySvmModel> {
    params.validate()?;
    let kernel = kernel.validated()?;
    validate_problem(points, labels)?;
    let scaler = Scaler::fit(points)?;
    let scaled = points
        .iter()
        .map(|p| scaler.transform(p))
        .collect::<Result<Vec<_>>>()?;
    let gram = gram_matrix(&scaled, &kernel);
    let sol = solve_gram(&gram, labels, params);
    let mut model = BinarySvmModel {
        kernel,
        c: params.c,
        scaler,
        support_points: Vec::new(),
        support_alphas: Vec::new(),
        support_labels: Vec::new(),
        bias: sol.bias,
        converged: sol.converged,
    };
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > params.eps {
            model.support_points.push(scaled[i].clone());
            model.support_alphas.push(a);
            model.support_labels.push(labels[i]);
        }
    }
    Ok(model)
}
