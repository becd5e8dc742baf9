//! Linear readout: ridge regression, linear soft-margin SVM, evaluation and
//! magnitude pruning.
//!
//! Labels are ±1 inside this module; 0/1 dataset labels are mapped with
//! [`pm1`].

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ridge,
    Svm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ridge => "ridge",
            Method::Svm => "svm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub ridge_lambda: f64,
    pub svm_c: f64,
    pub svm_epochs: usize,
    /// Fraction of rows (or streams) used for training.
    pub split: f64,
    pub split_seed: u64,
    /// Constrain ridge weights to be non-negative (the bias stays free).
    pub nonnegative: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Ridge,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            svm_c: 1.0,
            svm_epochs: 200,
            split: 0.8,
            split_seed: 0,
            nonnegative: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda > 0.0) || !self.ridge_lambda.is_finite() {
            return Err(invalid("ridge_lambda", "must be > 0"));
        }
        if !(self.svm_c > 0.0) || !self.svm_c.is_finite() {
            return Err(invalid("svm_c", "must be > 0"));
        }
        if self.svm_epochs == 0 {
            return Err(invalid("svm_epochs", "must be >= 1"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(invalid("split", "must lie in (0, 1)"));
        }
        if self.nonnegative && self.method == Method::Svm {
            return Err(invalid("nonnegative", "only supported with the ridge method"));
        }
        Ok(())
    }
}

/// Weighted sum plus bias, thresholded at zero. A score of exactly zero is
/// class +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReadout {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub active_mask: Vec<bool>,
}

impl LinearReadout {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            active_mask: vec![true; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.active_mask.len()).filter(|&j| self.active_mask[j]).collect()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "sample has {} features, readout expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// ±1 prediction.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.score(x)? >= 0.0 { 1.0 } else { -1.0 })
    }

    pub fn predict_bit(&self, x: &[f64]) -> Result<u8> {
        Ok((self.score(x)? >= 0.0) as u8)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * s).collect(),
            bias: self.bias * s,
            active_mask: self.active_mask.clone(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 0/1 labels to ±1.
pub fn pm1(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| if l == 0 { -1.0 } else { 1.0 }).collect()
}

fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let d = x.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::Shape("no features".into()));
    }
    if let Some(r) = x.iter().position(|r| r.len() != d) {
        return Err(Error::Shape(format!(
            "row {r} has {} features, expected {d}",
            x[r].len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    Ok(d)
}

fn check_two_classes(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(invalid("labels", "classification labels must be ±1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Centered design matrix, column means and target mean.
fn centered(x: &[Vec<f64>], y: &[f64], cols: &[usize]) -> (DMatrix<f64>, Vec<f64>, DVector<f64>, f64) {
    let n = x.len();
    let mut means = vec![0.0; cols.len()];
    for row in x {
        for (m, &j) in means.iter_mut().zip(cols) {
            *m += row[j];
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let xc = DMatrix::from_fn(n, cols.len(), |i, k| x[i][cols[k]] - means[k]);
    let ym = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ym));
    (xc, means, yc, ym)
}

/// Regularized least squares on a centered design, choosing the primal
/// `(XᵀX + λI) w = Xᵀy` or dual `w = Xᵀ (XXᵀ + λI)⁻¹ y` form by size.
fn ridge_centered(xc: &DMatrix<f64>, yc: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let (n, d) = xc.shape();
    if d == 0 {
        return Ok(DVector::zeros(0));
    }
    let solve = |mut a: DMatrix<f64>, b: DVector<f64>| -> Result<DVector<f64>> {
        for k in 0..a.nrows() {
            a[(k, k)] += lambda;
        }
        a.cholesky().map(|c| c.solve(&b)).ok_or(Error::Singular)
    };
    let w = if d <= n {
        solve(xc.tr_mul(xc), xc.tr_mul(yc))?
    } else {
        xc.tr_mul(&solve(xc * xc.transpose(), yc.clone())?)
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(w)
}

fn assemble(d: usize, cols: &[usize], w: &DVector<f64>, means: &[f64], ym: f64) -> LinearReadout {
    let mut out = LinearReadout {
        weights: vec![0.0; d],
        bias: ym,
        active_mask: vec![false; d],
    };
    for (k, &j) in cols.iter().enumerate() {
        out.weights[j] = w[k];
        out.active_mask[j] = true;
        out.bias -= w[k] * means[k];
    }
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", "must be > 0"))
    }
}

/// Minimizes `Σ(w·x + b − y)² + λ‖w‖²` with the bias unregularized. Targets
/// may be any reals; a constant target yields `w = 0, b = c`.
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<LinearReadout> {
    let d = check_xy(x, y)?;
    check_lambda(lambda)?;
    if x.len() < 2 {
        return Err(Error::Degenerate("ridge needs at least 2 rows".into()));
    }
    let cols: Vec<usize> = (0..d).collect();
    let (xc, means, yc, ym) = centered(x, y, &cols);
    let w = ridge_centered(&xc, &yc, lambda)?;
    Ok(assemble(d, &cols, &w, &means, ym))
}

/// Ridge with `w ≥ 0` (bias free), by a Lawson–Hanson active-set method on
/// the regularized least-squares problem.
pub fn train_ridge_nonnegative(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<LinearReadout> {
    let d = check_xy(x, y)?;
    check_lambda(lambda)?;
    if x.len() < 2 {
        return Err(Error::Degenerate("ridge needs at least 2 rows".into()));
    }
    let all: Vec<usize> = (0..d).collect();
    let (xc, means, yc, ym) = centered(x, y, &all);
    let scale = yc.norm().max(1e-300) * xc.norm().max(1e-300);
    let tol = 1e-12 * scale;

    let mut w = DVector::<f64>::zeros(d);
    let mut passive = vec![false; d];
    let solve_passive = |passive: &[bool]| -> Result<DVector<f64>> {
        let cols: Vec<usize> = (0..d).filter(|&j| passive[j]).collect();
        let sub = xc.select_columns(&cols);
        let zp = ridge_centered(&sub, &yc, lambda)?;
        let mut z = DVector::zeros(d);
        for (k, &j) in cols.iter().enumerate() {
            z[j] = zp[k];
        }
        Ok(z)
    };
    let max_outer = 3 * d + 10;
    for _ in 0..max_outer {
        let grad = xc.tr_mul(&(&yc - &xc * &w)) - lambda * &w;
        let candidate = (0..d)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)));
        match candidate {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => return Ok(assemble(d, &all, &w, &means, ym)),
        }
        for _ in 0..=d {
            let z = solve_passive(&passive)?;
            if (0..d).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                w = z;
                break;
            }
            let alpha = (0..d)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| w[j] / (w[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            w += alpha * (&z - &w);
            for j in 0..d {
                if passive[j] && w[j] <= tol.min(1e-15) {
                    passive[j] = false;
                    w[j] = 0.0;
                }
            }
        }
    }
    Err(Error::Degenerate("non-negative ridge did not converge".into()))
}

/// `½‖w‖² + c·Σ max(0, 1 − y(w·x + b))`.
pub fn svm_objective(r: &LinearReadout, x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| (1.0 - yi * (dot(&r.weights, row) + r.bias)).max(0.0))
        .sum();
    0.5 * dot(&r.weights, &r.weights) + c * hinge
}

/// For fixed `w`, the hinge term is convex and piecewise linear in `b` with
/// kinks at `y_i − w·x_i`; its minimizers form an interval between two
/// kinks. Returns the midpoint of that interval.
fn best_bias(w: &[f64], x: &[Vec<f64>], y: &[f64]) -> f64 {
    let scores: Vec<f64> = x.iter().map(|r| dot(w, r)).collect();
    let hinge = |b: f64| -> f64 { scores.iter().zip(y).map(|(s, yi)| (1.0 - yi * (s + b)).max(0.0)).sum() };
    let kinks: Vec<f64> = scores.iter().zip(y).map(|(s, yi)| yi - s).collect();
    let values: Vec<f64> = kinks.iter().map(|&b| hinge(b)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min.abs().max(1.0);
    let (lo, hi) = kinks
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v <= min + tol)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&b, _)| {
            (lo.min(b), hi.max(b))
        });
    0.5 * (lo + hi)
}

/// SVM result with the objective of the kept iterate after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub readout: LinearReadout,
    pub checkpoints: Vec<f64>,
}

/// Linear soft-margin SVM by stochastic subgradient descent.
///
/// Uses the normalized objective `λ/2‖w‖² + mean hinge` with `λ = 1/(c·n)`,
/// step `1/(λ·t)`, a freshly shuffled sample order each epoch and an
/// unregularized bias. After every epoch the current iterate and the running
/// average get their bias re-solved exactly, and the best of those and the
/// previous kept point is kept, starting from `(0, 0)`.
pub fn train_svm_traced(x: &[Vec<f64>], y: &[f64], c: f64, epochs: usize, seed: u64) -> Result<SvmFit> {
    let d = check_xy(x, y)?;
    check_two_classes(y)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("c", "must be > 0"));
    }
    if epochs == 0 {
        return Err(invalid("epochs", "must be >= 1"));
    }
    let n = x.len();
    let lambda = 1.0 / (c * n as f64);
    let mut rng = rng::stream(seed, &[0x5356_4d00]);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut best = LinearReadout::zeros(d);
    let mut best_obj = svm_objective(&best, x, y, c);
    let mut checkpoints = Vec::with_capacity(epochs);
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * (dot(&w, &x[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += eta * y[i] * xj;
                }
                b += eta * y[i];
            }
            let k = 1.0 / t as f64;
            for (a, wj) in avg_w.iter_mut().zip(&w) {
                *a += (wj - *a) * k;
            }
        }
        for cw in [&w, &avg_w] {
            let cand = LinearReadout {
                weights: cw.clone(),
                bias: best_bias(cw, x, y),
                active_mask: vec![true; d],
            };
            let obj = svm_objective(&cand, x, y, c);
            if obj.is_finite() && obj < best_obj {
                best_obj = obj;
                best = cand;
            }
        }
        checkpoints.push(best_obj);
    }
    Ok(SvmFit {
        readout: best,
        checkpoints,
    })
}

pub fn train_svm(x: &[Vec<f64>], y: &[f64], c: f64, epochs: usize, seed: u64) -> Result<LinearReadout> {
    train_svm_traced(x, y, c, epochs, seed).map(|f| f.readout)
}

/// Trains a classifier per `cfg` on ±1 labels.
pub fn train(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<LinearReadout> {
    cfg.validate()?;
    check_xy(x, y)?;
    check_two_classes(y)?;
    match (cfg.method, cfg.nonnegative) {
        (Method::Ridge, false) => train_ridge(x, y, cfg.ridge_lambda),
        (Method::Ridge, true) => train_ridge_nonnegative(x, y, cfg.ridge_lambda),
        (Method::Svm, _) => train_svm(x, y, cfg.svm_c, cfg.svm_epochs, cfg.split_seed),
    }
}

/// Fraction of rows whose predicted sign matches the ±1 label.
pub fn evaluate(r: &LinearReadout, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::Shape("no rows to evaluate".into()));
    }
    let mut correct = 0usize;
    for (row, &yi) in x.iter().zip(y) {
        if r.predict(row)? == yi {
            correct += 1;
        }
    }
    Ok(correct as f64 / x.len() as f64)
}

/// Indices of the `m` largest `|w|`, ties to the lower index, ascending.
pub fn top_m(weights: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()).then(a.cmp(&b)));
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

fn select(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect()
}

/// Trains on the listed columns only and returns a full-width readout with
/// every other weight zeroed and masked out.
pub fn train_restricted(x: &[Vec<f64>], y: &[f64], cols: &[usize], cfg: &TrainConfig) -> Result<LinearReadout> {
    let d = check_xy(x, y)?;
    if cols.is_empty() || cols.iter().any(|&j| j >= d) {
        return Err(invalid("columns", "must be nonempty and within the feature count"));
    }
    let sub = train(&select(x, cols), y, cfg)?;
    let mut out = LinearReadout {
        weights: vec![0.0; d],
        bias: sub.bias,
        active_mask: vec![false; d],
    };
    for (k, &j) in cols.iter().enumerate() {
        out.weights[j] = sub.weights[k];
        out.active_mask[j] = true;
    }
    Ok(out)
}

/// Trains a full readout, keeps the `keep_m` largest-magnitude weights,
/// retrains on those columns and reports validation accuracy.
pub fn prune_retrain(
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
    y_val: &[f64],
    cfg: &TrainConfig,
    keep_m: usize,
) -> Result<(LinearReadout, f64)> {
    let d = check_xy(x_train, y_train)?;
    if keep_m == 0 || keep_m > d {
        return Err(invalid("keep_m", format!("{keep_m} not in [1, {d}]")));
    }
    let full = train(x_train, y_train, cfg)?;
    let keep = top_m(&full.weights, keep_m);
    let pruned = train_restricted(x_train, y_train, &keep, cfg)?;
    let acc = evaluate(&pruned, x_val, y_val)?;
    Ok((pruned, acc))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Splits item indices so that every group contributes
/// `round(fraction · size)` items to training (at least one to each side
/// when the group has two or more items). Index lists are ascending.
pub fn stratified_split(groups: &[usize], fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid("split", "must lie in (0, 1)"));
    }
    let mut keys: Vec<usize> = groups.to_vec();
    keys.sort_unstable();
    keys.dedup();
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
    };
    for g in keys {
        let mut members: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == g).collect();
        members.shuffle(&mut rng::stream(seed, &[0x5350_4c54, g as u64]));
        let len = members.len();
        let mut k = (fraction * len as f64).round() as usize;
        if len >= 2 {
            k = k.clamp(1, len - 1);
        }
        split.train.extend_from_slice(&members[..k]);
        split.val.extend_from_slice(&members[k..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::Degenerate("split leaves one side empty".into()));
    }
    Ok(split)
}

pub fn take_rows<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Where a persisted readout came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSource {
    pub function: String,
    pub n_bits: usize,
    pub r_low_voltage: f64,
    pub rho: f64,
    /// Drive level of each input word.
    pub amplitudes: Vec<f64>,
}

/// On-disk form of a trained readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedReadout {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub active_mask: Vec<bool>,
    pub train_config: TrainConfig,
    pub dataset_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ReadoutSource>,
}

impl PersistedReadout {
    pub fn new(r: &LinearReadout, cfg: &TrainConfig, dataset_hash: String, source: Option<ReadoutSource>) -> Self {
        Self {
            weights: r.weights.clone(),
            bias: r.bias,
            active_mask: r.active_mask.clone(),
            train_config: *cfg,
            dataset_hash,
            source,
        }
    }

    pub fn readout(&self) -> Result<LinearReadout> {
        if self.weights.len() != self.active_mask.len() {
            return Err(Error::Shape("weights and active_mask differ in length".into()));
        }
        if self
            .weights
            .iter()
            .zip(&self.active_mask)
            .any(|(w, &m)| !m && *w != 0.0)
        {
            return Err(invalid("weights", "masked weights must be exactly 0"));
        }
        Ok(LinearReadout {
            weights: self.weights.clone(),
            bias: self.bias,
            active_mask: self.active_mask.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(format!("readout JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn constant_target() {
        let x = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let r = train_ridge(&x, &[0.7; 3], 1e-3).unwrap();
        assert!(r.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((r.bias - 0.7).abs() < 1e-12);
    }

    #[test]
    fn evaluation_identities() {
        let x = col(&[-1.0, 1.0, 2.0, -3.0]);
        let y = [-1.0, 1.0, -1.0, 1.0];
        assert_eq!(evaluate(&LinearReadout::zeros(1), &x, &y).unwrap(), 0.5);
        let r = LinearReadout {
            weights: vec![1.0],
            bias: 0.0,
            active_mask: vec![true],
        };
        let a = evaluate(&r, &x, &y).unwrap();
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_eq!(evaluate(&r, &x, &flipped).unwrap(), 1.0 - a);
        assert!(evaluate(&r, &x, &y[..2]).is_err());
    }

    #[test]
    fn svm_separable_pair() {
        let x = col(&[0.0, 1.0]);
        let y = [-1.0, 1.0];
        let r = train_svm(&x, &y, 1.0, 200, 0).unwrap();
        assert_eq!(evaluate(&r, &x, &y).unwrap(), 1.0);
        assert_eq!(r, train_svm(&x, &y, 1.0, 200, 0).unwrap());
        assert!(matches!(
            train_svm(&x, &[1.0, 1.0], 1.0, 10, 0),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn top_m_ties_go_to_lower_index() {
        assert_eq!(top_m(&[1.0, -3.0, 3.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_m(&[2.0, 2.0, 2.0], 2), vec![0, 1]);
    }

    #[test]
    fn split_is_stratified() {
        let groups: Vec<usize> = (0..200).map(|i| i / 50).collect();
        let s = stratified_split(&groups, 0.8, 3).unwrap();
        assert_eq!(s.train.len(), 160);
        for g in 0..4 {
            assert_eq!(s.val.iter().filter(|&&i| groups[i] == g).count(), 10);
        }
        assert_eq!(s, stratified_split(&groups, 0.8, 3).unwrap());
        assert!(stratified_split(&groups, 1.0, 3).is_err());
    }

    #[test]
    fn nonnegative_matches_unconstrained_when_inactive() {
        let x = vec![vec![1.0, 0.2], vec![2.0, 0.1], vec![3.0, 0.4], vec![4.0, 0.3]];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let a = train_ridge(&x, &y, 1e-3).unwrap();
        assert!(a.weights.iter().all(|&w| w > 0.0));
        let b = train_ridge_nonnegative(&x, &y, 1e-3).unwrap();
        for (p, q) in a.weights.iter().zip(&b.weights) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn persisted_round_trip() {
        let r = LinearReadout {
            weights: vec![0.0, 1.5],
            bias: -0.2,
            active_mask: vec![false, true],
        };
        let p = PersistedReadout::new(&r, &TrainConfig::default(), "ab".into(), None);
        let back = PersistedReadout::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back.readout().unwrap(), r);
    }
}
