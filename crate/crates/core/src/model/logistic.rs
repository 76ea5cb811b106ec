//! L2-regularised multinomial logistic regression fitted with L-BFGS.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows per gradient chunk. Partial sums are reduced in chunk order, so the
/// result does not depend on how many threads evaluated the chunks.
const CHUNK_ROWS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticOptions {
    pub l2_strength: f64,
    pub max_iter: usize,
    /// Stop once every component of the per-row-averaged gradient is at
    /// most this large in magnitude.
    pub grad_tol: f64,
    pub history: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2_strength: 1.0,
            max_iter: 1000,
            grad_tol: 1e-4,
            history: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective (summed negative log-likelihood plus penalty) at the solution.
    pub objective: f64,
    pub grad_max_norm: f64,
}

/// Weights for `n_classes` outputs over `n_features` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// `n_classes × n_features`.
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub l2_strength: f64,
}

impl LogisticModel {
    pub fn zeros(n_classes: usize, n_features: usize, l2_strength: f64) -> Self {
        LogisticModel {
            weights: Array2::zeros((n_classes, n_features)),
            biases: Array1::zeros(n_classes),
            l2_strength,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    fn from_params(params: &[f64], n_classes: usize, n_features: usize, l2_strength: f64) -> Self {
        let split = n_classes * n_features;
        LogisticModel {
            weights: Array2::from_shape_vec((n_classes, n_features), params[..split].to_vec()).expect("shape"),
            biases: Array1::from(params[split..].to_vec()),
            l2_strength,
        }
    }

    /// Affine class scores, `n × n_classes`.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", self.n_features()),
                found: format!("{} features", x.ncols()),
            });
        }
        let mut z = standard(x.dot(&self.weights.t()));
        z += &self.biases;
        Ok(z)
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut z = self.decision_function(x)?;
        for mut row in z.axis_iter_mut(Axis(0)) {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(z)
    }

    /// Most probable class per row; ties go to the lower class index.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.axis_iter(Axis(0)).map(|r| argmax(r.as_slice().expect("row"))).collect())
    }
}

fn standard(z: Array2<f64>) -> Array2<f64> {
    if z.is_standard_layout() {
        z
    } else {
        z.as_standard_layout().into_owned()
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax; returns log-sum-exp of the input.
pub fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Objective and gradient at `params` (weights row-major, then biases):
/// `sum_i -log p(y_i | x_i) + l2/2 * ||W||^2`, biases unpenalised.
pub fn objective_and_gradient(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    l2_strength: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let d = x.ncols();
    let model = LogisticModel::from_params(params, n_classes, d, l2_strength);
    let wt = model.weights.t();
    let n_chunks = x.nrows().div_ceil(CHUNK_ROWS);
    let partials: Vec<(f64, Array2<f64>, Array1<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK_ROWS;
            let hi = (lo + CHUNK_ROWS).min(x.nrows());
            let xc = x.slice(s![lo..hi, ..]);
            let mut z = standard(xc.dot(&wt));
            z += &model.biases;
            let mut loss = 0.0;
            for (r, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
                let label = y[lo + r];
                let logit = row[label];
                let row = row.as_slice_mut().expect("row");
                loss += softmax_in_place(row) - logit;
                row[label] -= 1.0;
            }
            let gw = z.t().dot(&xc);
            let gb = z.sum_axis(Axis(0));
            (loss, gw, gb)
        })
        .collect();

    let mut loss = 0.0;
    let mut gw = Array2::<f64>::zeros((n_classes, d));
    let mut gb = Array1::<f64>::zeros(n_classes);
    for (l, w, b) in &partials {
        loss += l;
        gw += w;
        gb += b;
    }
    loss += 0.5 * l2_strength * model.weights.iter().map(|w| w * w).sum::<f64>();
    gw.scaled_add(l2_strength, &model.weights);
    let mut grad = gw.into_raw_vec_and_offset().0;
    grad.extend(gb.iter());
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fit on `x` (n × d) with labels `y` in `0..n_classes`. Starts from zero.
pub fn fit_logistic(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    opts: &LogisticOptions,
) -> Result<(LogisticModel, FitReport)> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::Model(format!("{n} rows but {} labels", y.len())));
    }
    if n == 0 {
        return Err(Error::Model("no training rows".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Model(format!("label {bad} outside 0..{n_classes}")));
    }
    let mut seen = vec![false; n_classes];
    for &c in y {
        seen[c] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Model("training labels contain a single class".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Model("training matrix contains non-finite values".into()));
    }
    if !(opts.l2_strength >= 0.0) || opts.history == 0 {
        return Err(Error::Model("l2_strength must be >= 0 and history >= 1".into()));
    }

    let eval = |p: &[f64]| objective_and_gradient(x, y, n_classes, opts.l2_strength, p);
    let dim = n_classes * x.ncols() + n_classes;
    let mut params = vec![0.0; dim];
    let (mut f, mut g) = eval(&params);
    let scale = 1.0 / n as f64;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    let mut converged = max_abs(&g) * scale <= opts.grad_tol;

    while !converged && iterations < opts.max_iter {
        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, yv) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(yv, s);
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(yv)) => dot(s, yv) / dot(yv, yv),
            _ => 1.0 / max_abs(&g).max(f64::MIN_POSITIVE),
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for ((s, yv), a) in s_hist.iter().zip(&y_hist).zip(alphas.iter().rev()) {
            let rho = 1.0 / dot(yv, s);
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            let step = 1.0 / max_abs(&g).max(f64::MIN_POSITIVE);
            dir = g.iter().map(|v| -v * step).collect();
            slope = dot(&g, &dir);
        }

        // Backtracking line search (Armijo condition).
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + t * d).collect();
            let (ft, gt) = eval(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((next, fn_, gn)) = accepted else {
            log::warn!("logistic fit: line search failed at iteration {iterations}");
            break;
        };
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-10 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == opts.history {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        params = next;
        f = fn_;
        g = gn;
        converged = max_abs(&g) * scale <= opts.grad_tol;
    }

    let model = LogisticModel::from_params(&params, n_classes, x.ncols(), opts.l2_strength);
    let report = FitReport {
        iterations,
        converged,
        objective: f,
        grad_max_norm: max_abs(&g) * scale,
    };
    if !converged {
        log::warn!("logistic fit stopped after {iterations} iterations without converging");
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = LogisticModel::zeros(5, 3, 1.0);
        let p = m.predict_proba(Array2::from_elem((4, 3), 0.7).view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn softmax_shift_invariant() {
        let mut a = [1.0, 2.0, -3.0, 0.5, 0.0];
        let mut b = a.map(|v| v + 123.0);
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.2; 5]), 0);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Array2::zeros((4, 2));
        assert!(fit_logistic(x.view(), &[1, 1, 1, 1], 5, &LogisticOptions::default()).is_err());
    }

    #[test]
    fn separable_two_class_problem() {
        let x = Array2::from_shape_fn((200, 1), |(r, _)| if r < 100 { -1.0 - r as f64 / 100.0 } else { r as f64 / 100.0 });
        let y: Vec<usize> = (0..200).map(|r| usize::from(r >= 100)).collect();
        let (m, rep) = fit_logistic(x.view(), &y, 2, &LogisticOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert_eq!(m.predict(x.view()).unwrap(), y);
    }
}
