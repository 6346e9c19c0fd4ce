//! Linear classifiers on feature tables: L2-regularized logistic
//! regression (Newton with backtracking) and a soft-margin linear SVM
//! (two-variable dual decomposition). Both emit real-valued scores.

use serde::{Deserialize, Serialize};

use crate::error::{MindError, Result};
use crate::space::FeatureTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Regularization trade-off in 0.5 ||w||^2 + C * sum(loss).
    pub c: f64,
    /// Gradient-norm tolerance (logistic) or violating-pair gap (SVM).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn logistic_default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-6,
            max_iterations: 10_000,
            seed: 0,
        }
    }

    pub fn svm_default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-4,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Svm,
}

/// Per-column standardization statistics, estimated from training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(table: &FeatureTable) -> Self {
        let n = table.n_rows();
        let p = table.n_cols();
        let mut means = vec![0.0; p];
        for i in 0..n {
            for (m, v) in means.iter_mut().zip(table.row(i)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut vars = vec![0.0; p];
        for i in 0..n {
            for ((var, mean), v) in vars.iter_mut().zip(&means).zip(table.row(i)) {
                let d = v - mean;
                *var += d * d;
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { means, stds }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    /// Weights in standardized feature space, one per column.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub config: TrainConfig,
    /// Raw margins on the training rows, cached at training time.
    pub train_scores: Vec<f64>,
    /// Objective value after every accepted optimization step.
    pub objective_trace: Vec<f64>,
}

fn extract_problem(table: &FeatureTable) -> Result<(Vec<f64>, Vec<f64>, Standardizer)> {
    let mut labels = Vec::with_capacity(table.n_rows());
    for (id, label) in table.row_ids.iter().zip(&table.labels) {
        labels.push(label.sign(id)?);
    }
    let positives = labels.iter().filter(|&&y| y > 0.0).count();
    if positives == 0 || positives == labels.len() {
        return Err(MindError::SingleClass);
    }
    let standardizer = Standardizer::fit(table);
    let mut z = Vec::with_capacity(table.n_rows() * table.n_cols());
    for i in 0..table.n_rows() {
        z.extend(standardizer.apply_row(table.row(i)));
    }
    Ok((z, labels, standardizer))
}

/// Stable log(1 + exp(-t)).
fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Objective and gradient of the regularized logistic loss at `wb`
/// (weights followed by the unregularized bias). `z` is row-major n x p.
pub fn logistic_value_grad(
    z: &[f64],
    y: &[f64],
    p: usize,
    c: f64,
    wb: &[f64],
) -> (f64, Vec<f64>) {
    let n = y.len();
    let (w, b) = (&wb[..p], wb[p]);
    let mut value = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut grad = vec![0.0; p + 1];
    grad[..p].copy_from_slice(w);
    for i in 0..n {
        let row = &z[i * p..(i + 1) * p];
        let margin = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let t = y[i] * margin;
        value += c * log1p_exp_neg(t);
        let coef = -c * y[i] * sigmoid(-t);
        for (g, v) in grad[..p].iter_mut().zip(row) {
            *g += coef * v;
        }
        grad[p] += coef;
    }
    (value, grad)
}

/// Hinge-loss primal objective 0.5||w||^2 + C sum max(0, 1 - y(w.z + b)).
pub fn svm_primal_objective(z: &[f64], y: &[f64], p: usize, c: f64, w: &[f64], b: f64) -> f64 {
    let n = y.len();
    let mut value = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    for i in 0..n {
        let row = &z[i * p..(i + 1) * p];
        let margin = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        value += c * (1.0 - y[i] * margin).max(0.0);
    }
    value
}

/// Cholesky solve of the (p+1)x(p+1) Newton system; the system is positive
/// definite because of the identity block plus a strictly positive bias
/// curvature term.
fn solve_spd(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut sum = a[j * n + j];
        for k in 0..j {
            sum -= a[j * n + k] * a[j * n + k];
        }
        if sum <= 0.0 {
            return None;
        }
        let ljj = sum.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i * n + k] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k * n + i] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    Some(b)
}

pub fn train_logistic(table: &FeatureTable, config: &TrainConfig) -> Result<LinearModel> {
    let (z, y, standardizer) = extract_problem(table)?;
    let p = table.n_cols();
    let n = y.len();
    let dim = p + 1;
    let mut wb = vec![0.0; dim];
    let (mut value, mut grad) = logistic_value_grad(&z, &y, p, config.c, &wb);
    let mut trace = vec![value];
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= config.tolerance {
            converged = true;
            break;
        }
        // Newton system: H = diag(reg) + C Z~^T S Z~ with Z~ bias-augmented.
        let mut hess = vec![0.0; dim * dim];
        for k in 0..p {
            hess[k * dim + k] = 1.0;
        }
        for i in 0..n {
            let row = &z[i * p..(i + 1) * p];
            let margin = row.iter().zip(&wb[..p]).map(|(a, b)| a * b).sum::<f64>() + wb[p];
            let s = sigmoid(margin) * sigmoid(-margin);
            let cs = config.c * s.max(1e-12);
            for a in 0..p {
                let va = row[a];
                for b in a..p {
                    hess[a * dim + b] += cs * va * row[b];
                }
                hess[a * dim + p] += cs * va;
            }
            hess[p * dim + p] += cs;
        }
        for a in 0..dim {
            for b in 0..a {
                hess[a * dim + b] = hess[b * dim + a];
            }
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = match solve_spd(hess, neg_grad, dim) {
            Some(s) => s,
            None => grad.iter().map(|g| -g).collect(), // fall back to steepest descent
        };
        // Backtracking line search (Armijo) keeps the objective monotone.
        let directional: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = wb.iter().zip(&step).map(|(w, s)| w + t * s).collect();
            let (cand_value, cand_grad) = logistic_value_grad(&z, &y, p, config.c, &candidate);
            if cand_value <= value + 1e-4 * t * directional {
                wb = candidate;
                value = cand_value;
                grad = cand_grad;
                trace.push(value);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // step cannot improve beyond rounding; treat as converged
            converged = true;
            break;
        }
    }
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !converged && grad_norm > config.tolerance {
        return Err(MindError::NonConvergence {
            iterations: config.max_iterations,
            gradient_norm: grad_norm,
        });
    }
    let weights = wb[..p].to_vec();
    let bias = wb[p];
    let train_scores = (0..n)
        .map(|i| {
            z[i * p..(i + 1) * p]
                .iter()
                .zip(&weights)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + bias
        })
        .collect();
    Ok(LinearModel {
        kind: ModelKind::Logistic,
        weights,
        bias,
        feature_names: table.columns.clone(),
        standardizer,
        config: *config,
        train_scores,
        objective_trace: trace,
    })
}

pub fn train_linear_svm(table: &FeatureTable, config: &TrainConfig) -> Result<LinearModel> {
    let (z, y, standardizer) = extract_problem(table)?;
    let p = table.n_cols();
    let n = y.len();
    let c = config.c;
    let tau = 1e-12;

    let row = |i: usize| &z[i * p..(i + 1) * p];
    let self_dot: Vec<f64> = (0..n)
        .map(|i| row(i).iter().map(|v| v * v).sum())
        .collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; p];
    // Dual objective in minimization form, tracked per accepted step.
    let mut dual = 0.0f64;
    let mut trace = vec![dual];
    let mut gap = f64::INFINITY;
    let mut converged = false;

    for _ in 0..config.max_iterations {
        // Gradient of the dual: G_t = y_t (w . z_t) - 1.
        // Maximal violating pair over I_up / I_low.
        let mut up_best = f64::NEG_INFINITY;
        let mut low_best = f64::INFINITY;
        let mut i_up = usize::MAX;
        let mut i_low = usize::MAX;
        for t in 0..n {
            let g = y[t] * row(t).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            let v = -y[t] * g;
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && v > up_best {
                up_best = v;
                i_up = t;
            }
            if in_low && v < low_best {
                low_best = v;
                i_low = t;
            }
        }
        gap = up_best - low_best;
        if gap <= config.tolerance {
            converged = true;
            break;
        }
        let (i, j) = (i_up, i_low);
        let gi = y[i] * row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let gj = y[j] * row(j).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let cross: f64 = row(i).iter().zip(row(j)).map(|(a, b)| a * b).sum();
        let curvature = (self_dot[i] + self_dot[j] - 2.0 * cross).max(tau);
        // direction u_i = y_i, u_j = -y_j keeps the equality constraint.
        let mut t_step = -(y[i] * gi - y[j] * gj) / curvature;
        // box clipping
        let (lo_i, hi_i) = if y[i] > 0.0 {
            (-alpha[i], c - alpha[i])
        } else {
            (alpha[i] - c, alpha[i])
        };
        let (lo_j, hi_j) = if y[j] > 0.0 {
            (alpha[j] - c, alpha[j])
        } else {
            (-alpha[j], c - alpha[j])
        };
        t_step = t_step.clamp(lo_i.max(lo_j), hi_i.min(hi_j));
        if t_step == 0.0 {
            converged = true;
            break;
        }
        let delta_i = y[i] * t_step;
        let delta_j = -y[j] * t_step;
        // exact decrease of the two-variable quadratic
        dual += t_step * (y[i] * gi - y[j] * gj) + 0.5 * curvature * t_step * t_step;
        alpha[i] += delta_i;
        alpha[j] += delta_j;
        for (wk, (zi, zj)) in w.iter_mut().zip(row(i).iter().zip(row(j))) {
            *wk += delta_i * y[i] * zi + delta_j * y[j] * zj;
        }
        trace.push(dual);
    }
    if !converged {
        return Err(MindError::NonConvergence {
            iterations: config.max_iterations,
            gradient_norm: gap,
        });
    }

    // Bias from the final violating-pair bounds: decision is w.z + b with
    // b = (m + M) / 2 in the -yG scale.
    let mut up_best = f64::NEG_INFINITY;
    let mut low_best = f64::INFINITY;
    for t in 0..n {
        let g = y[t] * row(t).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let v = -y[t] * g;
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
        if in_up && v > up_best {
            up_best = v;
        }
        if in_low && v < low_best {
            low_best = v;
        }
    }
    let bias = 0.5 * (up_best + low_best);

    let train_scores = (0..n)
        .map(|i| row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + bias)
        .collect();
    Ok(LinearModel {
        kind: ModelKind::Svm,
        weights: w,
        bias,
        feature_names: table.columns.clone(),
        standardizer,
        config: *config,
        train_scores,
        objective_trace: trace,
    })
}

/// Raw margin w.z + b per row (after the model's standardization).
pub fn predict_scores(model: &LinearModel, table: &FeatureTable) -> Result<Vec<f64>> {
    if table.n_cols() != model.weights.len() {
        return Err(MindError::DimensionMismatch(format!(
            "model expects {} features, table has {}",
            model.weights.len(),
            table.n_cols()
        )));
    }
    Ok((0..table.n_rows())
        .map(|i| {
            model
                .standardizer
                .apply_row(table.row(i))
                .iter()
                .zip(&model.weights)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Sigmoid probabilities for the logistic model; monotone in the raw score.
pub fn predict_probabilities(model: &LinearModel, table: &FeatureTable) -> Result<Vec<f64>> {
    Ok(predict_scores(model, table)?
        .into_iter()
        .map(sigmoid)
        .collect())
}
