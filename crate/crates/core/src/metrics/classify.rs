use crate::error::{Error, Result};
use crate::numerics::{sq_dist, DenseMatrix, Rng};

pub const SVM_C: f64 = 1.0;
pub const SVM_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

/// `γ = 1/(d·var)`, with `var` the mean per-column variance. Unlike the
/// variance of the flattened matrix, this is unchanged by rotations and
/// translations of the data.
pub fn default_gamma(x: &DenseMatrix) -> f64 {
    let d = x.cols() as f64;
    let var = x.covariance().trace() / d;
    if var > 0.0 {
        1.0 / (d * var)
    } else {
        1.0
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

/// One binary soft-margin SVM: decision `Σ coef_t·K(x_t, x) − rho`.
#[derive(Debug, Clone)]
struct BinarySvm {
    /// `α_t·y_t` for each training point (zeros kept for simplicity).
    coef: Vec<f64>,
    rho: f64,
}

/// Solves the C-SVC dual with sequential minimal optimization, choosing the
/// working pair by maximal violation plus second-order gain.
fn smo(kernel: &DenseMatrix, y: &[f64], c: f64, tol: f64, max_iter: usize) -> BinarySvm {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let qd: Vec<f64> = (0..n).map(|i| kernel[(i, i)]).collect();
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    for _ in 0..max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i = t;
                }
            } else if !is_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        // j: best second-order partner in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let (in_low, yg) = if y[t] > 0.0 {
                (!is_lower(alpha[t]), grad[t])
            } else {
                (!is_upper(alpha[t]), -grad[t])
            };
            if !in_low {
                continue;
            }
            if yg >= gmax2 {
                gmax2 = yg;
            }
            let diff = gmax + yg;
            if diff > 0.0 {
                let mut quad = qd[i] + qd[t] - 2.0 * kernel[(i, t)];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -diff * diff / quad;
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * kernel[(i, j)];
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel[(t, i)] * di + y[j] * kernel[(t, j)] * dj);
        }
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    BinarySvm {
        coef: alpha.iter().zip(y).map(|(a, y)| a * y).collect(),
        rho,
    }
}

/// One-vs-rest RBF-kernel classifier.
#[derive(Debug, Clone)]
pub struct KernelClassifier {
    pub gamma: f64,
    pub c: f64,
    pub classes: Vec<usize>,
    support: DenseMatrix,
    models: Vec<BinarySvm>,
}

impl KernelClassifier {
    pub fn fit(x: &DenseMatrix, labels: &[usize], c: f64, gamma: f64) -> Result<Self> {
        let n = x.rows();
        if labels.len() != n {
            return Err(Error::shape(format!("{} labels for {n} rows", labels.len())));
        }
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::contract("need at least two classes"));
        }
        let mut kernel = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let k = rbf(x.row(i), x.row(j), gamma);
                kernel[(i, j)] = k;
                kernel[(j, i)] = k;
            }
        }
        let models = classes
            .iter()
            .map(|&cls| {
                let y: Vec<f64> = labels.iter().map(|&l| if l == cls { 1.0 } else { -1.0 }).collect();
                smo(&kernel, &y, c, SVM_TOL, 10_000 * n.max(1))
            })
            .collect();
        Ok(Self {
            gamma,
            c,
            classes,
            support: x.clone(),
            models,
        })
    }

    /// Decision value of every one-vs-rest model for one point.
    pub fn decision(&self, point: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = (0..self.support.rows())
            .map(|t| rbf(self.support.row(t), point, self.gamma))
            .collect();
        self.models
            .iter()
            .map(|m| m.coef.iter().zip(&k).map(|(a, k)| a * k).sum::<f64>() - m.rho)
            .collect()
    }

    /// Class with the largest decision value (lowest class id on ties).
    pub fn predict(&self, point: &[f64]) -> usize {
        let d = self.decision(point);
        let mut best = 0;
        for (i, v) in d.iter().enumerate() {
            if *v > d[best] {
                best = i;
            }
        }
        self.classes[best]
    }
}

/// Stratified fold assignment: each class is shuffled, then dealt to the
/// folds round-robin, continuing the rotation across classes.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::contract("need at least two folds"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = Rng::new(seed);
    let mut assign = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::Stratification {
                class,
                members: members.len(),
                folds,
            });
        }
        rng.shuffle(&mut members);
        for i in members {
            assign[i] = next % folds;
            next += 1;
        }
    }
    Ok(assign)
}

/// Mean held-out accuracy of the RBF classifier over stratified folds.
pub fn classification_accuracy(emb: &DenseMatrix, labels: &[usize], folds: usize, seed: u64) -> Result<f64> {
    if labels.len() != emb.rows() {
        return Err(Error::shape(format!("{} labels for {} rows", labels.len(), emb.rows())));
    }
    let distinct = {
        let mut l = labels.to_vec();
        l.sort_unstable();
        l.dedup();
        l.len()
    };
    if distinct < 2 {
        return Err(Error::contract("need at least two classes"));
    }
    let assign = stratified_folds(labels, folds, seed)?;
    let mut total = 0.0;
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] != f).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] == f).collect();
        let xtr = emb.select_rows(&train);
        let ytr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let clf = KernelClassifier::fit(&xtr, &ytr, SVM_C, default_gamma(&xtr))?;
        let correct = test.iter().filter(|&&i| clf.predict(emb.row(i)) == labels[i]).count();
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / folds as f64)
}
