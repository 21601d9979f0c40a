use std::rc::Rc;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub type Pairs = Rc<Vec<(usize, usize)>>;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    Pow(Var, f64),
    Clamp(Var, f64, f64),
    Sum(Var),
    Mean(Var),
    RowSum(Var),
    ColMean(Var),
    SubRow(Var, Var),
    MulRow(Var, Var),
    RowNormalize(Var),
    PairwiseSqDist(Var),
    PairSqDist(Var, Pairs),
    PairDot(Var, Pairs),
    SegmentSum(Var, Rc<Vec<usize>>),
    Transpose(Var),
    Trace(Var),
    Diag(Var),
    ScaleBy(Var, Var),
}

struct Node {
    value: Rc<DenseMatrix>,
    op: Op,
    needs_grad: bool,
}

/// Records dense-matrix operations for one forward pass so that a single
/// reverse sweep can produce exact gradients.
///
/// Leaves are either constants or differentiable inputs; only nodes that
/// depend on a differentiable input receive adjoints.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const ROW_NORM_FLOOR: f64 = 1e-12;

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Rc::new(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn grad_of(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).data()[0]
    }

    /// A value the result does not get differentiated against.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A shared constant, recorded without copying.
    pub fn constant_rc(&mut self, value: Rc<DenseMatrix>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable input.
    pub fn input(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), g))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), g))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), g))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).hadamard(self.value(b))?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), g))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).scale(s);
        let g = self.grad_of(&[a]);
        self.push(v, Op::Scale(a, s), g)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x + s);
        let g = self.grad_of(&[a]);
        self.push(v, Op::AddScalar(a), g)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        let g = self.grad_of(&[a]);
        self.push(v, Op::Relu(a), g)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        let g = self.grad_of(&[a]);
        self.push(v, Op::Sigmoid(a), g)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        let g = self.grad_of(&[a]);
        self.push(v, Op::Exp(a), g)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::ln);
        let g = self.grad_of(&[a]);
        self.push(v, Op::Log(a), g)
    }

    /// Elementwise `x^p`. At `x = 0` the adjoint is taken as 0.
    pub fn pow(&mut self, a: Var, p: f64) -> Var {
        let v = self.value(a).map(|x| x.powf(p));
        let g = self.grad_of(&[a]);
        self.push(v, Op::Pow(a, p), g)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(a).map(|x| x.clamp(lo, hi));
        let g = self.grad_of(&[a]);
        self.push(v, Op::Clamp(a, lo, hi), g)
    }

    /// Sum of all entries, as a 1×1 value.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = DenseMatrix::scalar(self.value(a).sum());
        let g = self.grad_of(&[a]);
        self.push(v, Op::Sum(a), g)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let v = DenseMatrix::scalar(m.sum() / (m.rows() * m.cols()) as f64);
        let g = self.grad_of(&[a]);
        self.push(v, Op::Mean(a), g)
    }

    /// Row sums as an n×1 column.
    pub fn row_sum(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let v = DenseMatrix::from_fn(m.rows(), 1, |i, _| m.row(i).iter().sum());
        let g = self.grad_of(&[a]);
        self.push(v, Op::RowSum(a), g)
    }

    /// Column means as a 1×d row.
    pub fn col_mean(&mut self, a: Var) -> Var {
        let means = self.value(a).column_means();
        let v = DenseMatrix::new(1, means.len(), means).expect("row shape");
        let g = self.grad_of(&[a]);
        self.push(v, Op::ColMean(a), g)
    }

    /// `a - 1·b` with `b` a 1×d row broadcast over the rows of `a`.
    pub fn sub_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        if mb.rows() != 1 || mb.cols() != ma.cols() {
            return Err(Error::shape(format!("sub_row: {:?} vs {:?}", ma.shape(), mb.shape())));
        }
        let v = DenseMatrix::from_fn(ma.rows(), ma.cols(), |i, j| ma[(i, j)] - mb[(0, j)]);
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::SubRow(a, b), g))
    }

    /// Columns of `a` scaled by the entries of the 1×d row `b`.
    pub fn mul_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, mb) = (self.value(a), self.value(b));
        if mb.rows() != 1 || mb.cols() != ma.cols() {
            return Err(Error::shape(format!("mul_row: {:?} vs {:?}", ma.shape(), mb.shape())));
        }
        let v = DenseMatrix::from_fn(ma.rows(), ma.cols(), |i, j| ma[(i, j)] * mb[(0, j)]);
        let g = self.grad_of(&[a, b]);
        Ok(self.push(v, Op::MulRow(a, b), g))
    }

    /// Rows scaled to unit Euclidean norm (norms floored at 1e-12).
    pub fn row_normalize(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let mut v = m.clone();
        for i in 0..m.rows() {
            let norm = row_norm(m.row(i));
            v.row_mut(i).iter_mut().for_each(|x| *x /= norm);
        }
        let g = self.grad_of(&[a]);
        self.push(v, Op::RowNormalize(a), g)
    }

    /// All pairwise squared distances between rows (n×n).
    pub fn pairwise_sq_dist(&mut self, a: Var) -> Var {
        let v = crate::numerics::pairwise_sq_distances(self.value(a));
        let g = self.grad_of(&[a]);
        self.push(v, Op::PairwiseSqDist(a), g)
    }

    /// Squared distances between the listed row pairs (m×1).
    pub fn pair_sq_dist(&mut self, a: Var, pairs: Pairs) -> Result<Var> {
        let m = self.value(a);
        check_pairs(&pairs, m.rows())?;
        let v = DenseMatrix::from_fn(pairs.len(), 1, |k, _| {
            let (i, j) = pairs[k];
            crate::numerics::sq_dist(m.row(i), m.row(j))
        });
        let g = self.grad_of(&[a]);
        Ok(self.push(v, Op::PairSqDist(a, pairs), g))
    }

    /// Inner products between the listed row pairs (m×1).
    pub fn pair_dot(&mut self, a: Var, pairs: Pairs) -> Result<Var> {
        let m = self.value(a);
        check_pairs(&pairs, m.rows())?;
        let v = DenseMatrix::from_fn(pairs.len(), 1, |k, _| {
            let (i, j) = pairs[k];
            m.row(i).iter().zip(m.row(j)).map(|(x, y)| x * y).sum()
        });
        let g = self.grad_of(&[a]);
        Ok(self.push(v, Op::PairDot(a, pairs), g))
    }

    /// Scatter-add of an m×1 column into `n` buckets: `out[index[k]] += a[k]`.
    pub fn segment_sum(&mut self, a: Var, index: Rc<Vec<usize>>, n: usize) -> Result<Var> {
        let m = self.value(a);
        if m.cols() != 1 || m.rows() != index.len() {
            return Err(Error::shape(format!(
                "segment_sum: {:?} values for {} indices",
                m.shape(),
                index.len()
            )));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(Error::contract(format!("segment index {bad} out of range {n}")));
        }
        let mut v = DenseMatrix::zeros(n, 1);
        for (k, &i) in index.iter().enumerate() {
            v[(i, 0)] += m[(k, 0)];
        }
        let g = self.grad_of(&[a]);
        Ok(self.push(v, Op::SegmentSum(a, index), g))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        let g = self.grad_of(&[a]);
        self.push(v, Op::Transpose(a), g)
    }

    pub fn trace(&mut self, a: Var) -> Result<Var> {
        let m = self.value(a);
        if !m.is_square() {
            return Err(Error::shape("trace of a non-square matrix"));
        }
        let v = DenseMatrix::scalar(m.trace());
        let g = self.grad_of(&[a]);
        Ok(self.push(v, Op::Trace(a), g))
    }

    /// Diagonal of a square matrix as an n×1 column.
    pub fn diag(&mut self, a: Var) -> Result<Var> {
        let m = self.value(a);
        if !m.is_square() {
            return Err(Error::shape("diag of a non-square matrix"));
        }
        let v = DenseMatrix::from_fn(m.rows(), 1, |i, _| m[(i, i)]);
        let g = self.grad_of(&[a]);
        Ok(self.push(v, Op::Diag(a), g))
    }

    /// `a` times the 1×1 value `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let sv = self.value(s);
        if sv.shape() != (1, 1) {
            return Err(Error::shape(format!("scale_by expects 1x1, got {:?}", sv.shape())));
        }
        let v = self.value(a).scale(sv.data()[0]);
        let g = self.grad_of(&[a, s]);
        Ok(self.push(v, Op::ScaleBy(a, s), g))
    }

    /// Reverse sweep from a 1×1 `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got {:?}",
                self.value(loss).shape()
            )));
        }
        let mut adj: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(DenseMatrix::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.propagate(&node.op, &node.value, &g, &mut adj);
            adj[idx] = Some(g);
        }
        Ok(Gradients { adj })
    }

    fn propagate(&self, op: &Op, out: &DenseMatrix, g: &DenseMatrix, adj: &mut [Option<DenseMatrix>]) {
        let mut acc = |v: Var, d: DenseMatrix| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut adj[v.0] {
                Some(existing) => existing.axpy(1.0, &d),
                slot => *slot = Some(d),
            }
        };
        let val = |v: Var| -> &DenseMatrix { &self.nodes[v.0].value };
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if wants(*a) {
                    acc(*a, g.matmul_tr(val(*b)).expect("shapes checked in forward"));
                }
                if wants(*b) {
                    acc(*b, val(*a).tr_matmul(g).expect("shapes checked in forward"));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    acc(*a, g.zip_map(val(*b), |x, y| x * y));
                }
                if wants(*b) {
                    acc(*b, g.zip_map(val(*a), |x, y| x * y));
                }
            }
            Op::Scale(a, s) => acc(*a, g.scale(*s)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::Relu(a) => acc(*a, g.zip_map(val(*a), |d, x| if x > 0.0 { d } else { 0.0 })),
            Op::Sigmoid(a) => acc(*a, g.zip_map(out, |d, s| d * s * (1.0 - s))),
            Op::Exp(a) => acc(*a, g.zip_map(out, |d, e| d * e)),
            Op::Log(a) => acc(*a, g.zip_map(val(*a), |d, x| d / x)),
            Op::Pow(a, p) => {
                let p = *p;
                acc(
                    *a,
                    g.zip_map(val(*a), |d, x| if x == 0.0 { 0.0 } else { d * p * x.powf(p - 1.0) }),
                )
            }
            Op::Clamp(a, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                acc(*a, g.zip_map(val(*a), |d, x| if x >= lo && x <= hi { d } else { 0.0 }))
            }
            Op::Sum(a) => {
                let (r, c) = val(*a).shape();
                acc(*a, DenseMatrix::filled(r, c, g.data()[0]));
            }
            Op::Mean(a) => {
                let (r, c) = val(*a).shape();
                acc(*a, DenseMatrix::filled(r, c, g.data()[0] / (r * c) as f64));
            }
            Op::RowSum(a) => {
                let (r, c) = val(*a).shape();
                acc(*a, DenseMatrix::from_fn(r, c, |i, _| g[(i, 0)]));
            }
            Op::ColMean(a) => {
                let (r, c) = val(*a).shape();
                let inv = 1.0 / r as f64;
                acc(*a, DenseMatrix::from_fn(r, c, |_, j| g[(0, j)] * inv));
            }
            Op::SubRow(a, b) => {
                acc(*a, g.clone());
                if wants(*b) {
                    let s = col_sums(g);
                    acc(*b, DenseMatrix::new(1, s.len(), s).expect("row").scale(-1.0));
                }
            }
            Op::MulRow(a, b) => {
                let (ma, mb) = (val(*a), val(*b));
                if wants(*a) {
                    acc(*a, DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| g[(i, j)] * mb[(0, j)]));
                }
                if wants(*b) {
                    let s = col_sums(&g.zip_map(ma, |x, y| x * y));
                    acc(*b, DenseMatrix::new(1, s.len(), s).expect("row"));
                }
            }
            Op::RowNormalize(a) => {
                let ma = val(*a);
                let mut d = DenseMatrix::zeros(ma.rows(), ma.cols());
                for i in 0..ma.rows() {
                    let norm = row_norm(ma.row(i));
                    let y = out.row(i);
                    let gi = g.row(i);
                    let yg: f64 = y.iter().zip(gi).map(|(a, b)| a * b).sum();
                    for (j, dv) in d.row_mut(i).iter_mut().enumerate() {
                        *dv = (gi[j] - y[j] * yg) / norm;
                    }
                }
                acc(*a, d);
            }
            Op::PairwiseSqDist(a) => {
                let x = val(*a);
                let n = x.rows();
                let mut d = DenseMatrix::zeros(n, x.cols());
                for i in 0..n {
                    for j in 0..n {
                        let w = 2.0 * (g[(i, j)] + g[(j, i)]);
                        if w == 0.0 || i == j {
                            continue;
                        }
                        for c in 0..x.cols() {
                            d[(i, c)] += w * (x[(i, c)] - x[(j, c)]);
                        }
                    }
                }
                acc(*a, d);
            }
            Op::PairSqDist(a, pairs) => {
                let x = val(*a);
                let mut d = DenseMatrix::zeros(x.rows(), x.cols());
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    let w = 2.0 * g[(k, 0)];
                    for c in 0..x.cols() {
                        let diff = w * (x[(i, c)] - x[(j, c)]);
                        d[(i, c)] += diff;
                        d[(j, c)] -= diff;
                    }
                }
                acc(*a, d);
            }
            Op::PairDot(a, pairs) => {
                let x = val(*a);
                let mut d = DenseMatrix::zeros(x.rows(), x.cols());
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    let w = g[(k, 0)];
                    for c in 0..x.cols() {
                        let (xi, xj) = (x[(i, c)], x[(j, c)]);
                        d[(i, c)] += w * xj;
                        d[(j, c)] += w * xi;
                    }
                }
                acc(*a, d);
            }
            Op::SegmentSum(a, index) => {
                let d = DenseMatrix::from_fn(index.len(), 1, |k, _| g[(index[k], 0)]);
                acc(*a, d);
            }
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::Trace(a) => {
                let n = val(*a).rows();
                acc(*a, DenseMatrix::identity(n).scale(g.data()[0]));
            }
            Op::Diag(a) => {
                let n = val(*a).rows();
                let mut d = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    d[(i, i)] = g[(i, 0)];
                }
                acc(*a, d);
            }
            Op::ScaleBy(a, s) => {
                let sv = val(*s).data()[0];
                if wants(*a) {
                    acc(*a, g.scale(sv));
                }
                if wants(*s) {
                    let ds: f64 = g.data().iter().zip(val(*a).data()).map(|(x, y)| x * y).sum();
                    acc(*s, DenseMatrix::scalar(ds));
                }
            }
        }
    }
}

fn check_pairs(pairs: &[(usize, usize)], n: usize) -> Result<()> {
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::contract(format!("pair ({i}, {j}) out of range {n}")));
    }
    Ok(())
}

fn row_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt().max(ROW_NORM_FLOOR)
}

fn col_sums(m: &DenseMatrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (acc, v) in s.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    s
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Adjoints from one reverse sweep.
pub struct Gradients {
    adj: Vec<Option<DenseMatrix>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; zeros if `v` did not
    /// influence the loss.
    pub fn wrt(&self, tape: &Tape, v: Var) -> DenseMatrix {
        match &self.adj[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                DenseMatrix::zeros(r, c)
            }
        }
    }
}

/// Central finite differences of a scalar function of a matrix.
pub fn numeric_gradient<F>(x: &DenseMatrix, h: f64, f: F) -> Result<DenseMatrix>
where
    F: Fn(&DenseMatrix) -> Result<f64>,
{
    let mut numeric = DenseMatrix::zeros(x.rows(), x.cols());
    for k in 0..x.data().len() {
        let mut plus = x.clone();
        plus.data_mut()[k] += h;
        let mut minus = x.clone();
        minus.data_mut()[k] -= h;
        numeric.data_mut()[k] = (f(&plus)? - f(&minus)?) / (2.0 * h);
    }
    Ok(numeric)
}

/// Norm-wise relative error `|a - b| / max(|a|, |b|)` (0 when both vanish).
pub fn relative_error(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let diff = a.sub(b)?.frobenius_norm();
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Central finite-difference check of `f`'s gradient at `x`.
///
/// `f` records a scalar function of its input on a fresh tape. Returns the
/// [`relative_error`] between the tape gradient and the numeric one.
pub fn gradient_check<F>(x: &DenseMatrix, h: f64, f: F) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let xv = tape.input(x.clone());
    let loss = f(&mut tape, xv)?;
    let analytic = tape.backward(loss)?.wrt(&tape, xv);
    let numeric = numeric_gradient(x, h, |m| {
        let mut t = Tape::new();
        let v = t.constant(m.clone());
        let l = f(&mut t, v)?;
        Ok(t.scalar(l))
    })?;
    relative_error(&analytic, &numeric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn random(r: usize, c: usize, seed: u64) -> DenseMatrix {
        let mut rng = Rng::new(seed);
        DenseMatrix::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn relu_and_log_adjoints() {
        let mut t = Tape::new();
        let x = t.input(DenseMatrix::from_rows(&[[-1.0, 2.0]]));
        let r = t.relu(x);
        assert_eq!(t.value(r).data(), &[0.0, 2.0]);
        let s = t.sum(r);
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(&t, x).data(), &[0.0, 1.0]);

        let mut t = Tape::new();
        let x = t.input(DenseMatrix::from_rows(&[[1.0, 4.0]]));
        let l = t.log(x);
        assert_eq!(t.value(l).data()[0], 0.0);
        let s = t.sum(l);
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(&t, x).data(), &[1.0, 0.25]);
    }

    #[test]
    fn sum_and_half_square_norm() {
        let w = random(3, 2, 1);
        let mut t = Tape::new();
        let v = t.input(w.clone());
        let s = t.sum(v);
        assert!(t.backward(s).unwrap().wrt(&t, v).data().iter().all(|&x| x == 1.0));

        let mut t = Tape::new();
        let v = t.input(w.clone());
        let sq = t.mul(v, v).unwrap();
        let s = t.sum(sq);
        let half = t.scale(s, 0.5);
        assert_eq!(t.backward(half).unwrap().wrt(&t, v), w);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut t = Tape::new();
        let v = t.input(DenseMatrix::zeros(2, 2));
        assert!(matches!(t.backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn swish_matches_finite_differences() {
        let x = random(3, 3, 2);
        let err = gradient_check(&x, 1e-5, |t, v| {
            let s = t.sigmoid(v);
            let p = t.mul(v, s)?;
            Ok(t.sum(p))
        })
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn every_primitive_matches_finite_differences() {
        type Case = Box<dyn Fn(&mut Tape, Var) -> Result<Var>>;
        let c = Rc::new(random(4, 3, 9));
        let idx = Rc::new(vec![0usize, 2, 2, 1, 0, 3]);
        let pairs: Pairs = Rc::new(vec![(0, 1), (1, 3), (2, 0), (3, 2)]);
        let cases: Vec<(&str, Case)> = vec![
            ("matmul", Box::new(|t, v| {
                let vt = t.transpose(v);
                let m = t.matmul(v, vt)?;
                let e = t.exp(m);
                let s = t.scale(e, 0.1);
                Ok(t.sum(s))
            })),
            ("add_sub_mul", {
                let c = c.clone();
                Box::new(move |t, v| {
                    let k = t.constant_rc(c.clone());
                    let a = t.add(v, k)?;
                    let b = t.sub(a, v)?;
                    let m = t.mul(b, v)?;
                    let m2 = t.mul(m, v)?;
                    Ok(t.mean(m2))
                })
            }),
            ("pow_log_clamp", Box::new(|t, v| {
                let sq = t.mul(v, v)?;
                let sh = t.add_scalar(sq, 0.5);
                let p = t.pow(sh, 0.89);
                let cl = t.clamp(p, 0.6, 2.0);
                let l = t.log(cl);
                Ok(t.sum(l))
            })),
            ("row_col_broadcast", Box::new(|t, v| {
                let mu = t.col_mean(v);
                let c = t.sub_row(v, mu)?;
                let sq = t.mul(c, c)?;
                let var = t.col_mean(sq);
                let sd = t.pow(var, -0.5);
                let z = t.mul_row(c, sd)?;
                let z3 = t.mul(z, z)?;
                let r = t.row_sum(z3);
                let r2 = t.mul(r, r)?;
                Ok(t.sum(r2))
            })),
            ("row_normalize", Box::new(|t, v| {
                let u = t.row_normalize(v);
                let ut = t.transpose(u);
                let s = t.matmul(u, ut)?;
                let d = t.diag(s)?;
                let e = t.exp(s);
                let tot = t.sum(e);
                let dd = t.sum(d);
                let x = t.mul(tot, dd)?;
                Ok(x)
            })),
            ("pairwise", Box::new(|t, v| {
                let d = t.pairwise_sq_dist(v);
                let q = t.add_scalar(d, 1.0);
                let q = t.pow(q, -1.0);
                let l = t.log(q);
                Ok(t.sum(l))
            })),
            ("pairs", {
                let pairs = pairs.clone();
                Box::new(move |t, v| {
                    let d = t.pair_sq_dist(v, pairs.clone())?;
                    let dot = t.pair_dot(v, pairs.clone())?;
                    let s = t.sigmoid(dot);
                    let m = t.mul(d, s)?;
                    Ok(t.sum(m))
                })
            }),
            ("segment_sum", {
                let idx = idx.clone();
                let pairs = pairs.clone();
                Box::new(move |t, v| {
                    let d = t.pair_sq_dist(v, pairs.clone())?;
                    let both = t.transpose(d);
                    let flat = t.matmul(d, both)?; // 4x4
                    let col = t.row_sum(flat);
                    let seg = t.segment_sum(col, Rc::new(idx[..4].to_vec()), 4)?;
                    let l = t.add_scalar(seg, 1.0);
                    let l = t.log(l);
                    Ok(t.sum(l))
                })
            }),
            ("trace_scale_by", Box::new(|t, v| {
                let vt = t.transpose(v);
                let g = t.matmul(vt, v)?;
                let tr = t.trace(g)?;
                let inv = t.pow(tr, -0.5);
                let s = t.scale_by(g, inv)?;
                let s2 = t.mul(s, s)?;
                Ok(t.sum(s2))
            })),
        ];
        let x = random(4, 3, 4);
        for (name, f) in cases {
            let err = gradient_check(&x, 1e-5, f).unwrap();
            assert!(err < 1e-6, "{name}: {err}");
        }
    }

    #[test]
    fn replay_is_identical() {
        let x = random(5, 2, 3);
        let run = || {
            let mut t = Tape::new();
            let v = t.input(x.clone());
            let d = t.pairwise_sq_dist(v);
            let sc = t.scale(d, -0.1);
            let e = t.exp(sc);
            let s = t.sum(e);
            (t.value(s).clone(), t.backward(s).unwrap().wrt(&t, v))
        };
        let (a, ga) = run();
        let (b, gb) = run();
        assert_eq!(a, b);
        assert_eq!(ga, gb);
    }

    #[test]
    fn unused_inputs_get_zero_gradients() {
        let mut t = Tape::new();
        let a = t.input(DenseMatrix::filled(2, 2, 1.0));
        let b = t.input(DenseMatrix::filled(3, 1, 1.0));
        let s = t.sum(a);
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(&t, b), DenseMatrix::zeros(3, 1));
    }
}
