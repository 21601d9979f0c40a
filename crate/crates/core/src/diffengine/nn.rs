use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};

/// A trainable weight matrix and its most recent gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }
}

/// Records every parameter as a differentiable input of `tape`.
pub fn bind(tape: &mut Tape, params: &[Parameter]) -> Vec<Var> {
    params.iter().map(|p| tape.input(p.value.clone())).collect()
}

/// Copies the adjoints of the bound parameter vars into `params[i].grad`.
pub fn store_grads(tape: &Tape, grads: &Gradients, vars: &[Var], params: &mut [Parameter]) {
    for (p, &v) in params.iter_mut().zip(vars) {
        p.grad = grads.wrt(tape, v);
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<DenseMatrix>,
    pub v: Vec<DenseMatrix>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &[Parameter], lr: f64) -> Self {
        let zeros = |p: &Parameter| DenseMatrix::zeros(p.value.rows(), p.value.cols());
        Self {
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update from the stored gradients, which are zeroed afterwards.
    pub fn step(&mut self, params: &mut [Parameter]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, p) in params.iter_mut().enumerate() {
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            let g = p.grad.data_mut();
            for (idx, w) in p.value.data_mut().iter_mut().enumerate() {
                let gi = g[idx];
                m[idx] = self.beta1 * m[idx] + (1.0 - self.beta1) * gi;
                v[idx] = self.beta2 * v[idx] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[idx] / bc1;
                let vhat = v[idx] / bc2;
                *w -= self.lr * mhat / (vhat.sqrt() + self.eps);
                g[idx] = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// `N(0, 0.01²)`
    Normal,
    /// `U(±√(6/(fan_in+fan_out)))`
    #[default]
    XavierUniform,
    /// `N(0, 2/(fan_in+fan_out))`
    XavierNormal,
}

impl InitScheme {
    pub const ALL: [InitScheme; 3] = [InitScheme::Normal, InitScheme::XavierUniform, InitScheme::XavierNormal];

    pub fn name(self) -> &'static str {
        match self {
            InitScheme::Normal => "normal",
            InitScheme::XavierUniform => "xavier_uniform",
            InitScheme::XavierNormal => "xavier_normal",
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitScheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::contract(format!("unknown init scheme {s:?}")))
    }
}

pub const NORMAL_INIT_STD: f64 = 0.01;

/// Weight matrix of shape `rows × cols` (`fan_in = rows`, `fan_out = cols`).
pub fn init_weights(rows: usize, cols: usize, scheme: InitScheme, rng: &mut Rng) -> DenseMatrix {
    let fan = (rows + cols) as f64;
    match scheme {
        InitScheme::Normal => DenseMatrix::from_fn(rows, cols, |_, _| NORMAL_INIT_STD * rng.normal()),
        InitScheme::XavierUniform => {
            let bound = (6.0 / fan).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform_range(-bound, bound))
        }
        InitScheme::XavierNormal => {
            let std = (2.0 / fan).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| std * rng.normal())
        }
    }
}

/// `Ã · ReLU(Ã · X · W₀) · W₁`, evaluated as `Ã·(ReLU((Ã·X)·W₀)·W₁)` so the
/// n×n product only meets the narrow output.
pub fn gcn_forward(tape: &mut Tape, adj: Var, x: Var, w0: Var, w1: Var) -> Result<Var> {
    let ax = tape.matmul(adj, x)?;
    let h = tape.matmul(ax, w0)?;
    let h = tape.relu(h);
    let z = tape.matmul(h, w1)?;
    tape.matmul(adj, z)
}

/// Two-layer GCN with a cached normalized adjacency.
#[derive(Debug, Clone)]
pub struct GcnEncoder {
    /// `[W₀ (p_h×hidden), W₁ (hidden×p_l)]`
    pub layers: Vec<Parameter>,
    pub norm_adj: Rc<DenseMatrix>,
}

impl GcnEncoder {
    pub fn new(
        norm_adj: Rc<DenseMatrix>,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        scheme: InitScheme,
        rng: &mut Rng,
    ) -> Self {
        let w0 = init_weights(in_dim, hidden, scheme, rng);
        let w1 = init_weights(hidden, out_dim, scheme, rng);
        Self {
            layers: vec![Parameter::new("w0", w0), Parameter::new("w1", w1)],
            norm_adj,
        }
    }

    /// Runs the encoder with its own adjacency; returns the output and the
    /// bound weight vars (in `layers` order).
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<(Var, Vec<Var>)> {
        let adj = tape.constant_rc(self.norm_adj.clone());
        self.forward_on(tape, adj, x)
    }

    /// Runs the encoder on another graph (e.g. an augmented view).
    pub fn forward_on(&self, tape: &mut Tape, adj: Var, x: Var) -> Result<(Var, Vec<Var>)> {
        let vars = bind(tape, &self.layers);
        let out = gcn_forward(tape, adj, x, vars[0], vars[1])?;
        Ok((out, vars))
    }
}

/// One coupled Newton–Schulz step: `T = (3I − Z·Y)/2`, `Y ← Y·T`, `Z ← T·Z`.
pub fn ns_iteration_step(tape: &mut Tape, y: Var, z: Var) -> Result<(Var, Var)> {
    let d = tape.value(y).rows();
    let three = tape.constant(DenseMatrix::identity(d).scale(3.0));
    let zy = tape.matmul(z, y)?;
    let t = tape.sub(three, zy)?;
    let t = tape.scale(t, 0.5);
    let y_next = tape.matmul(y, t)?;
    let z_next = tape.matmul(t, z)?;
    Ok((y_next, z_next))
}

pub const DBN_MAX_DIM: usize = 16;

/// Whitening layer: `(Y − mean) · (cov(Y) + eps·I)^{-1/2}`.
///
/// The covariance uses divisor `n`. The inverse square root comes from
/// `iters` coupled Newton–Schulz steps on the trace-normalized covariance,
/// so the whole layer is made of differentiable primitives.
pub fn dbn_forward(tape: &mut Tape, y: Var, eps: f64, iters: usize) -> Result<Var> {
    let (n, d) = tape.value(y).shape();
    if n < 2 {
        return Err(Error::contract(format!("whitening needs at least 2 rows, got {n}")));
    }
    if d > DBN_MAX_DIM {
        return Err(Error::contract(format!("whitening dimension {d} exceeds {DBN_MAX_DIM}")));
    }
    let mu = tape.col_mean(y);
    let c = tape.sub_row(y, mu)?;
    let ct = tape.transpose(c);
    let cov = tape.matmul(ct, c)?;
    let cov = tape.scale(cov, 1.0 / n as f64);
    let ridge = tape.constant(DenseMatrix::identity(d).scale(eps));
    let cov = tape.add(cov, ridge)?;
    let tr = tape.trace(cov)?;
    let inv_tr = tape.pow(tr, -1.0);
    let mut ys = tape.scale_by(cov, inv_tr)?;
    let mut zs = tape.constant(DenseMatrix::identity(d));
    for _ in 0..iters {
        (ys, zs) = ns_iteration_step(tape, ys, zs)?;
    }
    let inv_sqrt_tr = tape.pow(tr, -0.5);
    let w = tape.scale_by(zs, inv_sqrt_tr)?;
    tape.matmul(c, w)
}
