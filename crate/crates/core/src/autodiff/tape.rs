use super::{AutodiffError, Tensor};

/// Arguments to `log` are clamped to at least this value.
pub const LOG_FLOOR: f64 = 1e-12;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Reduction axis. `Rows` collapses the row dimension (result is 1×cols),
/// `Cols` collapses the column dimension (result is rows×1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    Exp(Var),
    Log(Var),
    Sigmoid(Var),
    Relu(Var),
    Sqrt(Var),
    Clamp(Var, f64, f64),
    Transpose(Var),
    Sum(Var, Option<Axis>),
    Mean(Var, Option<Axis>),
    LogSumExp(Var, Axis),
    WeightedLogSumExp(Var, Tensor),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Scale(..) => "scale",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Sigmoid(..) => "sigmoid",
            Op::Relu(..) => "relu",
            Op::Sqrt(..) => "sqrt",
            Op::Clamp(..) => "clamp",
            Op::Transpose(..) => "transpose",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::LogSumExp(..) => "logsumexp",
            Op::WeightedLogSumExp(..) => "weighted_logsumexp",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Define-by-run record of tensor operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede it
/// and a reverse sweep over the node list is a valid topological traversal.
/// A tape is meant to be rebuilt for each forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    diagnostics: Vec<String>,
}

fn broadcast_dim(a: usize, b: usize) -> Option<usize> {
    if a == b {
        Some(a)
    } else if a == 1 {
        Some(b)
    } else if b == 1 {
        Some(a)
    } else {
        None
    }
}

/// Sums `g` down to `shape`, undoing a broadcast.
fn reduce_to(g: &Tensor, shape: (usize, usize)) -> Tensor {
    if g.shape() == shape {
        return g.clone();
    }
    let mut out = Tensor::zeros(shape.0, shape.1);
    for r in 0..g.rows() {
        let tr = if shape.0 == 1 { 0 } else { r };
        for c in 0..g.cols() {
            let tc = if shape.1 == 1 { 0 } else { c };
            let v = out.get(tr, tc) + g.get(r, c);
            out.set(tr, tc, v);
        }
    }
    out
}

#[inline]
fn bget(t: &Tensor, r: usize, c: usize) -> f64 {
    let rr = if t.rows() == 1 { 0 } else { r };
    let cc = if t.cols() == 1 { 0 } else { c };
    t.get(rr, cc)
}

fn zip_broadcast(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor, AutodiffError> {
    let mismatch = || AutodiffError::DimensionMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    };
    let rows = broadcast_dim(a.rows(), b.rows()).ok_or_else(mismatch)?;
    let cols = broadcast_dim(a.cols(), b.cols()).ok_or_else(mismatch)?;
    if a.shape() == b.shape() {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        return Tensor::new(rows, cols, data);
    }
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            data.push(f(bget(a, r, c), bget(b, r, c)));
        }
    }
    Tensor::new(rows, cols, data)
}

fn reduce_sum(t: &Tensor, axis: Option<Axis>) -> Tensor {
    match axis {
        None => Tensor::scalar(t.sum()),
        Some(Axis::Rows) => {
            let mut out = Tensor::zeros(1, t.cols());
            for r in 0..t.rows() {
                for (o, v) in out.data_mut().iter_mut().zip(t.row(r)) {
                    *o += v;
                }
            }
            out
        }
        Some(Axis::Cols) => Tensor::column((0..t.rows()).map(|r| t.row(r).iter().sum()).collect()),
    }
}

fn reduce_count(t: &Tensor, axis: Option<Axis>) -> usize {
    match axis {
        None => t.len(),
        Some(Axis::Rows) => t.rows(),
        Some(Axis::Cols) => t.cols(),
    }
}

/// Expands a reduced gradient back over the reduced axis.
fn expand(g: &Tensor, shape: (usize, usize), axis: Option<Axis>) -> Tensor {
    let mut out = Tensor::zeros(shape.0, shape.1);
    for r in 0..shape.0 {
        for c in 0..shape.1 {
            let v = match axis {
                None => g.get(0, 0),
                Some(Axis::Rows) => g.get(0, c),
                Some(Axis::Cols) => g.get(r, 0),
            };
            out.set(r, c, v);
        }
    }
    out
}

fn stable_lse(values: impl Iterator<Item = (f64, f64)> + Clone) -> Option<f64> {
    // (value, weight) pairs; entries with non-positive weight are ignored.
    let max = values
        .clone()
        .filter(|&(_, w)| w > 0.0)
        .map(|(v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let s: f64 = values
        .filter(|&(_, w)| w > 0.0)
        .map(|(v, w)| w * (v - max).exp())
        .sum();
    Some(max + s.ln())
}

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

    /// Records a leaf tensor.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(Tensor::scalar(value))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Value of a 1×1 node.
    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Gradient accumulated for `v` by the last [`Tape::backward`]; zeros
    /// when the root did not depend on `v`.
    pub fn grad(&self, v: Var) -> Tensor {
        match self.grads.get(v.0).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shape(v);
                Tensor::zeros(r, c)
            }
        }
    }

    /// Numeric events noticed during the forward pass (clamped logs, NaNs).
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        if !matches!(op, Op::Leaf) && value.data().iter().any(|x| x.is_nan()) {
            self.diagnostics.push(format!(
                "NaN produced by {} at node {}",
                op.name(),
                self.nodes.len()
            ));
        }
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = self.value(a).map(f);
        let ng = self.requires_grad(a);
        self.push(value, op, ng)
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, AutodiffError> {
        let value = zip_broadcast(name, self.value(a), self.value(b), f)?;
        let ng = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(value, op, ng))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).matmul(self.value(b))?;
        let ng = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    /// Element-wise sum; operands may broadcast along unit dimensions.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("div", a, b, Op::Div(a, b), |x, y| x / y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |x| c * x)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    /// Natural log with the argument clamped to [`LOG_FLOOR`]. Clamped
    /// non-positive inputs are reported through [`Tape::diagnostics`].
    pub fn log(&mut self, a: Var) -> Var {
        let clamped = self.value(a).data().iter().filter(|&&x| x <= 0.0).count();
        if clamped > 0 {
            self.diagnostics.push(format!(
                "log received {clamped} non-positive input(s) at node {}; clamped to {LOG_FLOOR:e}",
                self.nodes.len()
            ));
        }
        self.unary(a, Op::Log(a), |x| {
            if x.is_nan() {
                x
            } else {
                x.max(LOG_FLOOR).ln()
            }
        })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x.is_nan() { x } else { x.max(0.0) })
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sqrt(a), f64::sqrt)
    }

    /// Clamps into `[lo, hi]`; the gradient is zero where clamping is active.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let one = self.scalar(1.0);
        self.sub(one, a)
            .expect("scalar broadcasts against any shape")
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let ng = self.requires_grad(a);
        self.push(value, Op::Transpose(a), ng)
    }

    pub fn sum(&mut self, a: Var, axis: Option<Axis>) -> Result<Var, AutodiffError> {
        if self.value(a).is_empty() {
            return Err(AutodiffError::EmptyReduction("sum"));
        }
        let value = reduce_sum(self.value(a), axis);
        let ng = self.requires_grad(a);
        Ok(self.push(value, Op::Sum(a, axis), ng))
    }

    pub fn mean(&mut self, a: Var, axis: Option<Axis>) -> Result<Var, AutodiffError> {
        if self.value(a).is_empty() {
            return Err(AutodiffError::EmptyReduction("mean"));
        }
        let n = reduce_count(self.value(a), axis) as f64;
        let value = reduce_sum(self.value(a), axis).map(|x| x / n);
        let ng = self.requires_grad(a);
        Ok(self.push(value, Op::Mean(a, axis), ng))
    }

    /// Max-shifted log-sum-exp along `axis`.
    pub fn logsumexp(&mut self, a: Var, axis: Axis) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(AutodiffError::EmptyReduction("logsumexp"));
        }
        let value = match axis {
            Axis::Cols => Tensor::column(
                (0..t.rows())
                    .map(|r| stable_lse(t.row(r).iter().map(|&v| (v, 1.0))).unwrap())
                    .collect(),
            ),
            Axis::Rows => {
                let vals = (0..t.cols())
                    .map(|c| stable_lse((0..t.rows()).map(|r| (t.get(r, c), 1.0))).unwrap())
                    .collect();
                Tensor::new(1, t.cols(), vals)?
            }
        };
        let ng = self.requires_grad(a);
        Ok(self.push(value, Op::LogSumExp(a, axis), ng))
    }

    /// Per-row `log Σ_j w_ij exp(a_ij)` over entries with `w_ij > 0`.
    ///
    /// `weights` is a constant with the same shape as `a`. Rows without any
    /// positive weight produce 0 and pass no gradient.
    pub fn weighted_logsumexp(&mut self, a: Var, weights: Tensor) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        if t.shape() != weights.shape() {
            return Err(AutodiffError::DimensionMismatch {
                op: "weighted_logsumexp",
                left: t.shape(),
                right: weights.shape(),
            });
        }
        if t.is_empty() {
            return Err(AutodiffError::EmptyReduction("weighted_logsumexp"));
        }
        let value = Tensor::column(
            (0..t.rows())
                .map(|r| {
                    stable_lse(t.row(r).iter().copied().zip(weights.row(r).iter().copied()))
                        .unwrap_or(0.0)
                })
                .collect(),
        );
        let ng = self.requires_grad(a);
        Ok(self.push(value, Op::WeightedLogSumExp(a, weights), ng))
    }

    /// Reverse sweep from a 1×1 `root`. Gradients from any previous sweep are
    /// discarded first.
    pub fn backward(&mut self, root: Var) -> Result<(), AutodiffError> {
        let shape = self.shape(root);
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarRoot(shape));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[root.0] = Some(Tensor::scalar(1.0));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].needs_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.grads[i].clone() else {
                continue;
            };
            for (input, contribution) in self.local_grads(i, &g) {
                if !self.nodes[input.0].needs_grad {
                    continue;
                }
                match &mut self.grads[input.0] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            }
        }
        Ok(())
    }

    fn local_grads(&self, i: usize, g: &Tensor) -> Vec<(Var, Tensor)> {
        let node = &self.nodes[i];
        let out = &node.value;
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let ew = |t: &Tensor, f: &dyn Fn(f64, f64) -> f64| {
            let data = g
                .data()
                .iter()
                .zip(t.data())
                .map(|(&gv, &x)| f(gv, x))
                .collect();
            Tensor::new(g.rows(), g.cols(), data).expect("same shape")
        };
        match &node.op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) => {
                let mut v = Vec::with_capacity(2);
                if wants(*a) {
                    v.push((*a, g.matmul(&val(*b).transpose()).expect("shapes checked")));
                }
                if wants(*b) {
                    v.push((*b, val(*a).transpose().matmul(g).expect("shapes checked")));
                }
                v
            }
            Op::Add(a, b) => vec![
                (*a, reduce_to(g, val(*a).shape())),
                (*b, reduce_to(g, val(*b).shape())),
            ],
            Op::Sub(a, b) => vec![
                (*a, reduce_to(g, val(*a).shape())),
                (*b, reduce_to(&g.map(|x| -x), val(*b).shape())),
            ],
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let mut v = Vec::with_capacity(2);
                if wants(*a) {
                    let full = zip_broadcast("mul", g, tb, |gv, y| gv * y).expect("broadcast");
                    v.push((*a, reduce_to(&full, ta.shape())));
                }
                if wants(*b) {
                    let full = zip_broadcast("mul", g, ta, |gv, x| gv * x).expect("broadcast");
                    v.push((*b, reduce_to(&full, tb.shape())));
                }
                v
            }
            Op::Div(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let mut v = Vec::with_capacity(2);
                if wants(*a) {
                    let full = zip_broadcast("div", g, tb, |gv, y| gv / y).expect("broadcast");
                    v.push((*a, reduce_to(&full, ta.shape())));
                }
                if wants(*b) {
                    // d(a/b)/db = -out / b
                    let q = zip_broadcast("div", out, tb, |o, y| -o / y).expect("broadcast");
                    let full = ew(&q, &|gv, x| gv * x);
                    v.push((*b, reduce_to(&full, tb.shape())));
                }
                v
            }
            Op::Scale(a, c) => vec![(*a, g.map(|x| c * x))],
            Op::Exp(a) => vec![(*a, ew(out, &|gv, o| gv * o))],
            Op::Log(a) => vec![(
                *a,
                ew(val(*a), &|gv, x| if x >= LOG_FLOOR { gv / x } else { 0.0 }),
            )],
            Op::Sigmoid(a) => vec![(*a, ew(out, &|gv, s| gv * s * (1.0 - s)))],
            Op::Relu(a) => vec![(*a, ew(val(*a), &|gv, x| if x > 0.0 { gv } else { 0.0 }))],
            Op::Sqrt(a) => vec![(
                *a,
                ew(out, &|gv, s| if s > 0.0 { gv / (2.0 * s) } else { 0.0 }),
            )],
            Op::Clamp(a, lo, hi) => vec![(
                *a,
                ew(val(*a), &|gv, x| {
                    if x >= *lo && x <= *hi {
                        gv
                    } else {
                        0.0
                    }
                }),
            )],
            Op::Transpose(a) => vec![(*a, g.transpose())],
            Op::Sum(a, axis) => vec![(*a, expand(g, val(*a).shape(), *axis))],
            Op::Mean(a, axis) => {
                let n = reduce_count(val(*a), *axis) as f64;
                vec![(*a, expand(g, val(*a).shape(), *axis).map(|x| x / n))]
            }
            Op::LogSumExp(a, axis) => {
                let ta = val(*a);
                let mut ga = Tensor::zeros(ta.rows(), ta.cols());
                for r in 0..ta.rows() {
                    for c in 0..ta.cols() {
                        let (lse, gv) = match axis {
                            Axis::Cols => (out.get(r, 0), g.get(r, 0)),
                            Axis::Rows => (out.get(0, c), g.get(0, c)),
                        };
                        ga.set(r, c, gv * (ta.get(r, c) - lse).exp());
                    }
                }
                vec![(*a, ga)]
            }
            Op::WeightedLogSumExp(a, w) => {
                let ta = val(*a);
                let mut ga = Tensor::zeros(ta.rows(), ta.cols());
                for r in 0..ta.rows() {
                    let lse = out.get(r, 0);
                    let gv = g.get(r, 0);
                    for c in 0..ta.cols() {
                        let wv = w.get(r, c);
                        if wv > 0.0 {
                            ga.set(r, c, gv * wv * (ta.get(r, c) - lse).exp());
                        }
                    }
                }
                vec![(*a, ga)]
            }
        }
    }

    /// Fails when `v` holds a NaN or infinity.
    pub fn check_finite(&self, v: Var) -> Result<(), AutodiffError> {
        if self.value(v).all_finite() {
            Ok(())
        } else {
            Err(AutodiffError::NonFinite {
                node: v.0,
                op: self.nodes[v.0].op.name(),
            })
        }
    }
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
