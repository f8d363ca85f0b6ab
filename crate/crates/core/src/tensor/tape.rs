//! Reverse-mode differentiation over a per-step recorded tape.
//!
//! Tensors are fp64, row-major, at most rank 2; a vector of length n is
//! stored as (n, 1). The tape is rebuilt for every forward pass and replayed
//! in reverse for gradients. Backward accumulates into `ParamArray::grad`,
//! so two backward calls without zeroing double the gradients.

use super::{ParamId, Params};
use crate::error::{Error, Result};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    /// a (m×k) · b (k×n) → (m×n)
    MatMul(TensorId, TensorId),
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    /// mat (m×n) + bias (m×1) broadcast over columns
    AddBias(TensorId, TensorId),
    /// mul·x + add, elementwise; only the multiplier matters in backward
    ScaleAdd(TensorId, f64),
    /// broadcast multiply by a 1-element tensor
    MulScalar(TensorId, TensorId),
    /// multiply each column j of a matrix by row[j]
    MulRowBroadcast(TensorId, TensorId),
    Tanh(TensorId),
    Sigmoid(TensorId),
    Relu(TensorId),
    Exp(TensorId),
    Ln(TensorId),
    Sum(TensorId),
    Mean(TensorId),
    Dot(TensorId, TensorId),
    /// softmax(x / temp) along the flattened vector
    Softmax(TensorId, f64),
    LogSoftmax(TensorId, f64),
    /// stack along rows; requires equal column counts
    Concat(TensorId, TensorId),
    /// pick one element of the flattened vector
    Gather(TensorId, usize),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    value: Vec<f64>,
}

/// Recorded computation for one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>) -> TensorId {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node { op, rows, cols, value });
        TensorId(self.nodes.len() - 1)
    }

    fn node(&self, id: TensorId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.node(id).value
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        let n = self.node(id);
        (n.rows, n.cols)
    }

    /// Scalar value of a 1-element tensor.
    pub fn scalar(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.node(id).value.len(), 1);
        self.node(id).value[0]
    }

    /// Constant column vector.
    pub fn leaf(&mut self, values: &[f64]) -> TensorId {
        self.push(Op::Leaf, values.len(), 1, values.to_vec())
    }

    /// Constant matrix, row-major.
    pub fn leaf_mat(&mut self, values: Vec<f64>, rows: usize, cols: usize) -> Result<TensorId> {
        if values.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "leaf_mat",
                left: format!("{rows}x{cols}"),
                right: format!("len {}", values.len()),
            });
        }
        Ok(self.push(Op::Leaf, rows, cols, values))
    }

    /// Bring a parameter onto the tape; gradients flow back into its array.
    pub fn param(&mut self, params: &Params, id: ParamId) -> TensorId {
        let p = params.get(id);
        let (rows, cols) = match p.shape() {
            [n] => (*n, 1),
            [m, n] => (*m, *n),
            s => panic!("parameter '{}' has unsupported rank {}", p.name(), s.len()),
        };
        self.push(Op::Param(id), rows, cols, p.values().to_vec())
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        // backward splits the gradient buffer at each input, so the two
        // operands must be distinct nodes
        let b = if a == b { self.scale_add(b, 1.0, 0.0) } else { b };
        let (m, k1) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k1 != k2 {
            return Err(Error::DimMismatch {
                context: "matmul",
                left: format!("{m}x{k1}"),
                right: format!("{k2}x{n}"),
            });
        }
        let (av, bv) = (&self.node(a).value, &self.node(b).value);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for k in 0..k1 {
                let aik = av[i * k1 + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[k * n..(k + 1) * n];
                for (j, b_kj) in brow.iter().enumerate() {
                    out[i * n + j] += aik * b_kj;
                }
            }
        }
        Ok(self.push(Op::MatMul(a, b), m, n, out))
    }

    fn binary_elementwise(
        &mut self,
        a: TensorId,
        b: TensorId,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<TensorId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(Error::DimMismatch {
                context,
                left: format!("{ra}x{ca}"),
                right: format!("{rb}x{cb}"),
            });
        }
        let out = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(self.push(op, ra, ca, out))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary_elementwise(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary_elementwise(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary_elementwise(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Broadcast-add a column vector to every column of a matrix.
    pub fn add_bias(&mut self, mat: TensorId, bias: TensorId) -> Result<TensorId> {
        let (m, n) = self.shape(mat);
        let (bm, bn) = self.shape(bias);
        if bm != m || bn != 1 {
            return Err(Error::DimMismatch {
                context: "add_bias",
                left: format!("{m}x{n}"),
                right: format!("{bm}x{bn}"),
            });
        }
        let bv = self.node(bias).value.clone();
        let out = self
            .node(mat)
            .value
            .iter()
            .enumerate()
            .map(|(idx, &x)| x + bv[idx / n])
            .collect();
        Ok(self.push(Op::AddBias(mat, bias), m, n, out))
    }

    pub fn scale(&mut self, x: TensorId, c: f64) -> TensorId {
        self.scale_add(x, c, 0.0)
    }

    /// Multiply column j of `x` ([m×n]) by entry j of `row` ([1×n]).
    pub fn mul_row_broadcast(&mut self, x: TensorId, row: TensorId) -> Result<TensorId> {
        let (m, n) = self.shape(x);
        let (rr, rc) = self.shape(row);
        if rr != 1 || rc != n {
            return Err(Error::DimMismatch {
                context: "mul_row_broadcast",
                left: format!("{m}x{n}"),
                right: format!("{rr}x{rc}"),
            });
        }
        let rv = self.node(row).value.clone();
        let out = self
            .node(x)
            .value
            .iter()
            .enumerate()
            .map(|(idx, &v)| v * rv[idx % n])
            .collect();
        Ok(self.push(Op::MulRowBroadcast(x, row), m, n, out))
    }

    /// Multiply every entry of `x` by the 1-element tensor `s`.
    pub fn mul_scalar(&mut self, x: TensorId, s: TensorId) -> Result<TensorId> {
        if self.node(s).value.len() != 1 {
            return Err(Error::DimMismatch {
                context: "mul_scalar",
                left: format!("{}x{}", self.node(x).rows, self.node(x).cols),
                right: format!("{}x{} (need 1x1)", self.node(s).rows, self.node(s).cols),
            });
        }
        let sv = self.node(s).value[0];
        let (r, c) = self.shape(x);
        let out = self.node(x).value.iter().map(|&v| sv * v).collect();
        Ok(self.push(Op::MulScalar(x, s), r, c, out))
    }

    pub fn scale_add(&mut self, x: TensorId, mul: f64, add: f64) -> TensorId {
        let (r, c) = self.shape(x);
        let out = self.node(x).value.iter().map(|&v| mul * v + add).collect();
        self.push(Op::ScaleAdd(x, mul), r, c, out)
    }

    fn unary(&mut self, x: TensorId, f: impl Fn(f64) -> f64, op: Op) -> TensorId {
        let (r, c) = self.shape(x);
        let out = self.node(x).value.iter().map(|&v| f(v)).collect();
        self.push(op, r, c, out)
    }

    pub fn tanh(&mut self, x: TensorId) -> TensorId {
        self.unary(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: TensorId) -> TensorId {
        self.unary(x, |v| 1.0 / (1.0 + (-v).exp()), Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: TensorId) -> TensorId {
        self.unary(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn exp(&mut self, x: TensorId) -> TensorId {
        self.unary(x, f64::exp, Op::Exp(x))
    }

    pub fn ln(&mut self, x: TensorId) -> Result<TensorId> {
        if self.node(x).value.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArg("ln of non-positive value".into()));
        }
        Ok(self.unary(x, f64::ln, Op::Ln(x)))
    }

    pub fn sum(&mut self, x: TensorId) -> TensorId {
        let s = self.node(x).value.iter().sum();
        self.push(Op::Sum(x), 1, 1, vec![s])
    }

    pub fn mean(&mut self, x: TensorId) -> TensorId {
        let n = self.node(x).value.len() as f64;
        let s: f64 = self.node(x).value.iter().sum();
        self.push(Op::Mean(x), 1, 1, vec![s / n])
    }

    pub fn dot(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(Error::DimMismatch {
                context: "dot",
                left: format!("{ra}x{ca}"),
                right: format!("{rb}x{cb}"),
            });
        }
        let s = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(&x, &y)| x * y)
            .sum();
        Ok(self.push(Op::Dot(a, b), 1, 1, vec![s]))
    }

    pub fn softmax(&mut self, x: TensorId, temperature: f64) -> Result<TensorId> {
        let probs = super::ops::softmax_of(&self.node(x).value, temperature)?;
        let (r, c) = self.shape(x);
        Ok(self.push(Op::Softmax(x, temperature), r, c, probs))
    }

    pub fn log_softmax(&mut self, x: TensorId, temperature: f64) -> Result<TensorId> {
        let lp = super::ops::log_softmax_of(&self.node(x).value, temperature)?;
        let (r, c) = self.shape(x);
        Ok(self.push(Op::LogSoftmax(x, temperature), r, c, lp))
    }

    /// Stack two tensors along rows (vectors concatenate end to end).
    pub fn concat(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if ca != cb {
            return Err(Error::DimMismatch {
                context: "concat",
                left: format!("{ra}x{ca}"),
                right: format!("{rb}x{cb}"),
            });
        }
        let mut out = self.node(a).value.clone();
        out.extend_from_slice(&self.node(b).value);
        Ok(self.push(Op::Concat(a, b), ra + rb, ca, out))
    }

    /// Join two single-row tensors along columns: [1×a] + [1×b] → [1×(a+b)].
    pub fn concat_row(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if ra != 1 || rb != 1 {
            return Err(Error::DimMismatch {
                context: "concat_row",
                left: format!("{ra}x{ca}"),
                right: format!("{rb}x{cb}"),
            });
        }
        let mut out = self.node(a).value.clone();
        out.extend_from_slice(&self.node(b).value);
        Ok(self.push(Op::Concat(a, b), 1, ca + cb, out))
    }

    pub fn gather(&mut self, x: TensorId, index: usize) -> Result<TensorId> {
        let v = &self.node(x).value;
        if index >= v.len() {
            return Err(Error::InvalidArg(format!(
                "gather index {index} out of range {}",
                v.len()
            )));
        }
        let val = v[index];
        Ok(self.push(Op::Gather(x, index), 1, 1, vec![val]))
    }

    /// Reverse sweep from a scalar loss head; accumulates into `params` grads.
    pub fn backward(&mut self, loss: TensorId, params: &mut Params) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::NoForward);
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::InvalidArg("loss id not on this tape".into()));
        }
        if self.node(loss).value.len() != 1 {
            return Err(Error::InvalidArg(format!(
                "backward requires a scalar loss, got {}x{}",
                self.node(loss).rows,
                self.node(loss).cols
            )));
        }

        let mut grads: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        grads[loss.0][0] = 1.0;

        // inputs always precede their consumers, so splitting at idx gives
        // mutable access to every input grad while reading this node's grad
        for idx in (0..=loss.0).rev() {
            let (before, at) = grads.split_at_mut(idx);
            let g: &[f64] = &at[0];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::Param(pid) => params.get_mut(*pid).accumulate_grad(g),
                Op::MatMul(a, b) => {
                    let (m, k) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
                    let n = self.nodes[b.0].cols;
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    debug_assert_ne!(a.0, b.0, "matmul inputs alias");
                    let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
                    let (first, second) = before.split_at_mut(hi);
                    let (ga, gb) = if a.0 < b.0 {
                        (&mut first[lo], &mut second[0])
                    } else {
                        (&mut second[0], &mut first[lo])
                    };
                    // dA = G · Bᵀ
                    for i in 0..m {
                        for kk in 0..k {
                            let mut acc = 0.0;
                            let grow = &g[i * n..(i + 1) * n];
                            let brow = &bv[kk * n..(kk + 1) * n];
                            for j in 0..n {
                                acc += grow[j] * brow[j];
                            }
                            ga[i * k + kk] += acc;
                        }
                    }
                    // dB = Aᵀ · G
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let arow = &av[i * k..(i + 1) * k];
                        for kk in 0..k {
                            let aik = arow[kk];
                            if aik == 0.0 {
                                continue;
                            }
                            let gbrow = &mut gb[kk * n..(kk + 1) * n];
                            for j in 0..n {
                                gbrow[j] += aik * grow[j];
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    if a == b {
                        for (i, &gi) in g.iter().enumerate() {
                            before[a.0][i] += 2.0 * gi;
                        }
                    } else {
                        for (i, &gi) in g.iter().enumerate() {
                            before[a.0][i] += gi;
                        }
                        for (i, &gi) in g.iter().enumerate() {
                            before[b.0][i] += gi;
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if a == b {
                        // grads cancel
                    } else {
                        for (i, &gi) in g.iter().enumerate() {
                            before[a.0][i] += gi;
                        }
                        for (i, &gi) in g.iter().enumerate() {
                            before[b.0][i] -= gi;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    if a == b {
                        for (i, &gi) in g.iter().enumerate() {
                            before[a.0][i] += 2.0 * gi * av[i];
                        }
                    } else {
                        for (i, &gi) in g.iter().enumerate() {
                            before[a.0][i] += gi * bv[i];
                        }
                        for (i, &gi) in g.iter().enumerate() {
                            before[b.0][i] += gi * av[i];
                        }
                    }
                }
                Op::AddBias(mat, bias) => {
                    let n = self.nodes[mat.0].cols;
                    for (i, &gi) in g.iter().enumerate() {
                        before[mat.0][i] += gi;
                    }
                    for (i, &gi) in g.iter().enumerate() {
                        before[bias.0][i / n] += gi;
                    }
                }
                Op::ScaleAdd(x, mul) => {
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * mul;
                    }
                }
                Op::MulScalar(x, sc) => {
                    let sv = self.nodes[sc.0].value[0];
                    let xv = &self.nodes[x.0].value;
                    let mut ds = 0.0;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * sv;
                        ds += gi * xv[i];
                    }
                    before[sc.0][0] += ds;
                }
                Op::MulRowBroadcast(x, row) => {
                    let n = self.nodes[x.0].cols;
                    let rv = &self.nodes[row.0].value;
                    let xv = &self.nodes[x.0].value;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * rv[i % n];
                    }
                    for (i, &gi) in g.iter().enumerate() {
                        before[row.0][i % n] += gi * xv[i];
                    }
                }
                Op::Tanh(x) => {
                    let out = &self.nodes[idx].value;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * (1.0 - out[i] * out[i]);
                    }
                }
                Op::Sigmoid(x) => {
                    let out = &self.nodes[idx].value;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * out[i] * (1.0 - out[i]);
                    }
                }
                Op::Relu(x) => {
                    let inp = &self.nodes[x.0].value;
                    for (i, &gi) in g.iter().enumerate() {
                        if inp[i] > 0.0 {
                            before[x.0][i] += gi;
                        }
                    }
                }
                Op::Exp(x) => {
                    let out = &self.nodes[idx].value;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi * out[i];
                    }
                }
                Op::Ln(x) => {
                    let inp = &self.nodes[x.0].value;
                    for (i, &gi) in g.iter().enumerate() {
                        before[x.0][i] += gi / inp[i];
                    }
                }
                Op::Sum(x) => {
                    let gi = g[0];
                    for gx in before[x.0].iter_mut() {
                        *gx += gi;
                    }
                }
                Op::Mean(x) => {
                    let n = self.nodes[x.0].value.len() as f64;
                    let gi = g[0] / n;
                    for gx in before[x.0].iter_mut() {
                        *gx += gi;
                    }
                }
                Op::Dot(a, b) => {
                    let gi = g[0];
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    if a == b {
                        for i in 0..av.len() {
                            before[a.0][i] += 2.0 * gi * av[i];
                        }
                    } else {
                        for i in 0..av.len() {
                            before[a.0][i] += gi * bv[i];
                        }
                        for i in 0..av.len() {
                            before[b.0][i] += gi * av[i];
                        }
                    }
                }
                Op::Softmax(x, temp) => {
                    let sm = &self.nodes[idx].value;
                    let inner: f64 = g.iter().zip(sm).map(|(&gi, &si)| gi * si).sum();
                    for (i, &si) in sm.iter().enumerate() {
                        before[x.0][i] += si * (g[i] - inner) / temp;
                    }
                }
                Op::LogSoftmax(x, temp) => {
                    let lp = &self.nodes[idx].value;
                    let gsum: f64 = g.iter().sum();
                    for (i, &lpi) in lp.iter().enumerate() {
                        before[x.0][i] += (g[i] - lpi.exp() * gsum) / temp;
                    }
                }
                Op::Concat(a, b) => {
                    let na = self.nodes[a.0].value.len();
                    for (i, &gi) in g.iter().enumerate() {
                        if i < na {
                            before[a.0][i] += gi;
                        } else {
                            before[b.0][i - na] += gi;
                        }
                    }
                }
                Op::Gather(x, index) => {
                    before[x.0][*index] += g[0];
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_param_gives_unit_grads() {
        let mut params = Params::new();
        let w = params.register("w", &[3], vec![1.0, -2.0, 0.5]).unwrap();
        let mut tape = Tape::new();
        let x = tape.param(&params, w);
        let loss = tape.sum(x);
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(params.get(w).grad(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn double_backward_doubles_grads() {
        let mut params = Params::new();
        let w = params.register("w", &[2], vec![3.0, 4.0]).unwrap();
        let mut tape = Tape::new();
        let x = tape.param(&params, w);
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss, &mut params).unwrap();
        let once: Vec<f64> = params.get(w).grad().to_vec();
        tape.backward(loss, &mut params).unwrap();
        let twice: Vec<f64> = params.get(w).grad().to_vec();
        for (a, b) in once.iter().zip(&twice) {
            assert_eq!(*b, 2.0 * *a);
        }
        assert_eq!(once, vec![6.0, 8.0]);
    }

    #[test]
    fn backward_without_forward_errors() {
        let mut params = Params::new();
        let mut tape = Tape::new();
        let err = tape.backward(TensorId(0), &mut params);
        assert!(matches!(err, Err(Error::NoForward)));
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut params = Params::new();
        let mut tape = Tape::new();
        let x = tape.leaf(&[1.0, 2.0]);
        assert!(tape.backward(x, &mut params).is_err());
    }

    #[test]
    fn matmul_shapes_and_values() {
        let mut tape = Tape::new();
        let a = tape.leaf_mat(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 3).unwrap();
        let b = tape.leaf(&[1.0, 0.0, -1.0]);
        let y = tape.matmul(a, b).unwrap();
        assert_eq!(tape.shape(y), (2, 1));
        assert_eq!(tape.value(y), &[-2.0, -2.0]);
        let bad = tape.leaf(&[1.0, 2.0]);
        assert!(tape.matmul(a, bad).is_err());
    }

    #[test]
    fn matmul_grad_matches_hand_computation() {
        // loss = sum(W·x), dW = 1·xᵀ, dx = Wᵀ·1
        let mut params = Params::new();
        let w = params.register("w", &[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let xp = params.register("x", &[2], vec![5.0, 7.0]).unwrap();
        let mut tape = Tape::new();
        let wt = tape.param(&params, w);
        let xt = tape.param(&params, xp);
        let y = tape.matmul(wt, xt).unwrap();
        let loss = tape.sum(y);
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(params.get(w).grad(), &[5.0, 7.0, 5.0, 7.0]);
        assert_eq!(params.get(xp).grad(), &[4.0, 6.0]);
    }

    #[test]
    fn concat_routes_gradients() {
        let mut params = Params::new();
        let a = params.register("a", &[2], vec![1.0, 2.0]).unwrap();
        let b = params.register("b", &[3], vec![3.0, 4.0, 5.0]).unwrap();
        let mut tape = Tape::new();
        let at = tape.param(&params, a);
        let bt = tape.param(&params, b);
        let c = tape.concat(at, bt).unwrap();
        assert_eq!(tape.shape(c), (5, 1));
        let picked = tape.gather(c, 3).unwrap();
        tape.backward(picked, &mut params).unwrap();
        assert_eq!(params.get(a).grad(), &[0.0, 0.0]);
        assert_eq!(params.get(b).grad(), &[0.0, 1.0, 0.0]);
    }
}
