//! Define-by-run reverse-mode differentiation over small dense vectors.
//!
//! Every operation evaluates eagerly and appends a node. Matrices are never
//! nodes: matrix-shaped parameters are read in place from the borrowed
//! [`ParamStore`] and their gradients land directly in a [`Gradients`]
//! buffer during [`Tape::backward`].
//!
//! Shape errors are programming errors and panic.

use super::params::{Gradients, ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    EmbedMean {
        table: ParamId,
        rows: Vec<usize>,
    },
    MatVec {
        w: ParamId,
        x: Var,
    },
    MatTVec {
        w: ParamId,
        x: Var,
    },
    Concat(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine {
        x: Var,
        scale: f64,
    },
    ScaleConst {
        x: Var,
        factors: Vec<f64>,
    },
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Abs(Var),
    Dot(Var, Var),
    Sum(Var),
    Stack(Vec<Var>),
    Index(Var, usize),
    LogSoftmax(Var),
    ConvMaxPool {
        table: ParamId,
        rows: Vec<usize>,
        filters: ParamId,
        bias: ParamId,
        width: usize,
        argmax: Vec<usize>,
    },
    BceWithLogits {
        x: Var,
        target: f64,
    },
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// Value of a one-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        let value = self.value(v);
        assert_eq!(value.len(), 1, "expected a scalar node");
        value[0]
    }

    /// A node with no parents; gradients stop here.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Constant)
    }

    /// A vector parameter as a node (biases, value weights).
    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.params.get(id).data.clone();
        self.push(value, Op::Param(id))
    }

    /// Mean of embedding rows; zero vector for no rows.
    pub fn embed_mean(&mut self, table: ParamId, rows: &[usize]) -> Var {
        let t = self.params.get(table);
        let (n_rows, width) = t.dims();
        let mut value = vec![0.0; width];
        for &r in rows {
            assert!(r < n_rows, "embedding row {r} out of range");
            for (acc, x) in value.iter_mut().zip(&t.data[r * width..(r + 1) * width]) {
                *acc += x;
            }
        }
        if !rows.is_empty() {
            let inv = 1.0 / rows.len() as f64;
            value.iter_mut().for_each(|x| *x *= inv);
        }
        self.push(
            value,
            Op::EmbedMean {
                table,
                rows: rows.to_vec(),
            },
        )
    }

    /// `W x` for a parameter matrix `W`.
    pub fn matvec(&mut self, w: ParamId, x: Var) -> Var {
        let m = self.params.get(w);
        let (rows, cols) = m.dims();
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.len(), cols, "matvec width mismatch");
        let value = (0..rows)
            .map(|r| dot(&m.data[r * cols..(r + 1) * cols], xv))
            .collect();
        self.push(value, Op::MatVec { w, x })
    }

    /// `Wᵀ x` for a parameter matrix `W`.
    pub fn matvec_t(&mut self, w: ParamId, x: Var) -> Var {
        let m = self.params.get(w);
        let (rows, cols) = m.dims();
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.len(), rows, "transposed matvec height mismatch");
        let mut value = vec![0.0; cols];
        for (r, &xr) in xv.iter().enumerate() {
            for (acc, w) in value.iter_mut().zip(&m.data[r * cols..(r + 1) * cols]) {
                *acc += w * xr;
            }
        }
        self.push(value, Op::MatTVec { w, x })
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let mut value = self.value(a).to_vec();
        value.extend_from_slice(self.value(b));
        self.push(value, Op::Concat(a, b))
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.len(), bv.len(), "elementwise length mismatch");
        av.iter().zip(bv).map(|(x, y)| f(*x, *y)).collect()
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.value(a).iter().map(|&x| f(x)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x + y);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x - y);
        self.push(value, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x * y);
        self.push(value, Op::Mul(a, b))
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let value = self.map(x, |v| scale * v + shift);
        self.push(value, Op::Affine { x, scale })
    }

    /// Elementwise product with fixed factors.
    pub fn scale_const(&mut self, x: Var, factors: &[f64]) -> Var {
        let xv = self.value(x);
        assert_eq!(xv.len(), factors.len(), "factor length mismatch");
        let value = xv.iter().zip(factors).map(|(a, b)| a * b).collect();
        self.push(
            value,
            Op::ScaleConst {
                x,
                factors: factors.to_vec(),
            },
        )
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.map(x, sigmoid);
        self.push(value, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let value = self.map(x, f64::tanh);
        self.push(value, Op::Tanh(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let value = self.map(x, f64::exp);
        self.push(value, Op::Exp(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let value = self.map(x, f64::abs);
        self.push(value, Op::Abs(x))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.len(), bv.len(), "dot length mismatch");
        let value = vec![dot(av, bv)];
        self.push(value, Op::Dot(a, b))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = vec![self.value(x).iter().sum()];
        self.push(value, Op::Sum(x))
    }

    /// Collects scalar nodes into one vector.
    pub fn stack(&mut self, items: &[Var]) -> Var {
        let value = items.iter().map(|&v| self.scalar(v)).collect();
        self.push(value, Op::Stack(items.to_vec()))
    }

    pub fn index(&mut self, x: Var, i: usize) -> Var {
        let value = vec![self.value(x)[i]];
        self.push(value, Op::Index(x, i))
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        assert!(!xv.is_empty(), "log-softmax of an empty vector");
        let max = xv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + xv.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let value = xv.iter().map(|v| v - lse).collect();
        self.push(value, Op::LogSoftmax(x))
    }

    /// One bank of 1-D convolution filters slid over embedded tokens,
    /// max-pooled over positions, then rectified.
    ///
    /// `filters` is `[maps, width * dim]`, `bias` is `[maps]`. Sequences
    /// shorter than `width` are padded with zero vectors.
    pub fn conv_max_pool(
        &mut self,
        table: ParamId,
        rows: &[usize],
        filters: ParamId,
        bias: ParamId,
        width: usize,
    ) -> Var {
        let t = self.params.get(table);
        let f = self.params.get(filters);
        let b = self.params.get(bias);
        let (n_rows, dim) = t.dims();
        let (maps, span) = f.dims();
        assert_eq!(span, width * dim, "filter width mismatch");
        assert_eq!(b.len(), maps, "bias length mismatch");
        assert!(
            rows.iter().all(|&r| r < n_rows),
            "embedding row out of range"
        );

        let positions = rows.len().max(width) - width + 1;
        let mut value = vec![0.0; maps];
        let mut argmax = vec![0; maps];
        for m in 0..maps {
            let filter = &f.data[m * span..(m + 1) * span];
            let mut best = f64::NEG_INFINITY;
            for p in 0..positions {
                let mut z = b.data[m];
                for o in 0..width {
                    if let Some(&r) = rows.get(p + o) {
                        z += dot(
                            &filter[o * dim..(o + 1) * dim],
                            &t.data[r * dim..(r + 1) * dim],
                        );
                    }
                }
                if z > best {
                    best = z;
                    argmax[m] = p;
                }
            }
            value[m] = best.max(0.0);
        }
        self.push(
            value,
            Op::ConvMaxPool {
                table,
                rows: rows.to_vec(),
                filters,
                bias,
                width,
                argmax,
            },
        )
    }

    /// Binary cross-entropy of a logit against a 0/1 target.
    pub fn bce_with_logits(&mut self, x: Var, target: f64) -> Var {
        let z = self.scalar(x);
        let value = vec![z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()];
        self.push(value, Op::BceWithLogits { x, target })
    }

    /// Gradients of a scalar node with respect to every parameter.
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(
            self.value(output).len(),
            1,
            "backward needs a scalar output"
        );
        let mut param_grads = Gradients::zeros_like(self.params);
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); output.0 + 1];
        grads[output.0] = vec![1.0];

        for i in (0..=output.0).rev() {
            let g = std::mem::take(&mut grads[i]);
            if g.is_empty() {
                continue;
            }
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => add_into(param_grads.get_mut(*id), &g),
                Op::EmbedMean { table, rows } => {
                    if rows.is_empty() {
                        continue;
                    }
                    let width = g.len();
                    let inv = 1.0 / rows.len() as f64;
                    let buf = param_grads.get_mut(*table);
                    for &r in rows {
                        for (acc, gi) in buf[r * width..(r + 1) * width].iter_mut().zip(&g) {
                            *acc += gi * inv;
                        }
                    }
                }
                Op::MatVec { w, x } => {
                    let m = self.params.get(*w);
                    let (rows, cols) = m.dims();
                    let xv = self.value(*x);
                    let buf = param_grads.get_mut(*w);
                    for r in 0..rows {
                        if g[r] == 0.0 {
                            continue;
                        }
                        for (acc, xc) in buf[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                            *acc += g[r] * xc;
                        }
                    }
                    let mut gx = vec![0.0; cols];
                    for r in 0..rows {
                        for (acc, w) in gx.iter_mut().zip(&m.data[r * cols..(r + 1) * cols]) {
                            *acc += g[r] * w;
                        }
                    }
                    accumulate(&mut grads, *x, &gx);
                }
                Op::MatTVec { w, x } => {
                    let m = self.params.get(*w);
                    let (rows, cols) = m.dims();
                    let xv = self.value(*x);
                    let buf = param_grads.get_mut(*w);
                    for r in 0..rows {
                        for (acc, gc) in buf[r * cols..(r + 1) * cols].iter_mut().zip(&g) {
                            *acc += xv[r] * gc;
                        }
                    }
                    let gx: Vec<f64> = (0..rows)
                        .map(|r| dot(&m.data[r * cols..(r + 1) * cols], &g))
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Concat(a, b) => {
                    let split = self.value(*a).len();
                    accumulate(&mut grads, *a, &g[..split]);
                    accumulate(&mut grads, *b, &g[split..]);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                    accumulate(&mut grads, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> = g.iter().zip(self.value(*b)).map(|(g, y)| g * y).collect();
                    let gb: Vec<f64> = g.iter().zip(self.value(*a)).map(|(g, x)| g * x).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Affine { x, scale } => {
                    let gx: Vec<f64> = g.iter().map(|v| v * scale).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::ScaleConst { x, factors } => {
                    let gx: Vec<f64> = g.iter().zip(factors).map(|(g, f)| g * f).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Sigmoid(x) => {
                    let gx: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, s)| g * s * (1.0 - s))
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Tanh(x) => {
                    let gx: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, t)| g * (1.0 - t * t))
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Exp(x) => {
                    let gx: Vec<f64> = g.iter().zip(&node.value).map(|(g, e)| g * e).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Abs(x) => {
                    let gx: Vec<f64> = g
                        .iter()
                        .zip(self.value(*x))
                        .map(|(g, v)| {
                            if *v > 0.0 {
                                *g
                            } else if *v < 0.0 {
                                -g
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Dot(a, b) => {
                    let ga: Vec<f64> = self.value(*b).iter().map(|y| g[0] * y).collect();
                    let gb: Vec<f64> = self.value(*a).iter().map(|x| g[0] * x).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Sum(x) => {
                    let gx = vec![g[0]; self.value(*x).len()];
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Stack(items) => {
                    for (item, gi) in items.iter().zip(&g) {
                        accumulate(&mut grads, *item, &[*gi]);
                    }
                }
                Op::Index(x, k) => {
                    let mut gx = vec![0.0; self.value(*x).len()];
                    gx[*k] = g[0];
                    accumulate(&mut grads, *x, &gx);
                }
                Op::LogSoftmax(x) => {
                    let total: f64 = g.iter().sum();
                    let gx: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, y)| g - y.exp() * total)
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::ConvMaxPool {
                    table,
                    rows,
                    filters,
                    bias,
                    width,
                    argmax,
                } => {
                    let t = self.params.get(*table);
                    let f = self.params.get(*filters);
                    let (_, dim) = t.dims();
                    let (maps, span) = f.dims();
                    let mut g_table = Vec::new();
                    for m in 0..maps {
                        if node.value[m] <= 0.0 || g[m] == 0.0 {
                            continue;
                        }
                        param_grads.get_mut(*bias)[m] += g[m];
                        let p = argmax[m];
                        for o in 0..*width {
                            let Some(&r) = rows.get(p + o) else { continue };
                            let emb = &t.data[r * dim..(r + 1) * dim];
                            let filter = &f.data[m * span + o * dim..m * span + (o + 1) * dim];
                            let fbuf = &mut param_grads.get_mut(*filters)
                                [m * span + o * dim..m * span + (o + 1) * dim];
                            for (acc, e) in fbuf.iter_mut().zip(emb) {
                                *acc += g[m] * e;
                            }
                            g_table.push((r, m, filter));
                        }
                    }
                    let buf = param_grads.get_mut(*table);
                    for (r, m, filter) in g_table {
                        for (acc, w) in buf[r * dim..(r + 1) * dim].iter_mut().zip(filter) {
                            *acc += g[m] * w;
                        }
                    }
                }
                Op::BceWithLogits { x, target } => {
                    let z = self.scalar(*x);
                    accumulate(&mut grads, *x, &[g[0] * (sigmoid(z) - target)]);
                }
            }
        }
        param_grads
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn accumulate(grads: &mut [Vec<f64>], v: Var, g: &[f64]) {
    let slot = &mut grads[v.0];
    if slot.is_empty() {
        *slot = g.to_vec();
    } else {
        add_into(slot, g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Tensor;

    fn store() -> (ParamStore, ParamId, ParamId) {
        let mut s = ParamStore::new();
        let w = s
            .add(
                "w",
                Tensor {
                    shape: vec![2, 3],
                    data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                },
            )
            .unwrap();
        let b = s
            .add(
                "b",
                Tensor {
                    shape: vec![2],
                    data: vec![0.5, -0.5],
                },
            )
            .unwrap();
        (s, w, b)
    }

    #[test]
    fn matvec_forward_and_backward() {
        let (s, w, b) = store();
        let mut tape = Tape::new(&s);
        let x = tape.constant(vec![1.0, 0.0, -1.0]);
        let y = tape.matvec(w, x);
        assert_eq!(tape.value(y), &[-2.0, -2.0]);
        let bias = tape.param(b);
        let z = tape.add(y, bias);
        let loss = tape.sum(z);
        let g = tape.backward(loss);
        assert_eq!(g.get(w), &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]);
        assert_eq!(g.get(b), &[1.0, 1.0]);
    }

    #[test]
    fn transposed_matvec_matches_explicit() {
        let (s, w, _) = store();
        let mut tape = Tape::new(&s);
        let x = tape.constant(vec![1.0, -1.0]);
        let y = tape.matvec_t(w, x);
        assert_eq!(tape.value(y), &[-3.0, -3.0, -3.0]);
        let loss = tape.sum(y);
        let g = tape.backward(loss);
        assert_eq!(g.get(w), &[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn log_softmax_normalizes() {
        let s = ParamStore::new();
        let mut tape = Tape::new(&s);
        let x = tape.constant(vec![1.0, 2.0, 3.0]);
        let y = tape.log_softmax(x);
        let total: f64 = tape.value(y).iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_saturates_exactly() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn bce_matches_closed_form() {
        let s = ParamStore::new();
        let mut tape = Tape::new(&s);
        let x = tape.constant(vec![0.3]);
        let l1 = tape.bce_with_logits(x, 1.0);
        let l0 = tape.bce_with_logits(x, 0.0);
        assert!((tape.scalar(l1) + sigmoid(0.3).ln()).abs() < 1e-12);
        assert!((tape.scalar(l0) + (1.0 - sigmoid(0.3)).ln()).abs() < 1e-12);
    }
}
