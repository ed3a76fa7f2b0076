//! Tape-based reverse-mode differentiation over batched tensors.
//!
//! Every operation appends a node holding its forward value. [`Graph::backward`]
//! walks the tape in reverse from a scalar node and accumulates
//! vector-Jacobian products into per-node gradient buffers. Nodes that do not
//! depend on any parameter are skipped.

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

/// Probability clamp applied inside [`Graph::bce`].
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    /// Output extent of a strided convolution.
    pub fn conv_out(&self, input: usize) -> Option<usize> {
        let padded = input + 2 * self.pad;
        (padded >= self.kernel).then(|| (padded - self.kernel) / self.stride + 1)
    }

    /// Output extent of the transposed convolution.
    pub fn transpose_out(&self, input: usize) -> Option<usize> {
        ((input - 1) * self.stride + self.kernel).checked_sub(2 * self.pad)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Dense { x: NodeId, w: NodeId, b: NodeId },
    Conv { x: NodeId, k: NodeId, b: NodeId, geom: ConvGeom },
    ConvTranspose { x: NodeId, k: NodeId, b: NodeId, geom: ConvGeom },
    Reshape(NodeId),
    Relu(NodeId),
    LeakyRelu(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sum(NodeId),
    Bce { pred: NodeId, targets: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Node {
    label: String,
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that required one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    /// Writes the gradient of `id` into `param.grad` (zeros if `id` was unreachable).
    pub fn store_into(&self, id: NodeId, param: &mut Tensor) {
        match self.get(id) {
            Some(g) => param.grad.copy_from_slice(g),
            None => param.zero_grad(),
        }
    }
}

fn shape_err(expected: &[usize], actual: &[usize]) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_vec(),
        actual: actual.to_vec(),
    }
}

fn check_finite(label: &str, stage: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            label: label.to_string(),
            stage,
        })
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    /// Most recent node carrying `label`.
    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().rposition(|n| n.label == label).map(NodeId)
    }

    fn push(&mut self, label: &str, shape: Vec<usize>, value: Vec<f64>, op: Op) -> Result<NodeId> {
        check_finite(label, "forward", &value)?;
        let requires_grad = match &op {
            Op::Leaf => false,
            Op::Dense { x, w, b }
            | Op::Conv { x, k: w, b, .. }
            | Op::ConvTranspose { x, k: w, b, .. } => {
                self.needs(*x) || self.needs(*w) || self.needs(*b)
            }
            Op::Reshape(x)
            | Op::Relu(x)
            | Op::LeakyRelu(x, _)
            | Op::Tanh(x)
            | Op::Sigmoid(x)
            | Op::Sum(x) => self.needs(*x),
            Op::Add(a, b) | Op::Mul(a, b) => self.needs(*a) || self.needs(*b),
            Op::Bce { pred, .. } => self.needs(*pred),
        };
        self.nodes.push(Node {
            label: label.to_string(),
            shape,
            value,
            op,
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Constant input (no gradient flows into it).
    pub fn input(&mut self, label: &str, shape: Vec<usize>, values: Vec<f64>) -> Result<NodeId> {
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(shape_err(&shape, &[values.len()]));
        }
        self.push(label, shape, values, Op::Leaf)
    }

    /// Leaf tracked for differentiation.
    pub fn variable(&mut self, label: &str, shape: Vec<usize>, values: Vec<f64>) -> Result<NodeId> {
        let id = self.input(label, shape, values)?;
        self.nodes[id.0].requires_grad = true;
        Ok(id)
    }

    /// Places a parameter tensor on the tape; `trainable = false` freezes it.
    pub fn param(&mut self, label: &str, t: &Tensor, trainable: bool) -> Result<NodeId> {
        let id = self.input(label, t.shape().to_vec(), t.values.clone())?;
        self.nodes[id.0].requires_grad = trainable;
        Ok(id)
    }

    /// `y[n, o] = Σ_i x[n, i]·w[i, o] + b[o]`.
    pub fn dense(&mut self, label: &str, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xs, ws, bs) = (self.shape(x), self.shape(w), self.shape(b));
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || bs != [ws[1]] {
            return Err(Error::ShapeMismatch {
                expected: vec![xs.first().copied().unwrap_or(0), ws.first().copied().unwrap_or(0)],
                actual: xs.to_vec(),
            });
        }
        let (n, i, o) = (xs[0], xs[1], ws[1]);
        let mut out = Vec::with_capacity(n * o);
        for _ in 0..n {
            out.extend_from_slice(self.value(b));
        }
        gemm(n, i, o, self.value(x), false, self.value(w), false, 1.0, &mut out);
        self.push(label, vec![n, o], out, Op::Dense { x, w, b })
    }

    /// Strided 2-D convolution, `x: [N, Ci, H, W]`, `k: [Co, Ci, K, K]`, `b: [Co]`.
    pub fn conv2d(
        &mut self,
        label: &str,
        x: NodeId,
        k: NodeId,
        b: NodeId,
        geom: ConvGeom,
    ) -> Result<NodeId> {
        let (xs, ks) = (self.shape(x).to_vec(), self.shape(k).to_vec());
        if xs.len() != 4 || ks.len() != 4 || ks[1] != xs[1] || ks[2] != geom.kernel || ks[3] != geom.kernel
        {
            return Err(shape_err(&[0, ks.get(1).copied().unwrap_or(0), 0, 0], &xs));
        }
        if self.shape(b) != [ks[0]] {
            return Err(shape_err(&[ks[0]], self.shape(b)));
        }
        let (n, ci, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let co = ks[0];
        let (ho, wo) = match (geom.conv_out(h), geom.conv_out(w)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(shape_err(&[n, ci, geom.kernel, geom.kernel], &xs)),
        };
        let rows = ci * geom.kernel * geom.kernel;
        let (pin, pout) = (h * w, ho * wo);
        let mut cols = vec![0.0; rows * pout];
        let mut out = vec![0.0; n * co * pout];
        let (xv, kv, bv) = (self.value(x), self.value(k), self.value(b));
        for s in 0..n {
            im2col(&xv[s * ci * pin..(s + 1) * ci * pin], ci, h, w, ho, wo, geom, &mut cols);
            let dst = &mut out[s * co * pout..(s + 1) * co * pout];
            for (c, chunk) in dst.chunks_mut(pout).enumerate() {
                chunk.fill(bv[c]);
            }
            gemm(co, rows, pout, kv, false, &cols, false, 1.0, dst);
        }
        self.push(label, vec![n, co, ho, wo], out, Op::Conv { x, k, b, geom })
    }

    /// Transposed convolution (adjoint of [`Graph::conv2d`]),
    /// `x: [N, Ci, H, W]`, `k: [Ci, Co, K, K]`, `b: [Co]`.
    pub fn conv_transpose2d(
        &mut self,
        label: &str,
        x: NodeId,
        k: NodeId,
        b: NodeId,
        geom: ConvGeom,
    ) -> Result<NodeId> {
        let (xs, ks) = (self.shape(x).to_vec(), self.shape(k).to_vec());
        if xs.len() != 4 || ks.len() != 4 || ks[0] != xs[1] || ks[2] != geom.kernel || ks[3] != geom.kernel
        {
            return Err(shape_err(&[0, ks.first().copied().unwrap_or(0), 0, 0], &xs));
        }
        if self.shape(b) != [ks[1]] {
            return Err(shape_err(&[ks[1]], self.shape(b)));
        }
        let (n, ci, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let co = ks[1];
        let (ho, wo) = match (geom.transpose_out(h), geom.transpose_out(w)) {
            (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
            _ => return Err(shape_err(&[n, ci, geom.kernel, geom.kernel], &xs)),
        };
        let rows = co * geom.kernel * geom.kernel;
        let (pin, pout) = (h * w, ho * wo);
        let mut cols = vec![0.0; rows * pin];
        let mut out = vec![0.0; n * co * pout];
        let (xv, kv, bv) = (self.value(x), self.value(k), self.value(b));
        for s in 0..n {
            // cols[rows, pin] = kᵀ[rows, ci] · x[ci, pin]
            gemm(rows, ci, pin, kv, true, &xv[s * ci * pin..(s + 1) * ci * pin], false, 0.0, &mut cols);
            let dst = &mut out[s * co * pout..(s + 1) * co * pout];
            for (c, chunk) in dst.chunks_mut(pout).enumerate() {
                chunk.fill(bv[c]);
            }
            col2im(&cols, co, ho, wo, h, w, geom, dst);
        }
        self.push(label, vec![n, co, ho, wo], out, Op::ConvTranspose { x, k, b, geom })
    }

    pub fn reshape(&mut self, label: &str, x: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(shape_err(&shape, self.shape(x)));
        }
        let v = self.value(x).to_vec();
        self.push(label, shape, v, Op::Reshape(x))
    }

    fn unary(&mut self, label: &str, x: NodeId, op: Op, f: impl Fn(f64) -> f64) -> Result<NodeId> {
        let v = self.value(x).iter().map(|&a| f(a)).collect();
        let shape = self.shape(x).to_vec();
        self.push(label, shape, v, op)
    }

    pub fn relu(&mut self, label: &str, x: NodeId) -> Result<NodeId> {
        self.unary(label, x, Op::Relu(x), |a| a.max(0.0))
    }

    pub fn leaky_relu(&mut self, label: &str, x: NodeId, slope: f64) -> Result<NodeId> {
        self.unary(label, x, Op::LeakyRelu(x, slope), |a| if a > 0.0 { a } else { slope * a })
    }

    pub fn tanh(&mut self, label: &str, x: NodeId) -> Result<NodeId> {
        self.unary(label, x, Op::Tanh(x), f64::tanh)
    }

    pub fn sigmoid(&mut self, label: &str, x: NodeId) -> Result<NodeId> {
        self.unary(label, x, Op::Sigmoid(x), sigmoid)
    }

    fn binary(&mut self, label: &str, a: NodeId, b: NodeId, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(self.shape(a), self.shape(b)));
        }
        let v = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&p, &q)| f(p, q))
            .collect();
        let shape = self.shape(a).to_vec();
        self.push(label, shape, v, op)
    }

    pub fn add(&mut self, label: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(label, a, b, Op::Add(a, b), |p, q| p + q)
    }

    pub fn mul(&mut self, label: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(label, a, b, Op::Mul(a, b), |p, q| p * q)
    }

    pub fn sum(&mut self, label: &str, x: NodeId) -> Result<NodeId> {
        let s = self.value(x).iter().sum();
        self.push(label, vec![1], vec![s], Op::Sum(x))
    }

    /// Mean binary cross-entropy of probabilities against 0/1 targets.
    pub fn bce(&mut self, label: &str, pred: NodeId, targets: Vec<f64>) -> Result<NodeId> {
        let p = self.value(pred);
        if p.len() != targets.len() {
            return Err(shape_err(&[targets.len()], self.shape(pred)));
        }
        let loss = p.iter().zip(&targets).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>()
            / targets.len().max(1) as f64;
        self.push(label, vec![1], vec![loss], Op::Bce { pred, targets })
    }

    /// Reverse pass from the scalar node `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(shape_err(&[1], self.shape(loss)));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        if !self.needs(loss) {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            check_finite(&node.label, "backward", &g)?;
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |id: NodeId, f: &mut dyn FnMut(&mut [f64])| {
            if !self.needs(id) {
                return;
            }
            let buf = grads[id.0].get_or_insert_with(|| vec![0.0; self.nodes[id.0].value.len()]);
            f(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Dense { x, w, b } => {
                let (n, o) = (node.shape[0], node.shape[1]);
                let i = self.shape(*w)[0];
                acc(*x, &mut |dx| gemm(n, o, i, g, false, self.value(*w), true, 1.0, dx));
                acc(*w, &mut |dw| gemm(i, n, o, self.value(*x), true, g, false, 1.0, dw));
                acc(*b, &mut |db| {
                    for row in g.chunks(o) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                });
            }
            Op::Conv { x, k, b, geom } => {
                let xs = self.shape(*x);
                let (n, ci, h, w) = (xs[0], xs[1], xs[2], xs[3]);
                let (co, ho, wo) = (node.shape[1], node.shape[2], node.shape[3]);
                let rows = ci * geom.kernel * geom.kernel;
                let (pin, pout) = (h * w, ho * wo);
                let xv = self.value(*x);
                let mut cols = vec![0.0; rows * pout];
                if self.needs(*k) {
                    acc(*k, &mut |dk| {
                        for s in 0..n {
                            im2col(&xv[s * ci * pin..(s + 1) * ci * pin], ci, h, w, ho, wo, *geom, &mut cols);
                            let gs = &g[s * co * pout..(s + 1) * co * pout];
                            gemm(co, pout, rows, gs, false, &cols, true, 1.0, dk);
                        }
                    });
                }
                acc(*b, &mut |db| channel_sums(g, n, co, pout, db));
                acc(*x, &mut |dx| {
                    for s in 0..n {
                        let gs = &g[s * co * pout..(s + 1) * co * pout];
                        gemm(rows, co, pout, self.value(*k), true, gs, false, 0.0, &mut cols);
                        col2im(&cols, ci, h, w, ho, wo, *geom, &mut dx[s * ci * pin..(s + 1) * ci * pin]);
                    }
                });
            }
            Op::ConvTranspose { x, k, b, geom } => {
                let xs = self.shape(*x);
                let (n, ci, h, w) = (xs[0], xs[1], xs[2], xs[3]);
                let (co, ho, wo) = (node.shape[1], node.shape[2], node.shape[3]);
                let rows = co * geom.kernel * geom.kernel;
                let (pin, pout) = (h * w, ho * wo);
                let xv = self.value(*x);
                // dcols[rows, pin] = im2col(g) over the output grid
                let mut dcols = vec![0.0; n * rows * pin];
                for s in 0..n {
                    im2col(
                        &g[s * co * pout..(s + 1) * co * pout],
                        co,
                        ho,
                        wo,
                        h,
                        w,
                        *geom,
                        &mut dcols[s * rows * pin..(s + 1) * rows * pin],
                    );
                }
                acc(*k, &mut |dk| {
                    for s in 0..n {
                        let xs = &xv[s * ci * pin..(s + 1) * ci * pin];
                        gemm(ci, pin, rows, xs, false, &dcols[s * rows * pin..(s + 1) * rows * pin], true, 1.0, dk);
                    }
                });
                acc(*b, &mut |db| channel_sums(g, n, co, pout, db));
                acc(*x, &mut |dx| {
                    for s in 0..n {
                        let dst = &mut dx[s * ci * pin..(s + 1) * ci * pin];
                        gemm(ci, rows, pin, self.value(*k), false, &dcols[s * rows * pin..(s + 1) * rows * pin], false, 1.0, dst);
                    }
                });
            }
            Op::Reshape(x) => acc(*x, &mut |dx| add_into(dx, g)),
            Op::Relu(x) => {
                let xv = self.value(*x);
                acc(*x, &mut |dx| {
                    for ((d, &gv), &a) in dx.iter_mut().zip(g).zip(xv) {
                        if a > 0.0 {
                            *d += gv;
                        }
                    }
                });
            }
            Op::LeakyRelu(x, slope) => {
                let xv = self.value(*x);
                acc(*x, &mut |dx| {
                    for ((d, &gv), &a) in dx.iter_mut().zip(g).zip(xv) {
                        *d += if a > 0.0 { gv } else { slope * gv };
                    }
                });
            }
            Op::Tanh(x) => {
                let y = &node.value;
                acc(*x, &mut |dx| {
                    for ((d, &gv), &t) in dx.iter_mut().zip(g).zip(y) {
                        *d += gv * (1.0 - t * t);
                    }
                });
            }
            Op::Sigmoid(x) => {
                let y = &node.value;
                acc(*x, &mut |dx| {
                    for ((d, &gv), &s) in dx.iter_mut().zip(g).zip(y) {
                        *d += gv * s * (1.0 - s);
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |da| add_into(da, g));
                acc(*b, &mut |db| add_into(db, g));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(*a, &mut |da| {
                    for ((d, &gv), &q) in da.iter_mut().zip(g).zip(bv) {
                        *d += gv * q;
                    }
                });
                acc(*b, &mut |db| {
                    for ((d, &gv), &p) in db.iter_mut().zip(g).zip(av) {
                        *d += gv * p;
                    }
                });
            }
            Op::Sum(x) => acc(*x, &mut |dx| dx.iter_mut().for_each(|d| *d += g[0])),
            Op::Bce { pred, targets } => {
                let p = self.value(*pred);
                let scale = g[0] / targets.len().max(1) as f64;
                acc(*pred, &mut |dp| {
                    for ((d, &pv), &y) in dp.iter_mut().zip(p).zip(targets) {
                        if pv > PROB_EPS && pv < 1.0 - PROB_EPS {
                            *d += scale * (-y / pv + (1.0 - y) / (1.0 - pv));
                        }
                    }
                });
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn channel_sums(g: &[f64], n: usize, c: usize, plane: usize, db: &mut [f64]) {
    for s in 0..n {
        for (ch, d) in db.iter_mut().enumerate().take(c) {
            let off = (s * c + ch) * plane;
            *d += g[off..off + plane].iter().sum::<f64>();
        }
    }
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `−[y·ln p + (1−y)·ln(1−p)]` with `p` clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(pred: f64, label: f64) -> f64 {
    let p = pred.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// Unfolds `x: [c, h, w]` into `cols: [c·K·K, ho·wo]` for a strided convolution.
#[allow(clippy::too_many_arguments)]
fn im2col(x: &[f64], c: usize, h: usize, w: usize, ho: usize, wo: usize, geom: ConvGeom, cols: &mut [f64]) {
    let k = geom.kernel;
    let plane = ho * wo;
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                for oy in 0..ho {
                    let iy = (oy * geom.stride + ky) as isize - geom.pad as isize;
                    let line = &mut dst[oy * wo..(oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &x[(ch * h + iy as usize) * w..(ch * h + iy as usize + 1) * w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * geom.stride + kx) as isize - geom.pad as isize;
                        *v = if ix >= 0 && ix < w as isize { src[ix as usize] } else { 0.0 };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters-and-adds `cols` back onto `x: [c, h, w]`.
#[allow(clippy::too_many_arguments)]
fn col2im(cols: &[f64], c: usize, h: usize, w: usize, ho: usize, wo: usize, geom: ConvGeom, x: &mut [f64]) {
    let k = geom.kernel;
    let plane = ho * wo;
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                let src = &cols[row * plane..(row + 1) * plane];
                for oy in 0..ho {
                    let iy = (oy * geom.stride + ky) as isize - geom.pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut x[(ch * h + iy as usize) * w..(ch * h + iy as usize + 1) * w];
                    for (ox, &v) in src[oy * wo..(oy + 1) * wo].iter().enumerate() {
                        let ix = (ox * geom.stride + kx) as isize - geom.pad as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_square_hand_chain_rule() {
        // y = w·x, loss = y², x = 2, w = 3 → dL/dw = 2·y·x = 24
        let mut g = Graph::new();
        let x = g.input("x", vec![1, 1], vec![2.0]).unwrap();
        let w = g.variable("w", vec![1, 1], vec![3.0]).unwrap();
        let b = g.input("b", vec![1], vec![0.0]).unwrap();
        let y = g.dense("y", x, w, b).unwrap();
        let sq = g.mul("sq", y, y).unwrap();
        let loss = g.sum("loss", sq).unwrap();
        assert_eq!(g.value(loss), &[36.0]);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap(), &[24.0]);
        assert!(grads.get(x).is_none());
    }

    #[test]
    fn constant_branch_has_zero_gradient() {
        let mut g = Graph::new();
        let a = g.variable("a", vec![2], vec![1.0, 2.0]).unwrap();
        let unused = g.variable("unused", vec![2], vec![5.0, 6.0]).unwrap();
        let c = g.input("c", vec![2], vec![3.0, 4.0]).unwrap();
        let prod = g.mul("prod", unused, c).unwrap();
        let _dangling = g.sum("dangling", prod).unwrap();
        let s = g.mul("s", a, c).unwrap();
        let loss = g.sum("loss", s).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(a).unwrap(), &[3.0, 4.0]);
        let mut t = Tensor::new(vec![2], vec![5.0, 6.0]).unwrap();
        t.grad = vec![9.0, 9.0];
        grads.store_into(unused, &mut t);
        assert_eq!(t.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_forward_names_layer() {
        let mut g = Graph::new();
        let x = g.input("x", vec![1], vec![f64::MAX]).unwrap();
        let err = g.add("overflow", x, x).unwrap_err();
        match err {
            Error::NonFinite { label, stage } => {
                assert_eq!(label, "overflow");
                assert_eq!(stage, "forward");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_backward_names_layer() {
        let mut g = Graph::new();
        let a = g.variable("a", vec![1], vec![1e300]).unwrap();
        let b = g.variable("b", vec![1], vec![1e-300]).unwrap();
        let p = g.mul("p", a, b).unwrap();
        let big = g.input("big", vec![1], vec![1e300]).unwrap();
        let q = g.mul("q", p, big).unwrap();
        let loss = g.sum("loss", q).unwrap();
        // dq/db = big·a = 1e600 → inf
        let err = g.backward(loss).unwrap_err();
        assert!(matches!(err, Error::NonFinite { stage: "backward", .. }), "{err:?}");
    }

    #[test]
    fn conv_geometry() {
        let geom = ConvGeom {
            kernel: 4,
            stride: 2,
            pad: 1,
        };
        assert_eq!(geom.conv_out(32), Some(16));
        assert_eq!(geom.transpose_out(8), Some(16));
        assert_eq!(geom.conv_out(1), None);
    }

    #[test]
    fn conv_transpose_is_adjoint_of_conv() {
        // <conv(x), y> == <x, convT(y)> for identical kernels and no bias
        let geom = ConvGeom {
            kernel: 4,
            stride: 2,
            pad: 1,
        };
        let xv: Vec<f64> = (0..2 * 6 * 6).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let yv: Vec<f64> = (0..3 * 3 * 3).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let kv: Vec<f64> = (0..3 * 2 * 16).map(|i| ((i * 3) % 13) as f64 * 0.1).collect();
        // conv kernel [co=3, ci=2, 4, 4]; as a transpose kernel it is [ci'=3, co'=2, 4, 4]
        let mut g = Graph::new();
        let x = g.input("x", vec![1, 2, 6, 6], xv.clone()).unwrap();
        let k = g.input("k", vec![3, 2, 4, 4], kv.clone()).unwrap();
        let b3 = g.input("b3", vec![3], vec![0.0; 3]).unwrap();
        let b2 = g.input("b2", vec![2], vec![0.0; 2]).unwrap();
        let cx = g.conv2d("c", x, k, b3, geom).unwrap();
        let y = g.input("y", vec![1, 3, 3, 3], yv.clone()).unwrap();
        let ty = g.conv_transpose2d("t", y, k, b2, geom).unwrap();
        let lhs: f64 = g.value(cx).iter().zip(&yv).map(|(a, b)| a * b).sum();
        let rhs: f64 = xv.iter().zip(g.value(ty)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn bce_closed_forms() {
        assert!((bce_loss(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(1.0 - 1e-7, 1.0) - 1e-7).abs() < 1e-12);
        assert!((bce_loss(0.9, 0.0) - 2.302585092994046).abs() < 1e-9);
        assert!(bce_loss(1.0, 1.0) > 0.0);
        assert!(bce_loss(0.0, 0.0) > 0.0);
    }
}
