//! Eager reverse-mode tape over small dense `f64` tensors.
//!
//! Values are computed as nodes are recorded; `backward` replays the tape in
//! reverse and accumulates gradients into the flat parameter layout. The op
//! set is deliberately small and batched: network code stacks per-joint
//! streams into `(J*B, c)` blocks (j-major) so each layer is one matmul.

use std::collections::HashMap;

use ndarray::{Array2, Axis};

use super::param::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Where a network reads its parameters from. `Live` segments receive
/// gradients; `Frozen` segments are constants on the tape (used for target
/// networks and for critic weights inside actor losses).
pub enum ParamSource<'a> {
    Live,
    Frozen(&'a ParamVector),
}

enum Op {
    Param(usize),
    Constant,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    MulElem(NodeId, NodeId),
    DivElem(NodeId, NodeId),
    MinElem(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Softplus(NodeId),
    Square(NodeId),
    Clamp(NodeId, f64, f64),
    SumAll(NodeId),
    RowSums(NodeId),
    ColSums(NodeId),
    SoftmaxCols(NodeId),
    ConcatCols(Vec<NodeId>),
    GateRows { x: NodeId, gate: NodeId },
    SumBlocks { x: NodeId, blocks: usize },
    TileBlocks { x: NodeId, times: usize },
    RepeatRows { x: NodeId, times: usize },
    BlocksToCols { x: NodeId, blocks: usize },
    ColsToBlocks(NodeId),
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamVector,
    nodes: Vec<Node>,
    // (source pointer or 0 for live, segment index) -> node
    param_cache: HashMap<(usize, usize), NodeId>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamVector) -> Self {
        Tape { params, nodes: Vec::with_capacity(256), param_cache: HashMap::new() }
    }

    pub fn params(&self) -> &ParamVector {
        self.params
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.dim(), (1, 1), "expected scalar node");
        v[(0, 0)]
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn seg_array(pv: &ParamVector, name: &str) -> (usize, Array2<f64>) {
        let layout = pv.layout();
        let idx = layout
            .segment_index(name)
            .unwrap_or_else(|| panic!("unknown parameter segment `{name}`"));
        let seg = &layout.segments()[idx];
        let arr = Array2::from_shape_vec((seg.rows, seg.cols), pv.seg(name).to_vec())
            .expect("segment shape");
        (idx, arr)
    }

    /// A trainable parameter segment of the tape's live vector.
    pub fn param(&mut self, name: &str) -> NodeId {
        let (idx, arr) = Self::seg_array(self.params, name);
        if let Some(&id) = self.param_cache.get(&(0, idx)) {
            return id;
        }
        let id = self.push(arr, Op::Param(idx));
        self.param_cache.insert((0, idx), id);
        id
    }

    /// A parameter segment resolved through a [`ParamSource`].
    pub fn p(&mut self, src: &ParamSource<'_>, name: &str) -> NodeId {
        match src {
            ParamSource::Live => self.param(name),
            ParamSource::Frozen(pv) => {
                let key = (*pv as *const ParamVector as usize, {
                    pv.layout().segment_index(name).unwrap_or_else(|| {
                        panic!("unknown parameter segment `{name}`")
                    })
                });
                if let Some(&id) = self.param_cache.get(&key) {
                    return id;
                }
                let (_, arr) = Self::seg_array(pv, name);
                let id = self.push(arr, Op::Constant);
                self.param_cache.insert(key, id);
                id
            }
        }
    }

    pub fn constant(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Constant)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::MulElem(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) / self.value(b);
        self.push(v, Op::DivElem(a, b))
    }

    pub fn min_elem(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        v.zip_mut_with(self.value(b), |x, &y| *x = x.min(y));
        self.push(v, Op::MinElem(a, b))
    }

    /// `x + b` with `b` a `(1, c)` row broadcast over rows of `x`.
    pub fn add_row(&mut self, x: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(b).nrows(), 1);
        let v = self.value(x) + self.value(b);
        self.push(v, Op::AddRow(x, b))
    }

    /// `x * b` with `b` a `(1, c)` row broadcast over rows of `x`.
    pub fn mul_row(&mut self, x: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(b).nrows(), 1);
        let v = self.value(x) * self.value(b);
        self.push(v, Op::MulRow(x, b))
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> NodeId {
        let v = self.value(x) * k;
        self.push(v, Op::Scale(x, k))
    }

    pub fn add_scalar(&mut self, x: NodeId, k: f64) -> NodeId {
        let v = self.value(x) + k;
        self.push(v, Op::AddScalar(x))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(f64::exp);
        self.push(v, Op::Exp(x))
    }

    pub fn ln(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(f64::ln);
        self.push(v, Op::Ln(x))
    }

    pub fn softplus(&mut self, x: NodeId) -> NodeId {
        // ln(1 + e^x), stable form
        let v = self.value(x).mapv(|x| {
            if x > 30.0 { x } else { x.exp().ln_1p() }
        });
        self.push(v, Op::Softplus(x))
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(|x| x * x);
        self.push(v, Op::Square(x))
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.value(x).mapv(|x| x.clamp(lo, hi));
        self.push(v, Op::Clamp(x, lo, hi))
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).sum();
        self.push(Array2::from_elem((1, 1), s), Op::SumAll(x))
    }

    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        let n = self.value(x).len() as f64;
        let s = self.sum_all(x);
        self.scale(s, 1.0 / n)
    }

    /// Row sums: `(r, c) -> (r, 1)`.
    pub fn row_sums(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).sum_axis(Axis(1)).insert_axis(Axis(1));
        self.push(v, Op::RowSums(x))
    }

    /// Column sums: `(r, c) -> (1, c)`.
    pub fn col_sums(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).sum_axis(Axis(0)).insert_axis(Axis(0));
        self.push(v, Op::ColSums(x))
    }

    /// Softmax down each column (normalizes over rows).
    pub fn softmax_cols(&mut self, x: NodeId) -> NodeId {
        let xv = self.value(x);
        let mut v = xv.clone();
        for mut col in v.axis_iter_mut(Axis(1)) {
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for e in col.iter_mut() {
                *e = (*e - max).exp();
                sum += *e;
            }
            for e in col.iter_mut() {
                *e /= sum;
            }
        }
        self.push(v, Op::SoftmaxCols(x))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let rows = self.value(parts[0]).nrows();
        let cols: usize = parts.iter().map(|&p| self.value(p).ncols()).sum();
        let mut v = Array2::zeros((rows, cols));
        let mut at = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.nrows(), rows, "concat_cols row mismatch");
            v.slice_mut(ndarray::s![.., at..at + pv.ncols()]).assign(pv);
            at += pv.ncols();
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    /// Per-block row gating: `x` is `(J*B, c)` (j-major blocks of `B` rows),
    /// `gate` is `(J, c)`; row `j*B + b` is multiplied elementwise by `gate[j]`.
    pub fn gate_rows(&mut self, x: NodeId, gate: NodeId) -> NodeId {
        let xv = self.value(x);
        let gv = self.value(gate);
        let blocks = gv.nrows();
        assert_eq!(xv.nrows() % blocks, 0, "gate_rows block mismatch");
        let bsz = xv.nrows() / blocks;
        let mut v = xv.clone();
        for j in 0..blocks {
            let g = gv.row(j).to_owned();
            for b in 0..bsz {
                let mut row = v.row_mut(j * bsz + b);
                row.zip_mut_with(&g, |x, &g| *x *= g);
            }
        }
        self.push(v, Op::GateRows { x, gate })
    }

    /// Sum `blocks` vertical blocks: `(J*B, c) -> (B, c)`.
    pub fn sum_blocks(&mut self, x: NodeId, blocks: usize) -> NodeId {
        let xv = self.value(x);
        assert_eq!(xv.nrows() % blocks, 0);
        let bsz = xv.nrows() / blocks;
        let mut v = Array2::zeros((bsz, xv.ncols()));
        for j in 0..blocks {
            v += &xv.slice(ndarray::s![j * bsz..(j + 1) * bsz, ..]);
        }
        self.push(v, Op::SumBlocks { x, blocks })
    }

    /// Tile vertically: `(B, c) -> (J*B, c)` with `J = times` copies, j-major.
    pub fn tile_blocks(&mut self, x: NodeId, times: usize) -> NodeId {
        let xv = self.value(x);
        let (b, c) = xv.dim();
        let mut v = Array2::zeros((times * b, c));
        for j in 0..times {
            v.slice_mut(ndarray::s![j * b..(j + 1) * b, ..]).assign(xv);
        }
        self.push(v, Op::TileBlocks { x, times })
    }

    /// Repeat each row contiguously: `(J, c) -> (J*B, c)` with `B = times`.
    pub fn repeat_rows(&mut self, x: NodeId, times: usize) -> NodeId {
        let xv = self.value(x);
        let (j, c) = xv.dim();
        let mut v = Array2::zeros((j * times, c));
        for row in 0..j {
            for t in 0..times {
                v.row_mut(row * times + t).assign(&xv.row(row));
            }
        }
        self.push(v, Op::RepeatRows { x, times })
    }

    /// `(J*B, 1) -> (B, J)` with column `j` taken from block `j`.
    pub fn blocks_to_cols(&mut self, x: NodeId, blocks: usize) -> NodeId {
        let xv = self.value(x);
        assert_eq!(xv.ncols(), 1);
        assert_eq!(xv.nrows() % blocks, 0);
        let bsz = xv.nrows() / blocks;
        let mut v = Array2::zeros((bsz, blocks));
        for j in 0..blocks {
            for b in 0..bsz {
                v[(b, j)] = xv[(j * bsz + b, 0)];
            }
        }
        self.push(v, Op::BlocksToCols { x, blocks })
    }

    /// `(B, J) -> (J*B, 1)`, the inverse of [`Tape::blocks_to_cols`].
    pub fn cols_to_blocks(&mut self, x: NodeId) -> NodeId {
        let xv = self.value(x);
        let (b, j) = xv.dim();
        let mut v = Array2::zeros((j * b, 1));
        for jj in 0..j {
            for bb in 0..b {
                v[(jj * b + bb, 0)] = xv[(bb, jj)];
            }
        }
        self.push(v, Op::ColsToBlocks(x))
    }

    /// Reverse sweep from a scalar loss node; returns per-live-segment
    /// gradients flattened into the layout of the live parameter vector.
    pub fn backward(&self, loss: NodeId) -> ParamVector {
        assert_eq!(self.value(loss).dim(), (1, 1), "loss must be scalar");
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::from_elem((1, 1), 1.0));

        fn acc(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
            match slot {
                Some(existing) => *existing += &g,
                None => *slot = Some(g),
            }
        }

        for i in (0..self.nodes.len()).rev() {
            let Some(gout) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Param(_) | Op::Constant => {
                    grads[i] = Some(gout); // keep for collection
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = gout.dot(&self.nodes[b.0].value.t());
                    let gb = self.nodes[a.0].value.t().dot(&gout);
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads[a.0], gout.clone());
                    acc(&mut grads[b.0], gout);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads[b.0], -&gout);
                    acc(&mut grads[a.0], gout);
                }
                Op::MulElem(a, b) => {
                    acc(&mut grads[a.0], &gout * &self.nodes[b.0].value);
                    acc(&mut grads[b.0], &gout * &self.nodes[a.0].value);
                }
                Op::DivElem(a, b) => {
                    let bv = &self.nodes[b.0].value;
                    acc(&mut grads[a.0], &gout / bv);
                    let gb = -&(&gout * &self.nodes[a.0].value) / &(bv * bv);
                    acc(&mut grads[b.0], gb);
                }
                Op::MinElem(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let mut ga = gout.clone();
                    let mut gb = gout;
                    ndarray::Zip::from(&mut ga).and(&mut gb).and(av).and(bv).for_each(
                        |ga, gb, &a, &b| {
                            if a <= b {
                                *gb = 0.0;
                            } else {
                                *ga = 0.0;
                            }
                        },
                    );
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::AddRow(x, b) => {
                    let gb = gout.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads[x.0], gout);
                    acc(&mut grads[b.0], gb);
                }
                Op::MulRow(x, b) => {
                    let gx = &gout * &self.nodes[b.0].value;
                    let gb = (&gout * &self.nodes[x.0].value)
                        .sum_axis(Axis(0))
                        .insert_axis(Axis(0));
                    acc(&mut grads[x.0], gx);
                    acc(&mut grads[b.0], gb);
                }
                Op::Scale(x, k) => acc(&mut grads[x.0], &gout * *k),
                Op::AddScalar(x) => acc(&mut grads[x.0], gout),
                Op::Tanh(x) => {
                    let g = &gout * &node.value.mapv(|y| 1.0 - y * y);
                    acc(&mut grads[x.0], g);
                }
                Op::Exp(x) => acc(&mut grads[x.0], &gout * &node.value),
                Op::Ln(x) => acc(&mut grads[x.0], &gout / &self.nodes[x.0].value),
                Op::Softplus(x) => {
                    let g = &gout * &self.nodes[x.0].value.mapv(|x| 1.0 / (1.0 + (-x).exp()));
                    acc(&mut grads[x.0], g);
                }
                Op::Square(x) => {
                    let g = &gout * &(&self.nodes[x.0].value * 2.0);
                    acc(&mut grads[x.0], g);
                }
                Op::Clamp(x, lo, hi) => {
                    let mut g = gout;
                    ndarray::Zip::from(&mut g)
                        .and(&self.nodes[x.0].value)
                        .for_each(|g, &x| {
                            if x < *lo || x > *hi {
                                *g = 0.0;
                            }
                        });
                    acc(&mut grads[x.0], g);
                }
                Op::SumAll(x) => {
                    let g = Array2::from_elem(self.nodes[x.0].value.dim(), gout[(0, 0)]);
                    acc(&mut grads[x.0], g);
                }
                Op::RowSums(x) => {
                    let dim = self.nodes[x.0].value.dim();
                    let mut g = Array2::zeros(dim);
                    for r in 0..dim.0 {
                        g.row_mut(r).fill(gout[(r, 0)]);
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::ColSums(x) => {
                    let dim = self.nodes[x.0].value.dim();
                    let mut g = Array2::zeros(dim);
                    for c in 0..dim.1 {
                        g.column_mut(c).fill(gout[(0, c)]);
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::SoftmaxCols(x) => {
                    let y = &node.value;
                    let mut g = Array2::zeros(y.dim());
                    for c in 0..y.ncols() {
                        let yc = y.column(c);
                        let dc = gout.column(c);
                        let dot: f64 = yc.iter().zip(dc.iter()).map(|(a, b)| a * b).sum();
                        for r in 0..y.nrows() {
                            g[(r, c)] = yc[r] * (dc[r] - dot);
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::ConcatCols(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let w = self.nodes[p.0].value.ncols();
                        let gp = gout.slice(ndarray::s![.., at..at + w]).to_owned();
                        acc(&mut grads[p.0], gp);
                        at += w;
                    }
                }
                Op::GateRows { x, gate } => {
                    let xv = &self.nodes[x.0].value;
                    let gv = &self.nodes[gate.0].value;
                    let blocks = gv.nrows();
                    let bsz = xv.nrows() / blocks;
                    let mut gx = gout.clone();
                    let mut gg = Array2::zeros(gv.dim());
                    for j in 0..blocks {
                        for b in 0..bsz {
                            let r = j * bsz + b;
                            for c in 0..xv.ncols() {
                                gx[(r, c)] = gout[(r, c)] * gv[(j, c)];
                                gg[(j, c)] += gout[(r, c)] * xv[(r, c)];
                            }
                        }
                    }
                    acc(&mut grads[x.0], gx);
                    acc(&mut grads[gate.0], gg);
                }
                Op::SumBlocks { x, blocks } => {
                    let dim = self.nodes[x.0].value.dim();
                    let bsz = dim.0 / blocks;
                    let mut g = Array2::zeros(dim);
                    for j in 0..*blocks {
                        g.slice_mut(ndarray::s![j * bsz..(j + 1) * bsz, ..]).assign(&gout);
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::TileBlocks { x, times } => {
                    let dim = self.nodes[x.0].value.dim();
                    let mut g = Array2::zeros(dim);
                    for j in 0..*times {
                        g += &gout.slice(ndarray::s![j * dim.0..(j + 1) * dim.0, ..]);
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::RepeatRows { x, times } => {
                    let dim = self.nodes[x.0].value.dim();
                    let mut g = Array2::zeros(dim);
                    for row in 0..dim.0 {
                        for t in 0..*times {
                            let src = gout.row(row * times + t);
                            let mut dst = g.row_mut(row);
                            dst += &src;
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::BlocksToCols { x, blocks } => {
                    let rows = self.nodes[x.0].value.nrows();
                    let bsz = rows / blocks;
                    let mut g = Array2::zeros((rows, 1));
                    for j in 0..*blocks {
                        for b in 0..bsz {
                            g[(j * bsz + b, 0)] = gout[(b, j)];
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
                Op::ColsToBlocks(x) => {
                    let (b, j) = self.nodes[x.0].value.dim();
                    let mut g = Array2::zeros((b, j));
                    for jj in 0..j {
                        for bb in 0..b {
                            g[(bb, jj)] = gout[(jj * b + bb, 0)];
                        }
                    }
                    acc(&mut grads[x.0], g);
                }
            }
        }

        let mut out = ParamVector::zeros(self.params.layout().clone());
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Param(seg_idx) = node.op {
                if let Some(g) = &grads[i] {
                    let name = self.params.layout().segments()[seg_idx].name.clone();
                    let dst = out.seg_mut(&name);
                    for (d, s) in dst.iter_mut().zip(g.iter()) {
                        *d = *s;
                    }
                }
            }
        }
        out
    }
}
