use crate::numerics::{NodeId, ParamSource, Segment, Tape};

/// Shape of one named fully connected stack: `dims[0]` inputs through hidden
/// layers to `dims.last()` outputs, tanh between layers, and tanh on the
/// output only when `tanh_out` is set (heads stay linear).
#[derive(Debug, Clone)]
pub(crate) struct MlpSpec {
    pub prefix: String,
    pub dims: Vec<usize>,
    pub tanh_out: bool,
}

impl MlpSpec {
    pub fn new(prefix: &str, in_dim: usize, hidden: &[usize], out_dim: usize, tanh_out: bool) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(in_dim);
        dims.extend_from_slice(hidden);
        dims.push(out_dim);
        MlpSpec { prefix: prefix.to_string(), dims, tanh_out }
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut segs = Vec::new();
        for i in 0..self.dims.len() - 1 {
            segs.push(Segment::new(format!("{}.w{i}", self.prefix), self.dims[i], self.dims[i + 1]));
            segs.push(Segment::new(format!("{}.b{i}", self.prefix), 1, self.dims[i + 1]));
        }
        segs
    }

    /// Applies the stack to `x` of shape `(rows, dims[0])`.
    pub fn forward(&self, tape: &mut Tape, src: &ParamSource<'_>, x: NodeId) -> NodeId {
        let layers = self.dims.len() - 1;
        let mut h = x;
        for i in 0..layers {
            let w = tape.p(src, &format!("{}.w{i}", self.prefix));
            let b = tape.p(src, &format!("{}.b{i}", self.prefix));
            h = tape.matmul(h, w);
            h = tape.add_row(h, b);
            if i + 1 < layers || self.tanh_out {
                h = tape.tanh(h);
            }
        }
        h
    }
}
