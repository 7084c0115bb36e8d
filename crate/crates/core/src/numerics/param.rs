use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One named block of parameters. Vectors are stored as `(1, n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Segment { name: name.into(), rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An ordered list of uniquely named segments; fixes the flat-vector layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    segments: Vec<Segment>,
    offsets: Vec<usize>,
    index: HashMap<String, usize>,
    total: usize,
}

impl Layout {
    pub fn new(segments: Vec<Segment>) -> Result<Arc<Layout>> {
        let mut index = HashMap::new();
        let mut offsets = Vec::with_capacity(segments.len());
        let mut total = 0usize;
        for (i, seg) in segments.iter().enumerate() {
            if index.insert(seg.name.clone(), i).is_some() {
                return Err(Error::Layout(format!("duplicate segment name `{}`", seg.name)));
            }
            offsets.push(total);
            total += seg.len();
        }
        Ok(Arc::new(Layout { segments, offsets, index, total }))
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn offset(&self, idx: usize) -> usize {
        self.offsets[idx]
    }

    /// Byte-for-byte identical layout, required before any elementwise combination.
    pub fn same_as(&self, other: &Layout) -> bool {
        self.segments == other.segments
    }
}

/// A flat vector of 64-bit reals with a named-segment layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.total_len()];
        ParamVector { layout, values }
    }

    pub fn from_values(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::Layout(format!(
                "value length {} does not match layout length {}",
                values.len(),
                layout.total_len()
            )));
        }
        Ok(ParamVector { layout, values })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn seg(&self, name: &str) -> &[f64] {
        let idx = self
            .layout
            .segment_index(name)
            .unwrap_or_else(|| panic!("unknown segment `{name}`"));
        let off = self.layout.offset(idx);
        &self.values[off..off + self.layout.segments()[idx].len()]
    }

    pub fn seg_mut(&mut self, name: &str) -> &mut [f64] {
        let idx = self
            .layout
            .segment_index(name)
            .unwrap_or_else(|| panic!("unknown segment `{name}`"));
        let off = self.layout.offset(idx);
        let len = self.layout.segments()[idx].len();
        &mut self.values[off..off + len]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        debug_assert!(self.layout.same_as(&other.layout));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ParamVector, scale: f64) {
        debug_assert!(self.layout.same_as(&other.layout));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.values {
            *v *= k;
        }
    }

    /// Name of the first segment containing a non-finite entry, if any.
    pub fn first_non_finite_segment(&self) -> Option<&str> {
        for (i, seg) in self.layout.segments().iter().enumerate() {
            let off = self.layout.offset(i);
            if self.values[off..off + seg.len()].iter().any(|v| !v.is_finite()) {
                return Some(&seg.name);
            }
        }
        None
    }
}
