use std::sync::Arc;

use crate::error::{Error, Result};

/// Shape of one dense layer: `rows` outputs by `cols` inputs, plus `rows` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered layer shapes. Layer `i` occupies a contiguous block: its row-major
/// weight matrix followed by its bias vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    layers: Vec<LayerShape>,
    offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(layers: Vec<LayerShape>) -> Self {
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.len();
        }
        Layout {
            layers,
            offsets,
            total,
        }
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    /// Offset of layer `i`'s weight block; its bias starts `weight_len` later.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn total_len(&self) -> usize {
        self.total
    }
}

/// Flat real-valued model parameters tagged with their layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl ParamVector {
    pub fn new(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::Config(format!(
                "parameter length {} does not match layout length {}",
                values.len(),
                layout.total_len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite parameter at index {i}")));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.total_len()];
        ParamVector { values, layout }
    }

    pub fn filled(layout: Arc<Layout>, v: f64) -> Self {
        let values = vec![v; layout.total_len()];
        ParamVector { values, layout }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Returns a copy with `values` replaced; fails on length mismatch or non-finite entries.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ParamVector::new(self.layout.clone(), values)
    }
}
