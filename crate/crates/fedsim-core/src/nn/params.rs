//! Flat parameter vectors with a named layer layout.

use crate::error::{Error, Result};

/// One named segment of a flat parameter vector, e.g. a weight matrix or a
/// bias vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    name: String,
    shape: Vec<usize>,
}

impl Segment {
    pub fn new(name: impl Into<String>, shape: Vec<usize>) -> Self {
        Segment {
            name: name.into(),
            shape,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of scalars in this segment.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered list of segments describing how a flat vector maps onto layers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    segments: Vec<Segment>,
}

impl Layout {
    pub fn new(segments: Vec<Segment>) -> Self {
        Layout { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total number of scalars across all segments.
    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Byte-free offset of segment `index` into the flat vector.
    pub fn offset(&self, index: usize) -> usize {
        self.segments[..index].iter().map(Segment::len).sum()
    }
}

/// Flat `f64` model parameter vector tagged with its layer layout.
///
/// Holds both global and per-client model states; congruence (identical
/// layouts) is checked before any pairwise operation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Layout,
}

impl ParamVector {
    /// Builds a vector from raw values, checking the length against the
    /// layout.
    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::shape(format!(
                "parameter vector has {} values but layout expects {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(ParamVector { values, layout })
    }

    /// All-zero vector for the given layout.
    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.len()];
        ParamVector { values, layout }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Slice of the flat vector backing segment `index`.
    pub fn segment(&self, index: usize) -> &[f64] {
        let start = self.layout.offset(index);
        let end = start + self.layout.segments()[index].len();
        &self.values[start..end]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Errors unless `other` has the identical layout.
    pub fn ensure_congruent(&self, other: &ParamVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::shape(
                "parameter vectors have incongruent layouts".to_string(),
            ));
        }
        Ok(())
    }

    /// One SGD step: `self - lr * grad`, element-wise.
    pub fn sgd_step(&self, grad: &ParamVector, lr: f64) -> Result<ParamVector> {
        self.ensure_congruent(grad)?;
        debug_assert!(lr > 0.0, "learning rate must be positive");
        let values = self
            .values
            .iter()
            .zip(&grad.values)
            .map(|(p, g)| p - lr * g)
            .collect();
        Ok(ParamVector {
            values,
            layout: self.layout.clone(),
        })
    }

    /// Euclidean distance to another congruent vector.
    pub fn l2_distance(&self, other: &ParamVector) -> Result<f64> {
        self.ensure_congruent(other)?;
        let sq: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum();
        Ok(sq.sqrt())
    }

    /// Bit patterns of all values, for byte-level equality checks.
    pub fn to_bits(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}
