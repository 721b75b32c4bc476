//! In-memory labelled datasets and per-client shards.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::Batch;

/// A labelled dataset: `(n, d)` inputs in `[0, 1]` and integer labels in
/// `[0, classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if inputs.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "{} input rows but {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if classes == 0 {
            return Err(Error::domain("class count must be positive".to_string()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::domain(format!(
                "label {bad} outside class range [0, {classes})"
            )));
        }
        if let Some(bad) = inputs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!(
                "input value {bad} outside [0, 1]"
            )));
        }
        Ok(Dataset {
            inputs,
            labels,
            classes,
        })
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Input dimension.
    pub fn features(&self) -> usize {
        self.inputs.ncols()
    }

    /// Number of classes the labels are drawn from.
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Reinterprets the dataset over a (usually wider) class range, e.g.
    /// when a file subset happens to miss the top classes.
    pub fn with_classes(mut self, classes: usize) -> Result<Self> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= classes) {
            return Err(Error::domain(format!(
                "label {bad} outside class range [0, {classes})"
            )));
        }
        self.classes = classes;
        Ok(self)
    }

    /// Per-class example counts; sums to `len()`.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes];
        for &label in &self.labels {
            counts[label] += 1;
        }
        counts
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::domain(format!(
                "index {bad} outside dataset of {} examples",
                self.len()
            )));
        }
        let inputs = self.inputs.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Dataset {
            inputs,
            labels,
            classes: self.classes,
        })
    }

    /// Concatenates datasets with identical feature and class counts.
    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::domain("cannot concatenate zero datasets".to_string()))?;
        if parts
            .iter()
            .any(|d| d.features() != first.features() || d.classes != first.classes)
        {
            return Err(Error::shape(
                "datasets differ in feature or class counts".to_string(),
            ));
        }
        let total: usize = parts.iter().map(|d| d.len()).sum();
        let mut inputs = Array2::zeros((total, first.features()));
        let mut labels = Vec::with_capacity(total);
        let mut row = 0;
        for part in parts {
            for r in part.inputs.rows() {
                inputs.row_mut(row).assign(&r);
                row += 1;
            }
            labels.extend_from_slice(&part.labels);
        }
        Ok(Dataset {
            inputs,
            labels,
            classes: first.classes,
        })
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Batch {
        Batch::new(self.inputs.clone(), self.labels.clone()).expect("rows == labels by invariant")
    }

    /// The selected rows as one batch.
    pub fn batch_of(&self, indices: &[usize]) -> Result<Batch> {
        let sub = self.subset(indices)?;
        Ok(Batch::new(sub.inputs, sub.labels).expect("rows == labels by invariant"))
    }
}

/// One client's local data: disjoint train and test splits.
#[derive(Debug, Clone)]
pub struct ClientShard {
    pub client_id: usize,
    pub train: Dataset,
    pub test: Dataset,
}

impl ClientShard {
    /// Total examples across both splits.
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class histogram over train and test together.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = self.train.class_histogram();
        for (c, t) in counts.iter_mut().zip(self.test.class_histogram()) {
            *c += t;
        }
        counts
    }
}

/// Small server-side sample used for importance estimation.
#[derive(Debug, Clone)]
pub struct ProxyDataset {
    pub data: Dataset,
    pub fraction: f64,
    /// Rows of the source dataset the sample was drawn from.
    pub indices: Vec<usize>,
}
