//! Dense MLP with ReLU hidden layers, inverted dropout, and a softmax
//! cross-entropy head. Forward and backward are fused so dropout masks are
//! shared, and gradients are exact analytic expressions checked against
//! finite differences in the tests.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::params::{Layout, ParamVector, Segment};

/// A batch of training or evaluation examples.
///
/// `inputs` is `(batch, input_dim)` row-major; `labels[i]` is the class of
/// row `i`.
#[derive(Debug, Clone)]
pub struct Batch {
    inputs: Array2<f64>,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if inputs.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "batch has {} input rows but {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        Ok(Batch { inputs, labels })
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Architecture of the dense model: layer widths plus the training-time
/// dropout rate applied after each hidden activation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    input_dim: usize,
    hidden_dims: Vec<usize>,
    output_dim: usize,
    dropout_rate: f64,
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::domain(
                "model dimensions must be positive".to_string(),
            ));
        }
        Ok(ModelSpec {
            input_dim,
            hidden_dims,
            output_dim,
            dropout_rate: 0.0,
        })
    }

    /// Sets the training-time dropout rate, in `[0, 1)`.
    pub fn with_dropout(mut self, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::domain(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        self.dropout_rate = rate;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    /// Widths of every activation: input, hidden layers, output.
    fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.output_dim);
        dims
    }

    fn num_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    /// Flat-vector layout: `w0, b0, w1, b1, ...` with weights `(out, in)`
    /// row-major.
    pub fn layout(&self) -> Layout {
        let dims = self.dims();
        let mut segments = Vec::with_capacity(2 * self.num_layers());
        for layer in 0..self.num_layers() {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            segments.push(Segment::new(format!("w{layer}"), vec![fan_out, fan_in]));
            segments.push(Segment::new(format!("b{layer}"), vec![fan_out]));
        }
        Layout::new(segments)
    }

    /// Total number of parameter scalars.
    pub fn param_count(&self) -> usize {
        self.layout().len()
    }

    /// Fresh parameters: weights uniform in `±sqrt(6 / (fan_in + fan_out))`,
    /// biases zero.
    pub fn init_params(&self, rng: &mut ChaCha8Rng) -> ParamVector {
        let dims = self.dims();
        let mut values = Vec::with_capacity(self.param_count());
        for layer in 0..self.num_layers() {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                values.push(rng.random_range(-limit..limit));
            }
            values.extend(std::iter::repeat(0.0).take(fan_out));
        }
        ParamVector::from_values(self.layout(), values).expect("layout matches by construction")
    }

    fn weight_view<'a>(&self, params: &'a ParamVector, layer: usize) -> ArrayView2<'a, f64> {
        let dims = self.dims();
        ArrayView2::from_shape((dims[layer + 1], dims[layer]), params.segment(2 * layer))
            .expect("segment length matches shape")
    }

    fn bias_view<'a>(&self, params: &'a ParamVector, layer: usize) -> ArrayView1<'a, f64> {
        ArrayView1::from(params.segment(2 * layer + 1))
    }

    fn validate_inputs(&self, params: &ParamVector, batch: &Batch) -> Result<()> {
        if *params.layout() != self.layout() {
            return Err(Error::shape(format!(
                "parameter vector of length {} does not match model layout of length {}",
                params.len(),
                self.param_count()
            )));
        }
        if batch.inputs().ncols() != self.input_dim {
            return Err(Error::shape(format!(
                "batch input dim {} does not match model input dim {}",
                batch.inputs().ncols(),
                self.input_dim
            )));
        }
        if let Some(&label) = batch.labels().iter().find(|&&l| l >= self.output_dim) {
            return Err(Error::shape(format!(
                "label {label} outside class range [0, {})",
                self.output_dim
            )));
        }
        if !params.is_finite() {
            return Err(Error::numeric(
                "parameter vector contains non-finite values".to_string(),
            ));
        }
        if !batch.inputs().iter().all(|v| v.is_finite()) {
            return Err(Error::numeric(
                "batch inputs contain non-finite values".to_string(),
            ));
        }
        Ok(())
    }

    /// Class probabilities for a batch; each row sums to one.
    ///
    /// With `training = false` the pass is deterministic and dropout is
    /// disabled; with `training = true` and a positive dropout rate an rng
    /// must be supplied.
    pub fn forward(
        &self,
        params: &ParamVector,
        batch: &Batch,
        training: bool,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Array2<f64>> {
        Ok(self.forward_pass(params, batch, training, rng)?.probs)
    }

    /// Mean softmax cross-entropy over the batch and its exact gradient,
    /// laid out congruently with `params`.
    pub fn loss_and_grad(
        &self,
        params: &ParamVector,
        batch: &Batch,
        training: bool,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, ParamVector)> {
        if batch.is_empty() {
            return Err(Error::domain(
                "loss is undefined for an empty batch".to_string(),
            ));
        }
        let pass = self.forward_pass(params, batch, training, rng)?;
        let batch_len = batch.len() as f64;

        let mut loss = 0.0;
        for (row, &label) in pass.probs.rows().into_iter().zip(batch.labels()) {
            loss -= row[label].max(f64::MIN_POSITIVE).ln();
        }
        loss /= batch_len;

        // d loss / d logits = (probs - onehot) / batch
        let mut delta = pass.probs;
        for (i, &label) in batch.labels().iter().enumerate() {
            delta[[i, label]] -= 1.0;
        }
        delta.mapv_inplace(|v| v / batch_len);

        let mut grad = ParamVector::zeros(self.layout());
        for layer in (0..self.num_layers()).rev() {
            let input = &pass.activations[layer];
            let d_weights = delta.t().dot(input);
            let d_biases = delta.sum_axis(Axis(0));

            let offset = grad.layout().offset(2 * layer);
            let w_len = d_weights.len();
            grad.values_mut()[offset..offset + w_len].copy_from_slice(
                d_weights
                    .as_slice()
                    .expect("dot result is standard layout"),
            );
            grad.values_mut()[offset + w_len..offset + w_len + d_biases.len()]
                .copy_from_slice(d_biases.as_slice().expect("sum_axis is contiguous"));

            if layer > 0 {
                let weights = self.weight_view(params, layer);
                let mut d_hidden = delta.dot(&weights);
                // Through dropout and ReLU: the stored activation is zero
                // exactly where either one gated the unit.
                d_hidden.zip_mut_with(&pass.activations[layer], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                if let Some(mask) = &pass.masks[layer - 1] {
                    d_hidden.zip_mut_with(mask, |d, &m| *d *= m);
                }
                delta = d_hidden;
            }
        }

        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::numeric(
                "loss or gradient is non-finite".to_string(),
            ));
        }
        Ok((loss, grad))
    }

    /// Fraction of rows whose most probable class equals the label.
    /// Probability ties resolve to the lowest class index.
    pub fn accuracy(&self, params: &ParamVector, examples: &Batch) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::domain(
                "accuracy is undefined for an empty batch".to_string(),
            ));
        }
        let probs = self.forward(params, examples, false, None)?;
        let mut correct = 0usize;
        for (row, &label) in probs.rows().into_iter().zip(examples.labels()) {
            let mut best = 0usize;
            for (class, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = class;
                }
            }
            if best == label {
                correct += 1;
            }
        }
        Ok(correct as f64 / examples.len() as f64)
    }

    fn forward_pass(
        &self,
        params: &ParamVector,
        batch: &Batch,
        training: bool,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardPass> {
        self.validate_inputs(params, batch)?;
        let apply_dropout = training && self.dropout_rate > 0.0;
        if apply_dropout && rng.is_none() {
            return Err(Error::domain(
                "training-mode forward with dropout requires an rng".to_string(),
            ));
        }

        let mut activations = Vec::with_capacity(self.num_layers());
        let mut masks = Vec::with_capacity(self.hidden_dims.len());
        activations.push(batch.inputs().clone());

        for layer in 0..self.hidden_dims.len() {
            let weights = self.weight_view(params, layer);
            let biases = self.bias_view(params, layer);
            let mut z = activations[layer].dot(&weights.t());
            for mut row in z.axis_iter_mut(Axis(0)) {
                row += &biases;
            }
            z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });

            if apply_dropout {
                let rng = rng.as_mut().expect("checked above");
                let keep_scale = 1.0 / (1.0 - self.dropout_rate);
                let mut mask = Array2::zeros(z.raw_dim());
                for m in mask.iter_mut() {
                    *m = if rng.random::<f64>() < self.dropout_rate {
                        0.0
                    } else {
                        keep_scale
                    };
                }
                z.zip_mut_with(&mask, |v, &m| *v *= m);
                masks.push(Some(mask));
            } else {
                masks.push(None);
            }
            activations.push(z);
        }

        let last = self.num_layers() - 1;
        let weights = self.weight_view(params, last);
        let biases = self.bias_view(params, last);
        let mut logits = activations[last].dot(&weights.t());
        for mut row in logits.axis_iter_mut(Axis(0)) {
            row += &biases;
        }

        // Row-wise softmax, shifted by the row max for stability.
        for mut row in logits.axis_iter_mut(Axis(0)) {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }

        Ok(ForwardPass {
            activations,
            masks,
            probs: logits,
        })
    }
}

struct ForwardPass {
    /// Input to each layer: `[0]` is the batch, `[i]` the post-activation
    /// (and post-dropout) output of hidden layer `i - 1`.
    activations: Vec<Array2<f64>>,
    /// Dropout multiplier per hidden layer when active.
    masks: Vec<Option<Array2<f64>>>,
    probs: Array2<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;

    fn batch(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Batch {
        let ncols = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let inputs = Array2::from_shape_vec((labels.len(), ncols), flat).unwrap();
        Batch::new(inputs, labels).unwrap()
    }

    #[test]
    fn zero_weight_network_is_uniform() {
        let spec = ModelSpec::new(3, vec![], 10).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = batch(vec![vec![0.2, 0.9, -0.4]], vec![0]);
        let probs = spec.forward(&params, &b, false, None).unwrap();
        for &p in probs.iter() {
            assert_abs_diff_eq!(p, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn identical_rows_identical_outputs() {
        let spec = ModelSpec::new(4, vec![5], 3).unwrap();
        let mut rng = derive_rng(9, &[1]);
        let params = spec.init_params(&mut rng);
        let row = vec![0.3, 0.1, 0.8, 0.5];
        let b = batch(vec![row.clone(), row.clone(), row], vec![0, 1, 2]);
        let probs = spec.forward(&params, &b, false, None).unwrap();
        for col in 0..3 {
            assert_eq!(probs[[0, col]].to_bits(), probs[[1, col]].to_bits());
            assert_eq!(probs[[0, col]].to_bits(), probs[[2, col]].to_bits());
        }
    }

    /// Hand evaluation of the two-layer formula on a 2-2-2 network with
    /// fixed weights, input (1, 0).
    #[test]
    fn hand_built_two_layer_forward() {
        let spec = ModelSpec::new(2, vec![2], 2).unwrap();
        // w0 = [[0.5, -0.25], [0.75, 1.0]], b0 = [0.1, -0.2]
        // w1 = [[1.0, -1.0], [0.5, 0.25]], b1 = [0.05, -0.05]
        let params = ParamVector::from_values(
            spec.layout(),
            vec![
                0.5, -0.25, 0.75, 1.0, 0.1, -0.2, 1.0, -1.0, 0.5, 0.25, 0.05, -0.05,
            ],
        )
        .unwrap();
        let b = batch(vec![vec![1.0, 0.0]], vec![0]);
        let probs = spec.forward(&params, &b, false, None).unwrap();

        // Scalar route, written out by hand.
        let h0 = (0.5 * 1.0 + -0.25 * 0.0 + 0.1f64).max(0.0);
        let h1 = (0.75 * 1.0 + 1.0 * 0.0 + -0.2f64).max(0.0);
        let z0 = 1.0 * h0 + -1.0 * h1 + 0.05;
        let z1 = 0.5 * h0 + 0.25 * h1 + -0.05;
        let m = z0.max(z1);
        let (e0, e1) = ((z0 - m).exp(), (z1 - m).exp());
        let (p0, p1) = (e0 / (e0 + e1), e1 / (e0 + e1));

        assert_abs_diff_eq!(probs[[0, 0]], p0, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[[0, 1]], p1, epsilon = 1e-15);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let spec = ModelSpec::new(6, vec![8, 4], 5).unwrap();
        let mut rng = derive_rng(11, &[2]);
        let params = spec.init_params(&mut rng);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels = vec![0; 7];
        let probs = spec.forward(&params, &batch(rows, labels), false, None).unwrap();
        for row in probs.rows() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn saturated_model_has_zero_loss_and_grad() {
        let spec = ModelSpec::new(1, vec![], 2).unwrap();
        // Huge bias on class 0 saturates the softmax to exactly (1, 0).
        let params = ParamVector::from_values(spec.layout(), vec![0.0, 0.0, 1000.0, 0.0]).unwrap();
        let b = batch(vec![vec![0.5]], vec![0]);
        let (loss, grad) = spec.loss_and_grad(&params, &b, false, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn uniform_prediction_loss_is_ln_m() {
        let spec = ModelSpec::new(2, vec![], 10).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = batch(vec![vec![0.3, 0.7], vec![0.9, 0.1]], vec![4, 7]);
        let (loss, _) = spec.loss_and_grad(&params, &b, false, None).unwrap();
        assert_abs_diff_eq!(loss, (10.0f64).ln(), epsilon = 1e-12);
    }

    /// Central finite differences, step 1e-5, on a 20-16-10 model with a
    /// random batch of 4.
    #[test]
    fn analytic_grad_matches_finite_differences() {
        let spec = ModelSpec::new(20, vec![16], 10).unwrap();
        let mut rng = derive_rng(3, &[7]);
        let params = spec.init_params(&mut rng);
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..20).map(|_| rng.random::<f64>()).collect())
            .collect();
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..10)).collect();
        let b = batch(rows, labels);

        let (_, grad) = spec.loss_and_grad(&params, &b, false, None).unwrap();

        let step = 1e-5;
        for _ in 0..100 {
            let coord = rng.random_range(0..params.len());
            let mut plus = params.clone();
            plus.values_mut()[coord] += step;
            let mut minus = params.clone();
            minus.values_mut()[coord] -= step;
            let loss_plus = spec.loss_and_grad(&plus, &b, false, None).unwrap().0;
            let loss_minus = spec.loss_and_grad(&minus, &b, false, None).unwrap().0;
            let fd = (loss_plus - loss_minus) / (2.0 * step);
            let analytic = grad.values()[coord];
            let rel = (analytic - fd).abs() / fd.abs().max(1.0);
            assert!(
                rel < 1e-4,
                "coord {coord}: analytic {analytic} vs fd {fd} (rel {rel})"
            );
        }
    }

    #[test]
    fn dropout_gradient_matches_finite_differences_with_replayed_mask() {
        // With a fixed rng state the mask is deterministic, so FD on the
        // same stream checks the dropout backward path.
        let spec = ModelSpec::new(6, vec![8], 4)
            .unwrap()
            .with_dropout(0.25)
            .unwrap();
        let mut init_rng = derive_rng(5, &[1]);
        let params = spec.init_params(&mut init_rng);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| init_rng.random::<f64>()).collect())
            .collect();
        let b = batch(rows, vec![0, 1, 3]);

        let grad = {
            let mut rng = derive_rng(5, &[2]);
            spec.loss_and_grad(&params, &b, true, Some(&mut rng)).unwrap().1
        };
        let loss_at = |p: &ParamVector| {
            let mut rng = derive_rng(5, &[2]);
            spec.loss_and_grad(p, &b, true, Some(&mut rng)).unwrap().0
        };

        let step = 1e-6;
        let mut check_rng = derive_rng(5, &[3]);
        for _ in 0..40 {
            let coord = check_rng.random_range(0..params.len());
            let mut plus = params.clone();
            plus.values_mut()[coord] += step;
            let mut minus = params.clone();
            minus.values_mut()[coord] -= step;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * step);
            let analytic = grad.values()[coord];
            let rel = (analytic - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-4, "coord {coord}: {analytic} vs {fd}");
        }
    }

    #[test]
    fn two_steps_differ_from_one_combined_step_with_stale_grad() {
        let spec = ModelSpec::new(4, vec![6], 3).unwrap();
        let mut rng = derive_rng(21, &[4]);
        let p0 = spec.init_params(&mut rng);
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let b = batch(rows, vec![0, 1, 2, 0]);
        let lr = 0.5;

        let g1 = spec.loss_and_grad(&p0, &b, false, None).unwrap().1;
        let p1 = p0.sgd_step(&g1, lr).unwrap();
        let g2 = spec.loss_and_grad(&p1, &b, false, None).unwrap().1;
        let successive = p1.sgd_step(&g2, lr).unwrap();

        // One step with both gradients evaluated at the original point.
        let stale = ParamVector::from_values(
            p0.layout().clone(),
            g1.values().iter().map(|g| 2.0 * g).collect(),
        )
        .unwrap();
        let combined = p0.sgd_step(&stale, lr).unwrap();

        let max_diff = successive
            .values()
            .iter()
            .zip(combined.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-9, "nonlinear model should distinguish paths");
    }

    #[test]
    fn accuracy_tie_breaks_to_lowest_class() {
        let spec = ModelSpec::new(2, vec![], 10).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = batch(vec![vec![0.1, 0.2], vec![0.5, 0.5]], vec![0, 0]);
        assert_eq!(spec.accuracy(&params, &b).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_three_of_four() {
        let spec = ModelSpec::new(2, vec![], 2).unwrap();
        // Identity readout: prediction = argmax of the input pair.
        let params =
            ParamVector::from_values(spec.layout(), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = batch(
            vec![
                vec![0.9, 0.1],
                vec![0.2, 0.8],
                vec![0.7, 0.3],
                vec![0.4, 0.6],
            ],
            vec![0, 1, 0, 0],
        );
        assert_eq!(spec.accuracy(&params, &b).unwrap(), 0.75);
    }

    #[test]
    fn perfect_prediction_accuracy_is_one() {
        let spec = ModelSpec::new(2, vec![], 2).unwrap();
        let params =
            ParamVector::from_values(spec.layout(), vec![5.0, 0.0, 0.0, 5.0, 0.0, 0.0]).unwrap();
        let b = batch(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0, 1]);
        assert_eq!(spec.accuracy(&params, &b).unwrap(), 1.0);
    }

    #[test]
    fn empty_batch_accuracy_is_domain_error() {
        let spec = ModelSpec::new(2, vec![], 2).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = Batch::new(Array2::zeros((0, 2)), vec![]).unwrap();
        assert!(matches!(
            spec.accuracy(&params, &b),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let spec = ModelSpec::new(3, vec![], 2).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = batch(vec![vec![0.0, 0.0]], vec![0]);
        assert!(matches!(
            spec.forward(&params, &b, false, None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn non_finite_input_is_numeric_error() {
        let spec = ModelSpec::new(2, vec![], 2).unwrap();
        let params = ParamVector::zeros(spec.layout());
        let b = batch(vec![vec![f64::NAN, 0.0]], vec![0]);
        assert!(matches!(
            spec.forward(&params, &b, false, None),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn init_params_matches_layout_and_seed() {
        let spec = ModelSpec::new(784, vec![64], 10).unwrap();
        assert_eq!(spec.param_count(), 784 * 64 + 64 + 64 * 10 + 10);
        let a = spec.init_params(&mut derive_rng(1, &[1]));
        let b = spec.init_params(&mut derive_rng(1, &[1]));
        assert_eq!(a, b);
        let limit = (6.0f64 / (784.0 + 64.0)).sqrt();
        assert!(a.segment(0).iter().all(|w| w.abs() < limit));
        assert!(a.segment(1).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn sgd_linearity_within_rounding() {
        let spec = ModelSpec::new(3, vec![4], 2).unwrap();
        let mut rng = derive_rng(8, &[6]);
        let p = spec.init_params(&mut rng);
        let g1 = spec.init_params(&mut rng);
        let g2 = spec.init_params(&mut rng);
        let combined = ParamVector::from_values(
            p.layout().clone(),
            g1.values()
                .iter()
                .zip(g2.values())
                .map(|(a, b)| a + b)
                .collect(),
        )
        .unwrap();
        let one = p.sgd_step(&combined, 0.01).unwrap();
        let two = p.sgd_step(&g1, 0.01).unwrap().sgd_step(&g2, 0.01).unwrap();
        for (a, b) in one.values().iter().zip(two.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
