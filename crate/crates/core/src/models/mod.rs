//! Small differentiable models with hand-written backward passes.
//!
//! Forecasters are channel-independent: the same weights map each
//! variable's lookback window to its horizon. The classifier flattens the
//! whole window.

mod checkpoint;
mod optimizer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use optimizer::{OptimizerKind, OptimizerSpec, OptimizerState};

use serde::{Deserialize, Serialize};

use crate::datasets::{Target, Task};
use crate::error::{shape_err, AptfError, Result};
use crate::numeric::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearForecaster {
        lookback: usize,
        horizon: usize,
        variables: usize,
    },
    MlpForecaster {
        lookback: usize,
        horizon: usize,
        variables: usize,
        hidden: usize,
    },
    MlpClassifier {
        lookback: usize,
        variables: usize,
        hidden: usize,
        classes: usize,
    },
}

impl ModelSpec {
    pub fn task(&self) -> Task {
        match self {
            ModelSpec::MlpClassifier { .. } => Task::Classify,
            _ => Task::Forecast,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::LinearForecaster { .. } => "linear_forecaster",
            ModelSpec::MlpForecaster { .. } => "mlp_forecaster",
            ModelSpec::MlpClassifier { .. } => "mlp_classifier",
        }
    }

    pub fn input_shape(&self) -> (usize, usize) {
        match *self {
            ModelSpec::LinearForecaster { lookback, variables, .. }
            | ModelSpec::MlpForecaster { lookback, variables, .. }
            | ModelSpec::MlpClassifier { lookback, variables, .. } => (lookback, variables),
        }
    }

    /// Shapes of the parameter matrices, in storage order.
    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        match *self {
            ModelSpec::LinearForecaster { lookback, horizon, .. } => {
                vec![(lookback, horizon), (1, horizon)]
            }
            ModelSpec::MlpForecaster { lookback, horizon, hidden, .. } => {
                vec![(lookback, hidden), (1, hidden), (hidden, horizon), (1, horizon)]
            }
            ModelSpec::MlpClassifier { lookback, variables, hidden, classes } => vec![
                (lookback * variables, hidden),
                (1, hidden),
                (hidden, classes),
                (1, classes),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ModelSpec::LinearForecaster { lookback, horizon, variables } => {
                lookback > 0 && horizon > 0 && variables > 0
            }
            ModelSpec::MlpForecaster { lookback, horizon, variables, hidden } => {
                lookback > 0 && horizon > 0 && variables > 0 && hidden > 0
            }
            ModelSpec::MlpClassifier { lookback, variables, hidden, classes } => {
                lookback > 0 && variables > 0 && hidden > 0 && classes >= 2
            }
        };
        if ok {
            Ok(())
        } else {
            Err(AptfError::BadSpec(format!("invalid model shape {self:?}")))
        }
    }
}

/// Parameters of one model. Weight matrices precede their biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub spec: ModelSpec,
    pub params: Vec<Matrix>,
}

/// Gradients with the same layout as [`ModelState::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Matrix>);

impl Gradients {
    pub fn zeros_like(spec: &ModelSpec) -> Self {
        Gradients(spec.param_shapes().into_iter().map(|(r, c)| Matrix::zeros(r, c)).collect())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }
}

/// Weights ~ N(0, 1/fan_in), biases zero.
pub fn init_model(spec: ModelSpec, rng: &mut Rng) -> Result<ModelState> {
    spec.validate()?;
    let shapes = spec.param_shapes();
    let params = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| {
            if i % 2 == 1 {
                Matrix::zeros(r, c)
            } else {
                let std = 1.0 / (r as f64).sqrt();
                Matrix::new(r, c, rng.gauss(r * c, 0.0, std)).expect("finite init")
            }
        })
        .collect();
    Ok(ModelState { spec, params })
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Row-wise softmax of a `1 x C` logit matrix.
pub fn softmax(logits: &Matrix) -> Vec<f64> {
    softmax_row(logits.as_slice())
}

struct Hidden {
    /// tanh activations, one row per forecaster channel (or one row for the
    /// classifier).
    act: Vec<Vec<f64>>,
}

impl ModelState {
    pub fn num_params(&self) -> usize {
        self.params.iter().map(Matrix::len).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(shape_err(
                format!("{} parameters", self.num_params()),
                format!("{}", flat.len()),
            ));
        }
        let mut offset = 0;
        for m in &mut self.params {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(Matrix::is_finite)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        let expected = self.spec.input_shape();
        if x.shape() != expected {
            return Err(shape_err(format!("input {expected:?}"), format!("{:?}", x.shape())));
        }
        Ok(())
    }

    fn forward_one(&self, x: &Matrix) -> (Matrix, Hidden) {
        let p = &self.params;
        match self.spec {
            ModelSpec::LinearForecaster { lookback, horizon, variables } => {
                let (w, b) = (&p[0], &p[1]);
                let mut out = Matrix::zeros(horizon, variables);
                for c in 0..variables {
                    for h in 0..horizon {
                        let mut s = b.get(0, h);
                        for l in 0..lookback {
                            s += x.get(l, c) * w.get(l, h);
                        }
                        out.set(h, c, s);
                    }
                }
                (out, Hidden { act: Vec::new() })
            }
            ModelSpec::MlpForecaster { lookback, horizon, variables, hidden } => {
                let (w1, b1, w2, b2) = (&p[0], &p[1], &p[2], &p[3]);
                let mut out = Matrix::zeros(horizon, variables);
                let mut act = Vec::with_capacity(variables);
                for c in 0..variables {
                    let a: Vec<f64> = (0..hidden)
                        .map(|k| {
                            let mut z = b1.get(0, k);
                            for l in 0..lookback {
                                z += x.get(l, c) * w1.get(l, k);
                            }
                            z.tanh()
                        })
                        .collect();
                    for h in 0..horizon {
                        let mut s = b2.get(0, h);
                        for (k, ak) in a.iter().enumerate() {
                            s += ak * w2.get(k, h);
                        }
                        out.set(h, c, s);
                    }
                    act.push(a);
                }
                (out, Hidden { act })
            }
            ModelSpec::MlpClassifier { hidden, classes, .. } => {
                let (w1, b1, w2, b2) = (&p[0], &p[1], &p[2], &p[3]);
                let flat = x.as_slice();
                let a: Vec<f64> = (0..hidden)
                    .map(|k| {
                        let mut z = b1.get(0, k);
                        for (i, xi) in flat.iter().enumerate() {
                            z += xi * w1.get(i, k);
                        }
                        z.tanh()
                    })
                    .collect();
                let mut out = Matrix::zeros(1, classes);
                for j in 0..classes {
                    let mut s = b2.get(0, j);
                    for (k, ak) in a.iter().enumerate() {
                        s += ak * w2.get(k, j);
                    }
                    out.set(0, j, s);
                }
                (out, Hidden { act: vec![a] })
            }
        }
    }

    /// Forecasters return `horizon x variables` per sample, the classifier
    /// returns `1 x classes` logits.
    pub fn forward(&self, inputs: &[&Matrix]) -> Result<Vec<Matrix>> {
        inputs
            .iter()
            .map(|x| {
                self.check_input(x)?;
                Ok(self.forward_one(x).0)
            })
            .collect()
    }

    /// Gradient of `sum_i weights[i] * loss_i` with respect to every
    /// parameter.
    pub fn backward_weighted(
        &self,
        inputs: &[&Matrix],
        targets: &[&Target],
        weights: &[f64],
    ) -> Result<Gradients> {
        if inputs.len() != targets.len() || inputs.len() != weights.len() {
            return Err(shape_err(
                format!("{} targets and weights", inputs.len()),
                format!("{} targets, {} weights", targets.len(), weights.len()),
            ));
        }
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(AptfError::NegativeWeight { index, weight });
        }
        let mut grads = Gradients::zeros_like(&self.spec);
        for ((x, target), &w) in inputs.iter().zip(targets).zip(weights) {
            self.check_input(x)?;
            if w == 0.0 {
                continue;
            }
            let (pred, hidden) = self.forward_one(x);
            let dpred = loss_grad(&pred, target)?;
            self.accumulate(&mut grads, x, &hidden, &dpred, w);
        }
        Ok(grads)
    }

    fn accumulate(&self, grads: &mut Gradients, x: &Matrix, hidden: &Hidden, dpred: &Matrix, w: f64) {
        let g = &mut grads.0;
        let p = &self.params;
        match self.spec {
            ModelSpec::LinearForecaster { lookback, horizon, variables } => {
                for c in 0..variables {
                    for h in 0..horizon {
                        let d = w * dpred.get(h, c);
                        for l in 0..lookback {
                            let v = g[0].get(l, h) + x.get(l, c) * d;
                            g[0].set(l, h, v);
                        }
                        let v = g[1].get(0, h) + d;
                        g[1].set(0, h, v);
                    }
                }
            }
            ModelSpec::MlpForecaster { lookback, horizon, variables, hidden: n_hidden } => {
                let w2 = &p[2];
                for c in 0..variables {
                    let a = &hidden.act[c];
                    let mut dz = vec![0.0; n_hidden];
                    for h in 0..horizon {
                        let d = w * dpred.get(h, c);
                        for k in 0..n_hidden {
                            let v = g[2].get(k, h) + a[k] * d;
                            g[2].set(k, h, v);
                            dz[k] += w2.get(k, h) * d;
                        }
                        let v = g[3].get(0, h) + d;
                        g[3].set(0, h, v);
                    }
                    for k in 0..n_hidden {
                        dz[k] *= 1.0 - a[k] * a[k];
                        for l in 0..lookback {
                            let v = g[0].get(l, k) + x.get(l, c) * dz[k];
                            g[0].set(l, k, v);
                        }
                        let v = g[1].get(0, k) + dz[k];
                        g[1].set(0, k, v);
                    }
                }
            }
            ModelSpec::MlpClassifier { hidden: n_hidden, classes, .. } => {
                let w2 = &p[2];
                let a = &hidden.act[0];
                let mut dz = vec![0.0; n_hidden];
                for j in 0..classes {
                    let d = w * dpred.get(0, j);
                    for k in 0..n_hidden {
                        let v = g[2].get(k, j) + a[k] * d;
                        g[2].set(k, j, v);
                        dz[k] += w2.get(k, j) * d;
                    }
                    let v = g[3].get(0, j) + d;
                    g[3].set(0, j, v);
                }
                for (i, xi) in x.as_slice().iter().enumerate() {
                    for k in 0..n_hidden {
                        let dzk = dz[k] * (1.0 - a[k] * a[k]);
                        let v = g[0].get(i, k) + xi * dzk;
                        g[0].set(i, k, v);
                    }
                }
                for k in 0..n_hidden {
                    let v = g[1].get(0, k) + dz[k] * (1.0 - a[k] * a[k]);
                    g[1].set(0, k, v);
                }
            }
        }
    }
}

/// MSE over `horizon x variables` for forecasts, negative log-likelihood of
/// the true class for classification.
pub fn per_sample_loss(predictions: &[Matrix], targets: &[&Target]) -> Result<Vec<f64>> {
    if predictions.len() != targets.len() {
        return Err(shape_err(
            format!("{} targets", predictions.len()),
            format!("{}", targets.len()),
        ));
    }
    predictions
        .iter()
        .zip(targets)
        .map(|(pred, target)| sample_loss(pred, target))
        .collect()
}

fn sample_loss(pred: &Matrix, target: &Target) -> Result<f64> {
    match target {
        Target::Forecast(y) => {
            if y.shape() != pred.shape() {
                return Err(shape_err(format!("{:?}", pred.shape()), format!("{:?}", y.shape())));
            }
            let sse: f64 = pred
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(p, t)| (p - t).powi(2))
                .sum();
            Ok(sse / y.len() as f64)
        }
        Target::Class(c) => {
            let logits = pred.as_slice();
            if *c >= logits.len() {
                return Err(shape_err(format!("class < {}", logits.len()), format!("{c}")));
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            Ok((lse - logits[*c]).max(0.0))
        }
    }
}

fn loss_grad(pred: &Matrix, target: &Target) -> Result<Matrix> {
    match target {
        Target::Forecast(y) => {
            if y.shape() != pred.shape() {
                return Err(shape_err(format!("{:?}", pred.shape()), format!("{:?}", y.shape())));
            }
            let scale = 2.0 / y.len() as f64;
            let data = pred
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(p, t)| scale * (p - t))
                .collect();
            Matrix::new(pred.rows(), pred.cols(), data)
        }
        Target::Class(c) => {
            let mut probs = softmax(pred);
            if *c >= probs.len() {
                return Err(shape_err(format!("class < {}", probs.len()), format!("{c}")));
            }
            probs[*c] -= 1.0;
            Matrix::new(1, probs.len(), probs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(l: usize, m: usize, v: usize) -> ModelSpec {
        ModelSpec::LinearForecaster { lookback: l, horizon: m, variables: v }
    }

    #[test]
    fn init_shapes_and_determinism() {
        let a = init_model(linear(4, 2, 1), &mut Rng::new(1)).unwrap();
        assert_eq!(a.params[0].shape(), (4, 2));
        assert_eq!(a.params[1].shape(), (1, 2));
        let b = init_model(linear(4, 2, 1), &mut Rng::new(1)).unwrap();
        assert_eq!(a, b);
        assert!(init_model(linear(0, 2, 1), &mut Rng::new(1)).is_err());
    }

    #[test]
    fn init_std_scales_with_fan_in() {
        let spec = ModelSpec::MlpForecaster { lookback: 100, horizon: 1, variables: 1, hidden: 50 };
        let m = init_model(spec, &mut Rng::new(3)).unwrap();
        let w = m.params[0].as_slice();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let std = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        assert!((std - 0.1).abs() < 0.02, "std {std}");
    }

    #[test]
    fn zero_model_predicts_zero() {
        let mut m = init_model(linear(3, 2, 2), &mut Rng::new(0)).unwrap();
        m.params.iter_mut().for_each(|p| p.fill(0.0));
        let x = Matrix::new(3, 2, vec![1.0; 6]).unwrap();
        let out = m.forward(&[&x]).unwrap();
        assert!(out[0].as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_forward_is_matrix_product() {
        let m = init_model(linear(3, 2, 2), &mut Rng::new(5)).unwrap();
        let x = Matrix::new(3, 2, vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.5]).unwrap();
        let out = &m.forward(&[&x]).unwrap()[0];
        // (x^T W + b)^T, computed with the generic matmul
        let xt_w = x.transpose().matmul(&m.params[0]).unwrap();
        for c in 0..2 {
            for h in 0..2 {
                let expected = xt_w.get(c, h) + m.params[1].get(0, h);
                assert!((out.get(h, c) - expected).abs() < 1e-12);
            }
        }
        assert!(matches!(
            m.forward(&[&Matrix::zeros(2, 2)]),
            Err(AptfError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let spec = ModelSpec::MlpClassifier { lookback: 5, variables: 2, hidden: 4, classes: 3 };
        let m = init_model(spec, &mut Rng::new(2)).unwrap();
        let x = Matrix::new(5, 2, Rng::new(9).gauss(10, 0.0, 3.0)).unwrap();
        let logits = &m.forward(&[&x]).unwrap()[0];
        assert!((softmax(logits).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let y = Target::Forecast(Matrix::column(vec![0.0, 2.0]).unwrap());
        let pred = Matrix::column(vec![1.0, 1.0]).unwrap();
        assert_eq!(per_sample_loss(&[pred], &[&y]).unwrap(), vec![1.0]);

        let perfect = Matrix::column(vec![0.0, 2.0]).unwrap();
        assert_eq!(per_sample_loss(&[perfect], &[&y]).unwrap(), vec![0.0]);

        let uniform = Matrix::new(1, 4, vec![0.3; 4]).unwrap();
        let loss = per_sample_loss(&[uniform], &[&Target::Class(2)]).unwrap()[0];
        assert!((loss - 4f64.ln()).abs() < 1e-12);

        let wrong_shape = Matrix::column(vec![1.0]).unwrap();
        assert!(per_sample_loss(&[wrong_shape], &[&y]).is_err());
    }

    #[test]
    fn zero_weights_give_zero_gradient() {
        let m = init_model(linear(3, 1, 1), &mut Rng::new(4)).unwrap();
        let x = Matrix::column(vec![1.0, 2.0, 3.0]).unwrap();
        let t = Target::Forecast(Matrix::column(vec![5.0]).unwrap());
        let g = m.backward_weighted(&[&x], &[&t], &[0.0]).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
        assert!(matches!(
            m.backward_weighted(&[&x], &[&t], &[-0.5]),
            Err(AptfError::NegativeWeight { .. })
        ));
    }
}
