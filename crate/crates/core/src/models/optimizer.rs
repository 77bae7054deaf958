use serde::{Deserialize, Serialize};

use super::{Gradients, ModelState};
use crate::error::{shape_err, AptfError, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerSpec {
    pub fn sgd(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            lr,
            ..Self::default()
        }
    }

    pub fn adam(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub spec: OptimizerSpec,
    /// First moments; empty for SGD.
    pub m: Vec<Matrix>,
    /// Second moments; empty for SGD.
    pub v: Vec<Matrix>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(spec: OptimizerSpec, model: &ModelState) -> Self {
        let zeros = || {
            model
                .params
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect::<Vec<_>>()
        };
        let (m, v) = match spec.kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam => (zeros(), zeros()),
        };
        Self { spec, m, v, step: 0 }
    }

    /// Applies one update. Nothing is modified when the gradient contains a
    /// non-finite entry.
    pub fn step(&mut self, model: &mut ModelState, grads: &Gradients) -> Result<()> {
        if grads.0.len() != model.params.len() {
            return Err(shape_err(
                format!("{} gradient blocks", model.params.len()),
                format!("{}", grads.0.len()),
            ));
        }
        for (i, (g, p)) in grads.0.iter().zip(&model.params).enumerate() {
            if g.shape() != p.shape() {
                return Err(shape_err(format!("{:?}", p.shape()), format!("{:?}", g.shape())));
            }
            if !g.is_finite() {
                return Err(AptfError::NonFiniteGradient { param: i });
            }
        }
        self.step += 1;
        let lr = self.spec.lr;
        match self.spec.kind {
            OptimizerKind::Sgd => {
                for (p, g) in model.params.iter_mut().zip(&grads.0) {
                    for (theta, d) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *theta -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.spec.beta1, self.spec.beta2, self.spec.eps);
                let t = self.step as i32;
                let bc1 = 1.0 - b1.powi(t);
                let bc2 = 1.0 - b2.powi(t);
                for ((p, g), (m, v)) in model
                    .params
                    .iter_mut()
                    .zip(&grads.0)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    let iter = p
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice().iter_mut()));
                    for ((theta, &d), (mi, vi)) in iter {
                        *mi = b1 * *mi + (1.0 - b1) * d;
                        *vi = b2 * *vi + (1.0 - b2) * d * d;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *theta -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, ModelState};

    /// A model whose only "parameter" we care about is the first weight.
    fn scalar_model(theta: f64) -> ModelState {
        let spec = ModelSpec::LinearForecaster { lookback: 1, horizon: 1, variables: 1 };
        ModelState {
            spec,
            params: vec![Matrix::new(1, 1, vec![theta]).unwrap(), Matrix::zeros(1, 1)],
        }
    }

    fn grad(g: f64) -> Gradients {
        let mut w = Matrix::zeros(1, 1);
        w.set(0, 0, g);
        Gradients(vec![w, Matrix::zeros(1, 1)])
    }

    #[test]
    fn sgd_steps() {
        let mut model = scalar_model(1.0);
        let mut opt = OptimizerState::new(OptimizerSpec::sgd(0.1), &model);
        opt.step(&mut model, &grad(0.0)).unwrap();
        assert_eq!(model.params[0].get(0, 0), 1.0);
        opt.step(&mut model, &grad(2.0)).unwrap();
        assert!((model.params[0].get(0, 0) - 0.8).abs() < 1e-15);
        assert_eq!(opt.step, 2);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut model = scalar_model(1.0);
        let mut opt = OptimizerState::new(OptimizerSpec::adam(0.01), &model);
        for _ in 0..500 {
            let theta = model.params[0].get(0, 0);
            opt.step(&mut model, &grad(2.0 * theta)).unwrap();
        }
        assert!(model.params[0].get(0, 0).abs() < 0.05);
        assert_eq!(opt.m[0].shape(), model.params[0].shape());
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut model = scalar_model(1.0);
        let mut opt = OptimizerState::new(OptimizerSpec::sgd(0.1), &model);
        assert!(matches!(
            opt.step(&mut model, &grad(f64::NAN)),
            Err(AptfError::NonFiniteGradient { param: 0 })
        ));
        assert_eq!(model.params[0].get(0, 0), 1.0);
        assert_eq!(opt.step, 0);
    }
}
