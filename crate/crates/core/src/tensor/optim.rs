//! Parameter updaters. Plain SGD is the default; momentum and Adam variants
//! are selected through config.

use super::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Stateful optimizer over one [`Params`] registry. Updates are deterministic
/// given the gradient contents.
#[derive(Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step_count: u64,
    // one slot pair per parameter, lazily sized on first step
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if lr <= 0.0 || !lr.is_finite() {
            return Err(Error::InvalidArg(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Self { kind, lr, step_count: 0, m: Vec::new(), v: Vec::new() })
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        if lr <= 0.0 || !lr.is_finite() {
            return Err(Error::InvalidArg(format!("learning rate must be positive, got {lr}")));
        }
        self.lr = lr;
        Ok(())
    }

    fn ensure_slots(&mut self, params: &Params) {
        while self.m.len() < params.len() {
            let idx = self.m.len();
            let n = params.get(super::ParamId(idx)).len();
            self.m.push(vec![0.0; n]);
            self.v.push(vec![0.0; n]);
        }
    }

    /// Apply one update from the gradients currently stored in `params`.
    pub fn step(&mut self, params: &mut Params) -> Result<()> {
        self.ensure_slots(params);
        self.step_count += 1;
        for (idx, id) in params.ids().enumerate().map(|(i, id)| (i, id)).collect::<Vec<_>>() {
            let p = params.get_mut(id);
            if p.grad().len() != p.values().len() {
                return Err(Error::ShapeMismatch {
                    name: p.name().to_string(),
                    expected: p.shape().to_vec(),
                    got: vec![p.grad().len()],
                });
            }
            let grad: Vec<f64> = p.grad().to_vec();
            let mut new_values: Vec<f64> = p.values().to_vec();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (vi, gi) in new_values.iter_mut().zip(&grad) {
                        *vi -= self.lr * gi;
                    }
                }
                OptimizerKind::Momentum { beta } => {
                    let m = &mut self.m[idx];
                    for ((vi, gi), mi) in new_values.iter_mut().zip(&grad).zip(m.iter_mut()) {
                        *mi = beta * *mi + gi;
                        *vi -= self.lr * *mi;
                    }
                }
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    let t = self.step_count as i32;
                    let bc1 = 1.0 - beta1.powi(t);
                    let bc2 = 1.0 - beta2.powi(t);
                    let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
                    for (((vi, gi), mi), vvi) in
                        new_values.iter_mut().zip(&grad).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vvi = beta2 * *vvi + (1.0 - beta2) * gi * gi;
                        let mhat = *mi / bc1;
                        let vhat = *vvi / bc2;
                        *vi -= self.lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
            p.set_values(&new_values)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let mut params = Params::new();
        let w = params.register("w", &[2], vec![1.0, -1.0]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1).unwrap();
        opt.step(&mut params).unwrap();
        assert_eq!(params.get(w).values(), &[1.0, -1.0]);
    }

    #[test]
    fn plain_sgd_definition() {
        let mut params = Params::new();
        let w = params.register("w", &[1], vec![1.0]).unwrap();
        params.get_mut(w).accumulate_grad(&[2.0]);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1).unwrap();
        opt.step(&mut params).unwrap();
        assert!((params.get(w).values()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sgd_contracts_quadratic() {
        // loss = x², lr 0.4 → x ← x(1 − 0.8) = 0.2x each step
        let mut params = Params::new();
        let w = params.register("x", &[1], vec![1.0]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.4).unwrap();
        let mut prev = 1.0f64;
        for _ in 0..10 {
            params.zero_grad();
            let mut tape = Tape::new();
            let x = tape.param(&params, w);
            let sq = tape.mul(x, x).unwrap();
            let loss = tape.sum(sq);
            tape.backward(loss, &mut params).unwrap();
            opt.step(&mut params).unwrap();
            let cur = params.get(w).values()[0].abs();
            assert!(cur < prev, "|x| must strictly decrease: {cur} vs {prev}");
            assert!((cur - prev * 0.2).abs() < 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut params = Params::new();
        let w = params.register("w", &[1], vec![1.0]).unwrap();
        params.get_mut(w).accumulate_grad(&[10.0]);
        let mut opt = Optimizer::new(OptimizerKind::adam(), 0.05).unwrap();
        opt.step(&mut params).unwrap();
        assert!(params.get(w).values()[0] < 1.0);
    }

    #[test]
    fn rejects_nonpositive_learning_rate() {
        assert!(Optimizer::new(OptimizerKind::Sgd, 0.0).is_err());
        assert!(Optimizer::new(OptimizerKind::Sgd, -0.5).is_err());
    }
}
