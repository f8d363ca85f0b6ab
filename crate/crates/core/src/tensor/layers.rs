//! Dense and gated recurrent layers over the tape.

use super::{ParamId, Params, Tape, TensorId};
use crate::error::{Error, Result};
use rand::Rng;

/// Elementwise nonlinearity applied after the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply_tape(self, tape: &mut Tape, x: TensorId) -> TensorId {
        match self {
            Activation::Identity => x,
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }

    fn apply_scalar(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }
}

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    /// Glorot uniform: U(±sqrt(6/(fan_in+fan_out))).
    Xavier,
    Zeros,
}

fn init_values(init: Init, fan_in: usize, fan_out: usize, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match init {
        Init::Zeros => vec![0.0; n],
        Init::Xavier => {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        }
    }
}

/// Affine layer y = act(W·x + b).
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(
        params: &mut Params,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        init: Init,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let w = params.register(
            &format!("{name}.w"),
            &[out_dim, in_dim],
            init_values(init, in_dim, out_dim, in_dim * out_dim, rng),
        )?;
        let b = params.register(&format!("{name}.b"), &[out_dim], vec![0.0; out_dim])?;
        Ok(Self { weights: w, bias: b, in_dim, out_dim, activation })
    }

    /// Tape forward; `x` may be a vector (in_dim) or a batch matrix
    /// (in_dim × n) processed column-wise.
    pub fn forward(&self, tape: &mut Tape, params: &Params, x: TensorId) -> Result<TensorId> {
        let (rows, _) = tape.shape(x);
        if rows != self.in_dim {
            return Err(Error::DimMismatch {
                context: "dense_forward",
                left: format!("layer input {}", self.in_dim),
                right: format!("x rows {rows}"),
            });
        }
        let w = tape.param(params, self.weights);
        let b = tape.param(params, self.bias);
        let wx = tape.matmul(w, x)?;
        let pre = tape.add_bias(wx, b)?;
        Ok(self.activation.apply_tape(tape, pre))
    }

    /// Pure evaluation without recording (hot path for rollouts).
    pub fn eval(&self, params: &Params, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::DimMismatch {
                context: "dense_forward",
                left: format!("layer input {}", self.in_dim),
                right: format!("x len {}", x.len()),
            });
        }
        let w = params.get(self.weights).values();
        let b = params.get(self.bias).values();
        let mut out = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            let pre: f64 = row.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum::<f64>() + b[o];
            out.push(self.activation.apply_scalar(pre));
        }
        Ok(out)
    }
}

/// Multi-layer perceptron; hidden layers share one activation, the output
/// layer has its own (and optionally zero-initialized weights, which makes a
/// fresh network emit exactly zero logits).
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(
        params: &mut Params,
        name: &str,
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        zero_init_output: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArg("mlp needs at least input and output dims".into()));
        }
        let mut layers = Vec::new();
        for i in 0..dims.len() - 1 {
            let last = i == dims.len() - 2;
            let act = if last { output } else { hidden };
            let init = if last && zero_init_output { Init::Zeros } else { Init::Xavier };
            layers.push(DenseLayer::new(
                params,
                &format!("{name}.{i}"),
                dims[i],
                dims[i + 1],
                act,
                init,
                rng,
            )?);
        }
        Ok(Self { layers })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn forward(&self, tape: &mut Tape, params: &Params, x: TensorId) -> Result<TensorId> {
        let mut h = x;
        for layer in &self.layers {
            h = layer.forward(tape, params, h)?;
        }
        Ok(h)
    }

    pub fn eval(&self, params: &Params, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.eval(params, &h)?;
        }
        Ok(h)
    }
}

/// Gated recurrent cell.
///
/// z = σ(Wz·x + Uz·h + bz), r = σ(Wr·x + Ur·h + br),
/// n = tanh(Wn·x + Un·(r⊙h) + bn), h' = h + z⊙(n − h).
#[derive(Debug, Clone)]
pub struct GruCell {
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_n: ParamId,
    u_n: ParamId,
    b_n: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruCell {
    pub fn new(
        params: &mut Params,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mat = |params: &mut Params, suffix: &str, rows: usize, cols: usize, rng: &mut _| {
            params.register(
                &format!("{name}.{suffix}"),
                &[rows, cols],
                init_values(Init::Xavier, cols, rows, rows * cols, rng),
            )
        };
        let w_z = mat(params, "wz", hidden_dim, input_dim, rng)?;
        let u_z = mat(params, "uz", hidden_dim, hidden_dim, rng)?;
        let b_z = params.register(&format!("{name}.bz"), &[hidden_dim], vec![0.0; hidden_dim])?;
        let w_r = mat(params, "wr", hidden_dim, input_dim, rng)?;
        let u_r = mat(params, "ur", hidden_dim, hidden_dim, rng)?;
        let b_r = params.register(&format!("{name}.br"), &[hidden_dim], vec![0.0; hidden_dim])?;
        let w_n = mat(params, "wn", hidden_dim, input_dim, rng)?;
        let u_n = mat(params, "un", hidden_dim, hidden_dim, rng)?;
        let b_n = params.register(&format!("{name}.bn"), &[hidden_dim], vec![0.0; hidden_dim])?;
        Ok(Self { w_z, u_z, b_z, w_r, u_r, b_r, w_n, u_n, b_n, input_dim, hidden_dim })
    }

    fn gate(
        &self,
        tape: &mut Tape,
        params: &Params,
        w: ParamId,
        u: ParamId,
        b: ParamId,
        x: TensorId,
        h: TensorId,
    ) -> Result<TensorId> {
        let wt = tape.param(params, w);
        let ut = tape.param(params, u);
        let bt = tape.param(params, b);
        let wx = tape.matmul(wt, x)?;
        let uh = tape.matmul(ut, h)?;
        let s = tape.add(wx, uh)?;
        tape.add_bias(s, bt)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &Params,
        x: TensorId,
        h: TensorId,
    ) -> Result<TensorId> {
        let (xr, _) = tape.shape(x);
        if xr != self.input_dim {
            return Err(Error::DimMismatch {
                context: "gru_forward",
                left: format!("cell input {}", self.input_dim),
                right: format!("x rows {xr}"),
            });
        }
        let z_pre = self.gate(tape, params, self.w_z, self.u_z, self.b_z, x, h)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = self.gate(tape, params, self.w_r, self.u_r, self.b_r, x, h)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let n_pre = self.gate(tape, params, self.w_n, self.u_n, self.b_n, x, rh)?;
        let n = tape.tanh(n_pre);
        // h' = h + z⊙(n − h)
        let diff = tape.sub(n, h)?;
        let step = tape.mul(z, diff)?;
        tape.add(h, step)
    }

    pub fn eval(&self, params: &Params, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        let gate_eval = |w: ParamId, u: ParamId, b: ParamId, hv: &[f64]| -> Vec<f64> {
            let (wv, uv, bv) =
                (params.get(w).values(), params.get(u).values(), params.get(b).values());
            (0..self.hidden_dim)
                .map(|o| {
                    let wrow = &wv[o * self.input_dim..(o + 1) * self.input_dim];
                    let urow = &uv[o * self.hidden_dim..(o + 1) * self.hidden_dim];
                    wrow.iter().zip(x).map(|(&a, &b)| a * b).sum::<f64>()
                        + urow.iter().zip(hv).map(|(&a, &b)| a * b).sum::<f64>()
                        + bv[o]
                })
                .collect()
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z: Vec<f64> = gate_eval(self.w_z, self.u_z, self.b_z, h).into_iter().map(sig).collect();
        let r: Vec<f64> = gate_eval(self.w_r, self.u_r, self.b_r, h).into_iter().map(sig).collect();
        let rh: Vec<f64> = r.iter().zip(h).map(|(&ri, &hi)| ri * hi).collect();
        let n: Vec<f64> =
            gate_eval(self.w_n, self.u_n, self.b_n, &rh).into_iter().map(f64::tanh).collect();
        Ok(h.iter()
            .zip(z.iter().zip(&n))
            .map(|(&hi, (&zi, &ni))| hi + zi * (ni - hi))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dense_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = Params::new();
        let layer = DenseLayer::new(&mut params, "l", 2, 2, Activation::Identity, Init::Zeros, &mut rng)
            .unwrap();
        params.get_mut(layer.weights).set_values(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(layer.eval(&params, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weight_tanh_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = Params::new();
        let layer =
            DenseLayer::new(&mut params, "l", 3, 2, Activation::Tanh, Init::Zeros, &mut rng).unwrap();
        assert_eq!(layer.eval(&params, &[4.0, -1.0, 9.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = Params::new();
        let layer = DenseLayer::new(&mut params, "l", 2, 1, Activation::Identity, Init::Zeros, &mut rng)
            .unwrap();
        params.get_mut(layer.weights).set_values(&[1.0, 1.0]).unwrap();
        params.get_mut(layer.bias).set_values(&[0.5]).unwrap();
        assert_eq!(layer.eval(&params, &[1.0, 2.0]).unwrap(), vec![3.5]);
    }

    #[test]
    fn dense_dim_mismatch_names_both_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = Params::new();
        let layer =
            DenseLayer::new(&mut params, "l", 3, 2, Activation::Tanh, Init::Xavier, &mut rng).unwrap();
        let err = layer.eval(&params, &[1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('2'), "unexpected message: {msg}");
    }

    #[test]
    fn tape_eval_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = Params::new();
        let mlp =
            Mlp::new(&mut params, "m", &[4, 8, 3], Activation::Tanh, Activation::Identity, false, &mut rng)
                .unwrap();
        let x = [0.3, -0.7, 1.1, 0.05];
        let pure = mlp.eval(&params, &x).unwrap();
        let mut tape = Tape::new();
        let xt = tape.leaf(&x);
        let yt = mlp.forward(&mut tape, &params, xt).unwrap();
        for (a, b) in pure.iter().zip(tape.value(yt)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gru_bounded_on_repeated_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = Params::new();
        let cell = GruCell::new(&mut params, "g", 3, 5, &mut rng).unwrap();
        let mut h = vec![0.0; 5];
        // zero input, zero state stays bounded
        h = cell.eval(&params, &[0.0; 3], &h).unwrap();
        assert!(h.iter().all(|v| v.is_finite()));
        // long horizon on bounded inputs never leaves [-1, 1] envelope by much
        for step in 0..500 {
            let x = [(step as f64 * 0.1).sin(), -0.5, 0.9];
            h = cell.eval(&params, &x, &h).unwrap();
            assert!(h.iter().all(|v| v.is_finite() && v.abs() < 10.0), "diverged at {step}");
        }
    }

    #[test]
    fn gru_tape_matches_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut params = Params::new();
        let cell = GruCell::new(&mut params, "g", 2, 4, &mut rng).unwrap();
        let x = [0.4, -0.2];
        let h0 = [0.1, 0.2, -0.3, 0.0];
        let pure = cell.eval(&params, &x, &h0).unwrap();
        let mut tape = Tape::new();
        let xt = tape.leaf(&x);
        let ht = tape.leaf(&h0);
        let out = cell.forward(&mut tape, &params, xt, ht).unwrap();
        for (a, b) in pure.iter().zip(tape.value(out)) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
