//! The discovery model: trajectory embeddings plus lag-statistics edge
//! features feed a message-passing encoder that emits per-pair edge-type
//! logits; a per-edge-type dynamics decoder predicts the next-step change.

use crate::error::{Error, Result};
use crate::scenario::TimeSeriesSample;
use crate::tensor::{softmax, Activation, DenseLayer, Init, Mlp, Params, Tape, TensorId};
use rand::Rng;

/// Per-pair edge-type logits; the diagonal is masked to type 0.
#[derive(Debug, Clone)]
pub struct EdgeLogits {
    pub n: usize,
    pub n_edge_types: usize,
    data: Vec<f64>,
}

const DIAG_MASK_LOGIT: f64 = 30.0;

impl EdgeLogits {
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.n + j) * self.n_edge_types;
        &self.data[base..base + self.n_edge_types]
    }

    /// Softmax posterior per pair.
    pub fn posterior(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.n {
            for j in 0..self.n {
                let probs = softmax(self.at(i, j), 1.0)?;
                let base = (i * self.n + j) * self.n_edge_types;
                out[base..base + self.n_edge_types].copy_from_slice(&probs);
            }
        }
        Ok(out)
    }
}

/// Architecture sizes.
#[derive(Debug, Clone, Copy)]
pub struct ModelDims {
    pub t_steps: usize,
    pub hidden: usize,
    pub decoder_hidden: usize,
    pub n_edge_types: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self { t_steps: 100, hidden: 24, decoder_hidden: 16, n_edge_types: 2 }
    }
}

const N_PAIR_STATS: usize = 5;

/// Encoder + decoder parameters; observation noise is fixed in config.
#[derive(Debug, Clone)]
pub struct DiscoveryModel {
    pub params: Params,
    pub dims: ModelDims,
    pub sigma2: f64,
    emb: Mlp,
    edge_in: Mlp,
    node_agg: Mlp,
    edge_out: Mlp,
    edge_dyn: Vec<EdgeNet>,
    node_dyn: Mlp,
    /// Per-series input scale (1/std, fit on the training set); the decoder
    /// consumes scaled values and emits raw-scale deltas.
    input_scale: Vec<f64>,
}

/// Per-edge-type message function: an MLP plus a parallel linear skip so
/// exact linear dynamics are representable without tanh approximation error.
#[derive(Debug, Clone)]
pub struct EdgeNet {
    mlp: Mlp,
    skip: DenseLayer,
}

impl EdgeNet {
    fn new(params: &mut Params, name: &str, hd: usize, rng: &mut impl Rng) -> crate::error::Result<Self> {
        let mlp = Mlp::new(
            params,
            &format!("{name}.mlp"),
            &[2, hd, hd],
            Activation::Tanh,
            Activation::Identity,
            false,
            rng,
        )?;
        let skip =
            DenseLayer::new(params, &format!("{name}.skip"), 2, hd, Activation::Identity, Init::Xavier, rng)?;
        Ok(Self { mlp, skip })
    }

    fn eval(&self, params: &Params, x: &[f64]) -> crate::error::Result<Vec<f64>> {
        let a = self.mlp.eval(params, x)?;
        let b = self.skip.eval(params, x)?;
        Ok(a.iter().zip(&b).map(|(u, v)| u + v).collect())
    }

    fn forward(&self, tape: &mut Tape, params: &Params, x: TensorId) -> crate::error::Result<TensorId> {
        let a = self.mlp.forward(tape, params, x)?;
        let b = self.skip.forward(tape, params, x)?;
        tape.add(a, b)
    }
}

impl DiscoveryModel {
    /// Fresh model; the logit and residual output layers are zero-initialized
    /// so an untrained model emits a uniform edge posterior and an identity
    /// one-step prediction.
    pub fn new(dims: ModelDims, sigma2: f64, rng: &mut impl Rng) -> Result<Self> {
        if sigma2 <= 0.0 {
            return Err(Error::InvalidArg(format!("sigma2 must be positive, got {sigma2}")));
        }
        if dims.n_edge_types < 2 {
            return Err(Error::InvalidArg("need at least 2 edge types (none + present)".into()));
        }
        let mut params = Params::new();
        let h = dims.hidden;
        let emb = Mlp::new(
            &mut params,
            "enc.emb",
            &[dims.t_steps, h, h],
            Activation::Tanh,
            Activation::Tanh,
            false,
            rng,
        )?;
        let edge_in = Mlp::new(
            &mut params,
            "enc.edge_in",
            &[2 * h + N_PAIR_STATS, h, h],
            Activation::Tanh,
            Activation::Tanh,
            false,
            rng,
        )?;
        let node_agg = Mlp::new(
            &mut params,
            "enc.node_agg",
            &[h, h],
            Activation::Tanh,
            Activation::Tanh,
            false,
            rng,
        )?;
        let edge_out = Mlp::new(
            &mut params,
            "enc.edge_out",
            &[2 * h + N_PAIR_STATS, h, dims.n_edge_types],
            Activation::Tanh,
            Activation::Identity,
            true,
            rng,
        )?;
        let hd = dims.decoder_hidden;
        let mut edge_dyn = Vec::new();
        for e in 1..dims.n_edge_types {
            edge_dyn.push(EdgeNet::new(&mut params, &format!("dec.edge{e}"), hd, rng)?);
        }
        let node_dyn = Mlp::new(
            &mut params,
            "dec.node",
            &[hd, hd, 1],
            Activation::Tanh,
            Activation::Identity,
            true,
            rng,
        )?;
        Ok(Self {
            params,
            dims,
            sigma2,
            emb,
            edge_in,
            node_agg,
            edge_out,
            edge_dyn,
            node_dyn,
            input_scale: Vec::new(),
        })
    }

    /// Fit per-series input scales from a dataset (1/std, clamped away from
    /// degenerate values). Call once before training.
    pub fn fit_input_scale(&mut self, dataset: &[TimeSeriesSample]) {
        let n = dataset[0].n_series();
        let mut scale = vec![0.0; n];
        let count = dataset.iter().map(|s| s.t_steps()).sum::<usize>() as f64;
        for i in 0..n {
            let var: f64 = dataset
                .iter()
                .flat_map(|s| s.values.iter().map(move |r| r[i] * r[i]))
                .sum::<f64>()
                / count;
            scale[i] = 1.0 / var.sqrt().clamp(1e-3, 1e3);
        }
        self.input_scale = scale;
    }

    fn scale_of(&self, i: usize) -> f64 {
        self.input_scale.get(i).copied().unwrap_or(1.0)
    }

    /// Per-pair conditional lag statistics from the sample's lag-1 vector
    /// autoregression: [β_ij, β_ji, corr0, |β_ij|, |β_ji|], where β_ij is the
    /// coefficient of series i in the regression of series j's next value on
    /// the full current state. Conditioning explains away indirect paths.
    pub fn pair_stats(stats: &SampleStats, i: usize, j: usize) -> [f64; N_PAIR_STATS] {
        let b_ij = stats.beta[i][j];
        let b_ji = stats.beta[j][i];
        [b_ij, b_ji, stats.corr0[i][j], b_ij.abs(), b_ji.abs()]
    }

    fn check_sample(&self, sample: &TimeSeriesSample) -> Result<()> {
        if sample.n_series() < 2 {
            return Err(Error::InvalidArg(format!(
                "need at least 2 series, got {}",
                sample.n_series()
            )));
        }
        if sample.t_steps() != self.dims.t_steps {
            return Err(Error::DimMismatch {
                context: "encode_graph",
                left: format!("model t_steps {}", self.dims.t_steps),
                right: format!("sample t_steps {}", sample.t_steps()),
            });
        }
        if sample.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series sample".into()));
        }
        Ok(())
    }

    /// Pure encoder pass: finite per-pair logits, diagonal masked to no-edge.
    pub fn encode_graph(&self, sample: &TimeSeriesSample) -> Result<EdgeLogits> {
        self.check_sample(sample)?;
        let n = sample.n_series();
        let e = self.dims.n_edge_types;
        let stats = SampleStats::compute(sample);

        let embeddings: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let si = self.scale_of(i);
                let x: Vec<f64> = sample.values.iter().map(|r| r[i] * si).collect();
                self.emb.eval(&self.params, &x)
            })
            .collect::<Result<_>>()?;

        // first message round
        let mut messages = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let feats = Self::pair_stats(&stats, i, j);
                    let mut input = embeddings[i].clone();
                    input.extend_from_slice(&embeddings[j]);
                    input.extend_from_slice(&feats);
                    messages[i][j] = self.edge_in.eval(&self.params, &input)?;
                }
            }
        }
        // node update on mean incoming message
        let mut updated = Vec::with_capacity(n);
        for j in 0..n {
            let mut agg = vec![0.0; self.dims.hidden];
            for (i, row) in messages.iter().enumerate() {
                if i != j {
                    for (a, m) in agg.iter_mut().zip(&row[j]) {
                        *a += m;
                    }
                }
            }
            agg.iter_mut().for_each(|a| *a /= (n - 1) as f64);
            updated.push(self.node_agg.eval(&self.params, &agg)?);
        }
        // second edge round → logits
        let mut data = vec![0.0; n * n * e];
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * e;
                if i == j {
                    data[base] = DIAG_MASK_LOGIT;
                    for k in 1..e {
                        data[base + k] = -DIAG_MASK_LOGIT;
                    }
                    continue;
                }
                let feats = Self::pair_stats(&stats, i, j);
                let mut input = updated[i].clone();
                input.extend_from_slice(&updated[j]);
                input.extend_from_slice(&feats);
                let logits = self.edge_out.eval(&self.params, &input)?;
                data[base..base + e].copy_from_slice(&logits);
            }
        }
        Ok(EdgeLogits { n, n_edge_types: e, data })
    }

    /// Tape encoder pass for training; returns one logits tensor per ordered
    /// pair (i ≠ j), in row-major pair order.
    pub fn encode_graph_tape(
        &self,
        tape: &mut Tape,
        sample: &TimeSeriesSample,
    ) -> Result<Vec<((usize, usize), TensorId)>> {
        self.check_sample(sample)?;
        let n = sample.n_series();
        let stats = SampleStats::compute(sample);
        let mut embeddings = Vec::with_capacity(n);
        for i in 0..n {
            let si = self.scale_of(i);
            let x: Vec<f64> = sample.values.iter().map(|r| r[i] * si).collect();
            let xt = tape.leaf(&x);
            embeddings.push(self.emb.forward(tape, &self.params, xt)?);
        }
        let mut messages: Vec<Vec<Option<TensorId>>> = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let feats = Self::pair_stats(&stats, i, j);
                    let pair = tape.concat(embeddings[i], embeddings[j])?;
                    let st = tape.leaf(&feats);
                    let input = tape.concat(pair, st)?;
                    messages[i][j] = Some(self.edge_in.forward(tape, &self.params, input)?);
                }
            }
        }
        let mut updated = Vec::with_capacity(n);
        for j in 0..n {
            let mut agg: Option<TensorId> = None;
            for (i, row) in messages.iter().enumerate() {
                if i != j {
                    let m = row[j].unwrap();
                    agg = Some(match agg {
                        None => m,
                        Some(a) => tape.add(a, m)?,
                    });
                }
            }
            let mean = tape.scale(agg.unwrap(), 1.0 / (n - 1) as f64);
            updated.push(self.node_agg.forward(tape, &self.params, mean)?);
        }
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let feats = Self::pair_stats(&stats, i, j);
                    let pair = tape.concat(updated[i], updated[j])?;
                    let st = tape.leaf(&feats);
                    let input = tape.concat(pair, st)?;
                    out.push(((i, j), self.edge_out.forward(tape, &self.params, input)?));
                }
            }
        }
        Ok(out)
    }

    /// One decoder step: μ_j = o_j + f_v(Σ_{i≠j} Σ_{e>0} z_ij,e·f_e([o_i, o_j])).
    ///
    /// `edges[(i,j)]` holds the per-type weights for pair (i, j), rows
    /// normalized; hard one-hot vectors are the special case.
    pub fn decode_step(&self, observation: &[f64], edges: &EdgeWeights) -> Result<Vec<f64>> {
        let n = observation.len();
        if edges.n != n {
            return Err(Error::DimMismatch {
                context: "decode_step",
                left: format!("edges n {}", edges.n),
                right: format!("observation len {n}"),
            });
        }
        let hd = self.dims.decoder_hidden;
        let mut mu = Vec::with_capacity(n);
        for j in 0..n {
            let mut agg = vec![0.0; hd];
            for i in 0..n {
                if i == j {
                    continue;
                }
                let w = edges.at(i, j);
                for (e, net) in self.edge_dyn.iter().enumerate() {
                    let z = w[e + 1];
                    if z == 0.0 {
                        continue;
                    }
                    let msg = net.eval(
                        &self.params,
                        &[observation[i] * self.scale_of(i), observation[j] * self.scale_of(j)],
                    )?;
                    for (a, m) in agg.iter_mut().zip(&msg) {
                        *a += z * m;
                    }
                }
            }
            let delta = self.node_dyn.eval(&self.params, &agg)?;
            mu.push(observation[j] + delta[0]);
        }
        Ok(mu)
    }

    /// Batched tape decode over all transitions of one sample. `edge_weights`
    /// are tape tensors of per-pair type weights (e.g. relaxed samples).
    /// Returns the total Gaussian log-likelihood Σ_t log N(o^{t+1}; μ, σ²).
    pub fn decode_loglik_tape(
        &self,
        tape: &mut Tape,
        sample: &TimeSeriesSample,
        edge_weights: &[((usize, usize), TensorId)],
        sigma2: f64,
    ) -> Result<TensorId> {
        let n = sample.n_series();
        let t = sample.t_steps();
        let cols = t - 1;
        // per-series row vectors of o^t and o^{t+1}
        let mut prev_rows = Vec::with_capacity(n);
        let mut prev_scaled = Vec::with_capacity(n);
        let mut next_rows = Vec::with_capacity(n);
        for i in 0..n {
            let xs: Vec<f64> = sample.values.iter().map(|r| r[i]).collect();
            let si = self.scale_of(i);
            let scaled: Vec<f64> = xs[..cols].iter().map(|v| v * si).collect();
            prev_rows.push(tape.leaf_mat(xs[..cols].to_vec(), 1, cols)?);
            prev_scaled.push(tape.leaf_mat(scaled, 1, cols)?);
            next_rows.push(tape.leaf_mat(xs[1..].to_vec(), 1, cols)?);
        }
        let weight_of = |i: usize, j: usize| -> TensorId {
            edge_weights
                .iter()
                .find(|((a, b), _)| *a == i && *b == j)
                .map(|(_, id)| *id)
                .expect("edge weight present for every ordered pair")
        };
        let mut sq_err_total: Option<TensorId> = None;
        for j in 0..n {
            let mut agg: Option<TensorId> = None;
            for i in 0..n {
                if i == j {
                    continue;
                }
                let w = weight_of(i, j);
                let pair_in = tape.concat(prev_scaled[i], prev_scaled[j])?;
                for (e, net) in self.edge_dyn.iter().enumerate() {
                    let msg = net.forward(tape, &self.params, pair_in)?;
                    let z = tape.gather(w, e + 1)?;
                    let weighted = tape.mul_scalar(msg, z)?;
                    agg = Some(match agg {
                        None => weighted,
                        Some(a) => tape.add(a, weighted)?,
                    });
                }
            }
            let agg = agg.expect("n ≥ 2 gives every node at least one incoming pair");
            let delta = self.node_dyn.forward(tape, &self.params, agg)?;
            let mu = tape.add(delta, prev_rows[j])?;
            let diff = tape.sub(mu, next_rows[j])?;
            let sq = tape.mul(diff, diff)?;
            let s = tape.sum(sq);
            sq_err_total = Some(match sq_err_total {
                None => s,
                Some(acc) => tape.add(acc, s)?,
            });
        }
        let sq_err = sq_err_total.unwrap();
        let n_terms = (n * cols) as f64;
        let const_term = -0.5 * n_terms * (2.0 * std::f64::consts::PI * sigma2).ln();
        Ok(tape.scale_add(sq_err, -0.5 / sigma2, const_term))
    }
}

impl DiscoveryModel {
    /// Batched tape decode: samples stacked along columns, each with its own
    /// relaxed edge weights. Returns the summed Gaussian log-likelihood.
    pub fn decode_loglik_tape_batch(
        &self,
        tape: &mut Tape,
        samples: &[&TimeSeriesSample],
        edge_weights: &[Vec<((usize, usize), TensorId)>],
        sigma2: f64,
    ) -> Result<TensorId> {
        let n = samples[0].n_series();
        let t = samples[0].t_steps();
        let cols = t - 1;
        let total_cols = cols * samples.len();
        let mut prev_rows = Vec::with_capacity(n);
        let mut prev_scaled = Vec::with_capacity(n);
        let mut next_rows = Vec::with_capacity(n);
        for i in 0..n {
            let si = self.scale_of(i);
            let mut prev = Vec::with_capacity(total_cols);
            let mut scaled = Vec::with_capacity(total_cols);
            let mut next = Vec::with_capacity(total_cols);
            for sample in samples {
                for r in 0..cols {
                    let v = sample.values[r][i];
                    prev.push(v);
                    scaled.push(v * si);
                    next.push(sample.values[r + 1][i]);
                }
            }
            prev_rows.push(tape.leaf_mat(prev, 1, total_cols)?);
            prev_scaled.push(tape.leaf_mat(scaled, 1, total_cols)?);
            next_rows.push(tape.leaf_mat(next, 1, total_cols)?);
        }
        let ones_seg = vec![1.0; cols];
        // per (pair, type): a [1 × total_cols] weight row stitched from each
        // sample's relaxed z entry
        let weight_row = |tape: &mut Tape, i: usize, j: usize, e: usize| -> Result<TensorId> {
            let mut row: Option<TensorId> = None;
            for per_sample in edge_weights {
                let z = per_sample
                    .iter()
                    .find(|((a, b), _)| *a == i && *b == j)
                    .map(|(_, id)| *id)
                    .expect("edge weight present for every ordered pair");
                let ze = tape.gather(z, e)?;
                let seg_ones = tape.leaf_mat(ones_seg.clone(), 1, cols)?;
                let seg = tape.mul_scalar(seg_ones, ze)?;
                row = Some(match row {
                    None => seg,
                    Some(acc) => tape.concat_row(acc, seg)?,
                });
            }
            Ok(row.unwrap())
        };
        let mut sq_err_total: Option<TensorId> = None;
        for j in 0..n {
            let mut agg: Option<TensorId> = None;
            for i in 0..n {
                if i == j {
                    continue;
                }
                let pair_in = tape.concat(prev_scaled[i], prev_scaled[j])?;
                for (e, net) in self.edge_dyn.iter().enumerate() {
                    let msg = net.forward(tape, &self.params, pair_in)?;
                    let row = weight_row(tape, i, j, e + 1)?;
                    let weighted = tape.mul_row_broadcast(msg, row)?;
                    agg = Some(match agg {
                        None => weighted,
                        Some(a) => tape.add(a, weighted)?,
                    });
                }
            }
            let agg = agg.expect("n ≥ 2 gives every node at least one incoming pair");
            let delta = self.node_dyn.forward(tape, &self.params, agg)?;
            let mu = tape.add(delta, prev_rows[j])?;
            let diff = tape.sub(mu, next_rows[j])?;
            let sq = tape.mul(diff, diff)?;
            let s = tape.sum(sq);
            sq_err_total = Some(match sq_err_total {
                None => s,
                Some(acc) => tape.add(acc, s)?,
            });
        }
        let sq_err = sq_err_total.unwrap();
        let n_terms = (n * total_cols) as f64;
        let const_term = -0.5 * n_terms * (2.0 * std::f64::consts::PI * sigma2).ln();
        Ok(tape.scale_add(sq_err, -0.5 / sigma2, const_term))
    }
}

/// Per-pair edge-type weights (posterior probabilities, relaxed samples, or
/// hard one-hots), diagonal implicitly type 0.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    pub n: usize,
    pub n_edge_types: usize,
    pub data: Vec<f64>,
}

impl EdgeWeights {
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.n + j) * self.n_edge_types;
        &self.data[base..base + self.n_edge_types]
    }

    pub fn no_edges(n: usize, n_edge_types: usize) -> Self {
        let mut data = vec![0.0; n * n * n_edge_types];
        for pair in 0..n * n {
            data[pair * n_edge_types] = 1.0;
        }
        Self { n, n_edge_types, data }
    }

    pub fn set(&mut self, i: usize, j: usize, weights: &[f64]) {
        let base = (i * self.n + j) * self.n_edge_types;
        self.data[base..base + self.n_edge_types].copy_from_slice(weights);
    }
}

/// Concrete (Gumbel-softmax) relaxation of one pair's edge-type choice.
pub fn sample_edges(logits: &[f64], temperature: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if temperature <= 0.0 {
        return Err(Error::InvalidArg(format!("temperature must be positive, got {temperature}")));
    }
    let noisy: Vec<f64> = logits
        .iter()
        .map(|&l| {
            let u: f64 = rng.random_range(1e-12..1.0);
            l - (-(u.ln())).ln()
        })
        .collect();
    softmax(&noisy, temperature)
}

/// Per-sample sufficient statistics for the encoder: lag-1 VAR coefficients
/// (ridge-regularized least squares of each next value on the full current
/// state) and contemporaneous correlations.
#[derive(Debug, Clone)]
pub struct SampleStats {
    /// beta[i][j]: weight of series i in the regression of series j.
    pub beta: Vec<Vec<f64>>,
    pub corr0: Vec<Vec<f64>>,
}

impl SampleStats {
    pub fn compute(sample: &TimeSeriesSample) -> Self {
        let n = sample.n_series();
        let t = sample.t_steps();
        let rows = t - 1;
        // Gram matrix X'X (+ ridge) and X'y for every target at once
        let mut gram = vec![vec![0.0; n]; n];
        let mut xty = vec![vec![0.0; n]; n]; // [target j][feature i]
        for r in 0..rows {
            let x = &sample.values[r];
            let y = &sample.values[r + 1];
            for a in 0..n {
                for b in 0..n {
                    gram[a][b] += x[a] * x[b];
                }
                for j in 0..n {
                    xty[j][a] += x[a] * y[j];
                }
            }
        }
        let ridge = 1e-6 * rows as f64;
        for (a, row) in gram.iter_mut().enumerate() {
            row[a] += ridge;
        }
        let mut beta = vec![vec![0.0; n]; n];
        for j in 0..n {
            let coef = solve_linear(&gram, &xty[j]);
            for i in 0..n {
                beta[i][j] = coef[i];
            }
        }
        let mut corr0 = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let xs: Vec<f64> = sample.values.iter().map(|r| r[i]).collect();
                let ys: Vec<f64> = sample.values.iter().map(|r| r[j]).collect();
                corr0[i][j] = corr(&xs, &ys);
            }
        }
        Self { beta, corr0 }
    }
}

/// Gaussian elimination with partial pivoting; a is symmetric positive
/// definite here (ridge-regularized Gram matrix).
fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|row| row.clone()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = m[col][col];
        if diag.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..n {
            let factor = m[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = if m[row][row].abs() < 1e-300 { 0.0 } else { acc / m[row][row] };
    }
    x
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn corr(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    let denom = (dx * dy).sqrt();
    if denom < 1e-12 {
        0.0
    } else {
        num / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scm, generate_timeseries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_sample(seed: u64, n: usize, t: usize) -> TimeSeriesSample {
        let scm = generate_scm(n, 0.5, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_timeseries(&scm, 1, t, &mut rng).unwrap().remove(0)
    }

    #[test]
    fn untrained_model_posterior_is_uniform_off_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dims = ModelDims { t_steps: 30, ..Default::default() };
        let model = DiscoveryModel::new(dims, 0.1, &mut rng).unwrap();
        let sample = toy_sample(1, 4, 30);
        let logits = model.encode_graph(&sample).unwrap();
        let post = logits.posterior().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let base = (i * 4 + j) * 2;
                if i == j {
                    assert!(post[base] > 1.0 - 1e-9);
                } else {
                    assert!((post[base] - 0.5).abs() < 1e-12, "pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn encoder_rejects_single_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dims = ModelDims { t_steps: 10, ..Default::default() };
        let model = DiscoveryModel::new(dims, 0.1, &mut rng).unwrap();
        let sample = TimeSeriesSample { id: 0, values: vec![vec![0.0]; 10] };
        assert!(model.encode_graph(&sample).is_err());
    }

    #[test]
    fn encoder_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = ModelDims { t_steps: 40, ..Default::default() };
        let mut model = DiscoveryModel::new(dims, 0.1, &mut rng).unwrap();
        // randomize the output head so logits are informative
        randomize_output(&mut model, &mut rng);
        let sample = toy_sample(3, 4, 40);
        let perm = [2usize, 0, 3, 1];
        let permuted = TimeSeriesSample {
            id: 0,
            values: sample.values.iter().map(|row| perm.iter().map(|&p| row[p]).collect()).collect(),
        };
        let base = model.encode_graph(&sample).unwrap();
        let permed = model.encode_graph(&permuted).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    // series a of `permuted` is series perm[a] of `sample`
                    for e in 0..2 {
                        let lhs = permed.at(a, b)[e];
                        let rhs = base.at(perm[a], perm[b])[e];
                        assert!((lhs - rhs).abs() < 1e-9, "({a},{b},{e}): {lhs} vs {rhs}");
                    }
                }
            }
        }
    }

    fn randomize_output(model: &mut DiscoveryModel, rng: &mut impl Rng) {
        let last = model.edge_out.layers.last().unwrap();
        let n = model.params.get(last.weights).len();
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        model.params.get_mut(last.weights).set_values(&vals).unwrap();
    }

    #[test]
    fn relaxed_samples_are_simplex_and_sharpen_with_temperature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = sample_edges(&[10.0, 0.0], 1e-6, &mut rng).unwrap();
        assert!(z[0] > 1.0 - 1e-9);
        for _ in 0..100 {
            let logits = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let z = sample_edges(&logits, 1.0, &mut rng).unwrap();
            let sum: f64 = z.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn relaxed_sampling_frequency_tracks_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let logits = [0.7, -0.4, 0.1];
        let expect = softmax(&logits, 1.0).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let z = sample_edges(&logits, 1.0, &mut rng).unwrap();
            let arg = z.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            counts[arg] += 1;
        }
        for (c, e) in counts.iter().zip(&expect) {
            let freq = *c as f64 / n as f64;
            assert!((freq - e).abs() < 0.02, "freq {freq} vs {e}");
        }
    }

    #[test]
    fn edge_free_decode_is_identity_at_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = ModelDims { t_steps: 10, ..Default::default() };
        let model = DiscoveryModel::new(dims, 0.1, &mut rng).unwrap();
        let obs = [0.3, -0.8, 0.5];
        let edges = EdgeWeights::no_edges(3, 2);
        let mu = model.decode_step(&obs, &edges).unwrap();
        for (m, o) in mu.iter().zip(&obs) {
            assert_eq!(m, o);
        }
    }

    #[test]
    fn active_edge_only_touches_its_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dims = ModelDims { t_steps: 10, ..Default::default() };
        let mut model = DiscoveryModel::new(dims, 0.1, &mut rng).unwrap();
        // give the residual head nonzero weights so messages do something
        let last = model.node_dyn.layers.last().unwrap();
        let n = model.params.get(last.weights).len();
        model
            .params
            .get_mut(last.weights)
            .set_values(&(0..n).map(|k| 0.1 + 0.01 * k as f64).collect::<Vec<_>>())
            .unwrap();
        let obs = [0.3, -0.8, 0.5];
        let mut edges = EdgeWeights::no_edges(3, 2);
        edges.set(0, 1, &[0.0, 1.0]);
        let mu = model.decode_step(&obs, &edges).unwrap();
        assert_eq!(mu[0], obs[0]);
        assert_ne!(mu[1], obs[1]);
        assert_eq!(mu[2], obs[2]);
    }
}
