//! Synthetic SCM scenarios: random ground-truth DAGs, linear lag-1 time
//! series, the discrete-Gaussian receiver-action oracle, and task switching.

use crate::error::{Error, Result};
use crate::metrics::ActionDistribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Ground-truth structural causal model over N scalar series.
///
/// `adjacency[i][j]` = true means i → j: series j at t+1 depends on series i
/// at t with weight `weights[i][j]`. The graph is acyclic by construction
/// (edges only go forward in a random topological order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthScm {
    pub n_series: usize,
    pub adjacency: Vec<Vec<bool>>,
    pub weights: Vec<Vec<f64>>,
    /// AR(1) self-coefficient shared by every series.
    pub self_coeff: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl GroundTruthScm {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&e| e).count()
    }

    /// Number of ground-truth parents of variable j.
    pub fn parent_count(&self, j: usize) -> usize {
        (0..self.n_series).filter(|&i| self.adjacency[i][j]).count()
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.n_series).filter(|&i| self.adjacency[i][j]).collect()
    }

    /// Largest |eigenvalue| of the weighted adjacency, by power iteration on
    /// the absolute weights. Zero for any DAG, but kept as a guard for
    /// future self-loop extensions.
    pub fn spectral_radius(&self) -> f64 {
        let n = self.n_series;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut radius = 0.0;
        for _ in 0..60 {
            let mut next = vec![0.0; n];
            for j in 0..n {
                next[j] += self.self_coeff.abs() * v[j];
                for i in 0..n {
                    if self.adjacency[i][j] {
                        next[j] += self.weights[i][j].abs() * v[i];
                    }
                }
            }
            let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                return 0.0;
            }
            radius = norm;
            v = next.into_iter().map(|x| x / norm).collect();
        }
        radius
    }

    pub fn has_cycle(&self) -> bool {
        // Kahn's algorithm; leftovers mean a cycle.
        let n = self.n_series;
        let mut indeg: Vec<usize> = (0..n).map(|j| self.parent_count(j)).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for j in 0..n {
                if self.adjacency[u][j] {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        queue.push(j);
                    }
                }
            }
        }
        seen != n
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Draw a random DAG with the given edge density and stationary weights.
///
/// Weights are uniform on ±[0.3, 0.9]. Degenerate draws (no edges, or a
/// spectral radius ≥ 1) are rejected and retried up to 1000 times.
pub fn generate_scm(n_series: usize, edge_density: f64, seed: u64) -> Result<GroundTruthScm> {
    if n_series < 2 {
        return Err(Error::InvalidArg(format!("need at least 2 series, got {n_series}")));
    }
    if edge_density <= 0.0 || edge_density > 1.0 {
        return Err(Error::InvalidArg(format!(
            "edge density must be in (0, 1], got {edge_density}; an empty graph would make the semantic state empty"
        )));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5c3a_9d2e_71b4_f08c);
    for _attempt in 0..1000 {
        // random topological order, edges only forward along it
        let mut order: Vec<usize> = (0..n_series).collect();
        for i in (1..n_series).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut adjacency = vec![vec![false; n_series]; n_series];
        let mut weights = vec![vec![0.0; n_series]; n_series];
        for a in 0..n_series {
            for b in (a + 1)..n_series {
                if rng.random::<f64>() < edge_density {
                    let (i, j) = (order[a], order[b]);
                    adjacency[i][j] = true;
                    let mag = rng.random_range(0.3..0.9);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    weights[i][j] = sign * mag;
                }
            }
        }
        let scm = GroundTruthScm {
            n_series,
            adjacency,
            weights,
            self_coeff: DEFAULT_SELF_COEFF,
            noise_std: 0.1,
            seed,
        };
        if scm.edge_count() == 0 {
            continue;
        }
        if scm.spectral_radius() < 1.0 {
            return Ok(scm);
        }
    }
    Err(Error::InvalidArg("could not draw a stationary SCM in 1000 attempts".into()))
}

/// One multivariate sample: `values[t][i]` is series i at step t.
#[derive(Debug, Clone)]
pub struct TimeSeriesSample {
    pub id: usize,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeriesSample {
    pub fn t_steps(&self) -> usize {
        self.values.len()
    }

    pub fn n_series(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

const BURN_IN: usize = 50;

/// Default AR(1) memory of each series; keeps the residual one-step baseline
/// (predict the previous value) near-optimal for parentless variables.
pub const DEFAULT_SELF_COEFF: f64 = 0.85;

/// Simulate the autonomous linear lag-1 dynamics along the DAG edges with
/// Gaussian innovation noise; the first 50 burn-in steps are discarded.
pub fn generate_timeseries(
    scm: &GroundTruthScm,
    n_samples: usize,
    t_steps: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TimeSeriesSample>> {
    if t_steps < 2 {
        return Err(Error::InvalidArg(format!("need at least 2 steps, got {t_steps}")));
    }
    let n = scm.n_series;
    let mut samples = Vec::with_capacity(n_samples);
    for id in 0..n_samples {
        let mut state: Vec<f64> = (0..n)
            .map(|_| {
                let eps: f64 = StandardNormal.sample(rng);
                scm.noise_std * eps
            })
            .collect();
        let mut values = Vec::with_capacity(t_steps);
        for step in 0..BURN_IN + t_steps {
            let mut next = vec![0.0; n];
            for j in 0..n {
                let mut acc = scm.self_coeff * state[j];
                for i in 0..n {
                    if scm.adjacency[i][j] {
                        acc += scm.weights[i][j] * state[i];
                    }
                }
                let eps: f64 = StandardNormal.sample(rng);
                next[j] = acc + scm.noise_std * eps;
                if !next[j].is_finite() || next[j].abs() > 1e6 {
                    return Err(Error::NonFinite(format!(
                        "time series blow-up at sample {id}, step {step}, series {j}"
                    )));
                }
            }
            state = next;
            if step >= BURN_IN {
                values.push(state.clone());
            }
        }
        samples.push(TimeSeriesSample { id, values });
    }
    Ok(samples)
}

/// Receiver-action oracle: per-component truncated discrete Gaussian over
/// {0, …, |A|−1} with mean proportional to the variable's parent count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionOracle {
    pub alphabet: usize,
    /// Mean scale: component mean = alpha · parent_count.
    pub alpha: f64,
    pub sigma: f64,
    pub task_id: usize,
    /// Cyclic shift applied to action labels (task variation mode B).
    pub label_shift: usize,
}

impl ActionOracle {
    pub fn new(alphabet: usize, alpha: f64, sigma: f64) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidArg(format!("alphabet must be ≥ 2, got {alphabet}")));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidArg(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { alphabet, alpha, sigma, task_id: 0, label_shift: 0 })
    }

    /// Distribution of one action component for a variable with the given
    /// parent count.
    pub fn component_distribution(&self, parent_count: usize) -> Vec<f64> {
        let mean = self.alpha * parent_count as f64;
        let mut probs: Vec<f64> = (0..self.alphabet)
            .map(|a| {
                let shifted = ((a + self.alphabet - self.label_shift % self.alphabet)
                    % self.alphabet) as f64;
                (-((shifted - mean).powi(2)) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        probs
    }

    /// Ideal factorized action distribution for a causal state described by
    /// its per-variable parent counts.
    pub fn distribution(&self, parent_counts: &[usize]) -> ActionDistribution {
        ActionDistribution::new(
            parent_counts.iter().map(|&c| self.component_distribution(c)).collect(),
        )
    }
}

/// Deterministic task perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TaskSwitch {
    /// Scale the mean coefficient: alpha ← factor · alpha.
    ScaleAlpha { factor: f64 },
    /// Cyclically shift action labels by `shift` (negative via modulus).
    PermuteLabels { shift: i64 },
}

/// Apply a task switch, returning the perturbed oracle with an incremented
/// task id.
pub fn switch_task(oracle: &ActionOracle, mode: TaskSwitch) -> Result<ActionOracle> {
    let mut next = oracle.clone();
    match mode {
        TaskSwitch::ScaleAlpha { factor } => {
            if factor <= 0.0 || !factor.is_finite() {
                return Err(Error::InvalidArg(format!("scale factor must be positive, got {factor}")));
            }
            next.alpha *= factor;
        }
        TaskSwitch::PermuteLabels { shift } => {
            let m = oracle.alphabet as i64;
            next.label_shift = ((next.label_shift as i64 + shift).rem_euclid(m)) as usize;
        }
    }
    next.task_id += 1;
    Ok(next)
}

/// Total variation distance between two factorized oracles on the same
/// parent-count profile.
pub fn oracle_total_variation(a: &ActionOracle, b: &ActionOracle, parent_counts: &[usize]) -> f64 {
    let da = a.distribution(parent_counts);
    let db = b.distribution(parent_counts);
    let mut tv: f64 = 0.0;
    for (pa, pb) in da.components().iter().zip(db.components()) {
        let this: f64 = 0.5 * pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).sum::<f64>();
        tv = tv.max(this);
    }
    tv
}
