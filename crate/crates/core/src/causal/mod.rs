//! Causal discovery over time series: a GNN edge encoder, a message-passing
//! dynamics decoder, the variational objective, and pruning of unconnected
//! variables into the transmitted causal state.

mod model;
mod train;

pub use model::{sample_edges, DiscoveryModel, EdgeLogits, EdgeWeights, ModelDims, SampleStats};
pub use train::{elbo, elbo_tape, posterior_weights, train_discovery, DiscoveryConfig, DiscoveryReport};

use crate::error::{Error, Result};
use crate::scenario::TimeSeriesSample;
use serde::{Deserialize, Serialize};

/// Learned relation structure: per-pair edge-type posterior plus the
/// thresholded hard adjacency. Edge type 0 means "no edge"; `adjacency[i][j]`
/// true means i influences j at lag 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalGraph {
    pub n: usize,
    pub n_edge_types: usize,
    /// Row-major (i, j, e) posterior; the diagonal is forced to type 0.
    pub posterior: Vec<f64>,
    pub adjacency: Vec<Vec<bool>>,
}

impl CausalGraph {
    pub fn posterior_at(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.n + j) * self.n_edge_types;
        &self.posterior[base..base + self.n_edge_types]
    }

    /// Probability that some edge (any type > 0) links i → j.
    pub fn edge_prob(&self, i: usize, j: usize) -> f64 {
        1.0 - self.posterior_at(i, j)[0]
    }

    /// Build the hard adjacency by thresholding the no-edge posterior;
    /// ties break toward "no edge".
    pub fn threshold(n: usize, n_edge_types: usize, posterior: Vec<f64>, no_edge_cut: f64) -> Self {
        let mut adjacency = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let p_none = posterior[(i * n + j) * n_edge_types];
                    adjacency[i][j] = p_none < no_edge_cut;
                }
            }
        }
        Self { n, n_edge_types, posterior, adjacency }
    }

    /// Variables with at least one incident edge, ascending.
    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&v| {
                (0..self.n).any(|u| u != v && (self.adjacency[u][v] || self.adjacency[v][u]))
            })
            .collect()
    }

    /// Parents of j in the hard graph.
    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.adjacency[i][j]).collect()
    }

    /// Edge-list text export: one `i,j,probability` row per ordered pair.
    pub fn write_edge_list(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "src,dst,edge_prob")?;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    writeln!(f, "{i},{j},{}", self.edge_prob(i, j))?;
                }
            }
        }
        Ok(())
    }
}

/// The transmitted semantics: values and parent sets of the variables that
/// survived pruning, in fixed index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalState {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub parent_counts: Vec<usize>,
}

impl CausalState {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Prune unconnected variables: the causal state keeps exactly the variables
/// with ≥ 1 incident edge. A fully disconnected graph is a discovery failure.
pub fn extract_state(graph: &CausalGraph, observation: &[f64]) -> Result<CausalState> {
    if observation.len() != graph.n {
        return Err(Error::DimMismatch {
            context: "extract_state",
            left: format!("graph n {}", graph.n),
            right: format!("observation len {}", observation.len()),
        });
    }
    let indices = graph.retained_indices();
    if indices.is_empty() {
        return Err(Error::EmptySemanticState);
    }
    let values = indices.iter().map(|&i| observation[i]).collect();
    let parent_counts = indices.iter().map(|&i| graph.parents(i).len()).collect();
    Ok(CausalState { indices, values, parent_counts })
}

/// Fraction of ordered pairs (i ≠ j) whose hard edge decision matches the
/// ground-truth adjacency.
pub fn edge_accuracy(graph: &CausalGraph, truth: &[Vec<bool>]) -> f64 {
    let n = graph.n;
    let mut correct = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += 1;
                if graph.adjacency[i][j] == truth[i][j] {
                    correct += 1;
                }
            }
        }
    }
    correct as f64 / total as f64
}

/// Area under the ROC curve of the edge-probability scores against the
/// ground truth, via the Mann-Whitney statistic with midranks.
pub fn edge_auroc(graph: &CausalGraph, truth: &[Vec<bool>]) -> f64 {
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for i in 0..graph.n {
        for j in 0..graph.n {
            if i != j {
                scored.push((graph.edge_prob(i, j), truth[i][j]));
            }
        }
    }
    auroc(&scored)
}

/// Mann-Whitney AUROC over (score, label) pairs; 0.5 when a class is empty.
pub fn auroc(scored: &[(f64, bool)]) -> f64 {
    let n_pos = scored.iter().filter(|(_, l)| *l).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut sorted: Vec<&(f64, bool)> = scored.iter().collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut idx = 0usize;
    while idx < sorted.len() {
        let mut end = idx;
        while end + 1 < sorted.len() && sorted[end + 1].0 == sorted[idx].0 {
            end += 1;
        }
        let midrank = (idx + end) as f64 / 2.0 + 1.0;
        for item in &sorted[idx..=end] {
            if item.1 {
                rank_sum_pos += midrank;
            }
        }
        idx = end + 1;
    }
    (rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}

/// Write samples in the columnar dataset format: `sample,t,series,value`.
pub fn write_dataset_csv(path: &std::path::Path, samples: &[TimeSeriesSample]) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "sample,t,series,value")?;
    for s in samples {
        for (t, row) in s.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                writeln!(f, "{},{},{},{}", s.id, t, i, v)?;
            }
        }
    }
    Ok(())
}

/// Read the columnar dataset format back into samples.
pub fn read_dataset_csv(path: &std::path::Path) -> Result<Vec<TimeSeriesSample>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "sample,t,series,value" {
                return Err(Error::Parse { line: 1, msg: format!("unexpected header '{line}'") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 4 columns, got {}", parts.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad {what} '{s}': {e}"),
            })
        };
        rows.push((
            parse(parts[0], "sample id")? as usize,
            parse(parts[1], "time index")? as usize,
            parse(parts[2], "series index")? as usize,
            parse(parts[3], "value")?,
        ));
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty dataset".into() });
    }
    let n_samples = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let t_steps = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let n_series = rows.iter().map(|r| r.2).max().unwrap() + 1;
    let mut samples: Vec<TimeSeriesSample> = (0..n_samples)
        .map(|id| TimeSeriesSample { id, values: vec![vec![0.0; n_series]; t_steps] })
        .collect();
    for (s, t, i, v) in rows {
        samples[s].values[t][i] = v;
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scm, generate_timeseries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain_graph() -> CausalGraph {
        // 0 → 1 → 2, node 3 isolated
        let n = 4;
        let e = 2;
        let mut posterior = vec![0.0; n * n * e];
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * e;
                let edge = (i == 0 && j == 1) || (i == 1 && j == 2);
                posterior[base] = if edge { 0.1 } else { 1.0 };
                posterior[base + 1] = if edge { 0.9 } else { 0.0 };
            }
        }
        CausalGraph::threshold(n, e, posterior, 0.5)
    }

    #[test]
    fn chain_with_isolated_node_keeps_three() {
        let g = chain_graph();
        assert_eq!(g.retained_indices(), vec![0, 1, 2]);
        let state = extract_state(&g, &[10.0, 20.0, 30.0, 40.0]).unwrap();
        assert_eq!(state.dim(), 3);
        assert_eq!(state.values, vec![10.0, 20.0, 30.0]);
        assert_eq!(state.parent_counts, vec![0, 1, 1]);
    }

    #[test]
    fn complete_graph_keeps_all() {
        let n = 3;
        let e = 2;
        let mut posterior = vec![0.0; n * n * e];
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * e;
                posterior[base] = if i == j { 1.0 } else { 0.0 };
                posterior[base + 1] = if i == j { 0.0 } else { 1.0 };
            }
        }
        let g = CausalGraph::threshold(n, e, posterior, 0.5);
        assert_eq!(extract_state(&g, &[1.0, 2.0, 3.0]).unwrap().dim(), n);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let n = 3;
        let e = 2;
        let mut posterior = vec![0.0; n * n * e];
        for pair in 0..n * n {
            posterior[pair * e] = 1.0;
        }
        let g = CausalGraph::threshold(n, e, posterior, 0.5);
        assert!(matches!(extract_state(&g, &[0.0; 3]), Err(Error::EmptySemanticState)));
    }

    #[test]
    fn retained_dim_equals_non_isolated_count_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rand::Rng::random_range(&mut rng, 2..7usize);
            let e = 2;
            let mut posterior = vec![0.0; n * n * e];
            for i in 0..n {
                for j in 0..n {
                    let base = (i * n + j) * e;
                    let p_edge: f64 =
                        if i == j { 0.0 } else { rand::Rng::random::<f64>(&mut rng) };
                    posterior[base] = 1.0 - p_edge;
                    posterior[base + 1] = p_edge;
                }
            }
            let g = CausalGraph::threshold(n, e, posterior, 0.5);
            let non_isolated = (0..n)
                .filter(|&v| (0..n).any(|u| u != v && (g.adjacency[u][v] || g.adjacency[v][u])))
                .count();
            match extract_state(&g, &vec![0.0; n]) {
                Ok(state) => assert_eq!(state.dim(), non_isolated),
                Err(_) => assert_eq!(non_isolated, 0),
            }
        }
    }

    #[test]
    fn tie_breaks_toward_no_edge() {
        let posterior = vec![1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 1.0, 0.0];
        let g = CausalGraph::threshold(2, 2, posterior, 0.5);
        assert!(!g.adjacency[0][1] && !g.adjacency[1][0]);
    }

    #[test]
    fn auroc_handles_perfect_and_tied_scores() {
        assert_eq!(auroc(&[(0.9, true), (0.1, false)]), 1.0);
        assert_eq!(auroc(&[(0.5, true), (0.5, false)]), 0.5);
        assert_eq!(auroc(&[(0.1, true), (0.9, false)]), 0.0);
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let scm = generate_scm(3, 0.5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = generate_timeseries(&scm, 3, 20, &mut rng).unwrap();
        let dir = std::env::temp_dir().join("tomsc_dataset_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        write_dataset_csv(&path, &samples).unwrap();
        let back = read_dataset_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn malformed_dataset_reports_line() {
        let dir = std::env::temp_dir().join("tomsc_dataset_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "sample,t,series,value\n0,0,0,1.0\n0,0,oops\n").unwrap();
        match read_dataset_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
