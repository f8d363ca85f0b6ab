use tomsc_core::causal::{edge_auroc, train_discovery, DiscoveryConfig};
use tomsc_core::scenario::{generate_timeseries, GroundTruthScm, DEFAULT_SELF_COEFF};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    for n in [2usize, 3] {
        let mut adjacency = vec![vec![false; n]; n];
        let mut weights = vec![vec![0.0; n]; n];
        for k in 0..n - 1 {
            adjacency[k][k + 1] = true;
            weights[k][k + 1] = 0.9;
        }
        let scm = GroundTruthScm { n_series: n, adjacency: adjacency.clone(), weights, self_coeff: DEFAULT_SELF_COEFF, noise_std: 0.1, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        let dataset = generate_timeseries(&scm, 6, 500, &mut rng).unwrap();
        let config = DiscoveryConfig::default();
        let (_, graph, _) = train_discovery(&dataset, &config, &mut rng).unwrap();
        for i in 0..n { for j in 0..n { if i != j {
            println!("n={n} ({i},{j}) truth={} prob={:.4}", adjacency[i][j], graph.edge_prob(i, j));
        }}}
        println!("n={n} auroc {}", edge_auroc(&graph, &adjacency));
    }
}
