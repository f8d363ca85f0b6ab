use tomsc_core::causal::{edge_accuracy, edge_auroc, train_discovery, DiscoveryConfig};
use tomsc_core::scenario::{generate_scm, generate_timeseries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let scm = generate_scm(5, 0.35, 7).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            if scm.adjacency[i][j] {
                println!("true edge ({i},{j}) w={:.3}", scm.weights[i][j]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dataset = generate_timeseries(&scm, 50, 100, &mut rng).unwrap();
    let config = DiscoveryConfig::default();
    let (_, graph, report) = train_discovery(&dataset, &config, &mut rng).unwrap();
    println!("report: {report:?}");
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                println!("({i},{j}) truth={} prob={:.4}", scm.adjacency[i][j], graph.edge_prob(i, j));
            }
        }
    }
    println!("acc={} auroc={}", edge_accuracy(&graph, &scm.adjacency), edge_auroc(&graph, &scm.adjacency));
}
