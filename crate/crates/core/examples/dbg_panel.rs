use std::time::Instant;
use tomsc_core::causal::{edge_accuracy, edge_auroc, train_discovery, DiscoveryConfig};
use tomsc_core::scenario::{generate_scm, generate_timeseries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let start = Instant::now();
    let mut accs = Vec::new();
    let mut aurocs = Vec::new();
    for seed in 0..10u64 {
        let scm = generate_scm(5, 0.35, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dataset = generate_timeseries(&scm, 50, 100, &mut rng).unwrap();
        let config = DiscoveryConfig::default();
        let (_, graph, _) = train_discovery(&dataset, &config, &mut rng).unwrap();
        let acc = edge_accuracy(&graph, &scm.adjacency);
        let auroc = edge_auroc(&graph, &scm.adjacency);
        println!("seed {seed}: acc {acc:.3} auroc {auroc:.3} edges {}", scm.edge_count());
        accs.push(acc);
        aurocs.push(auroc);
    }
    let ma = accs.iter().sum::<f64>() / 10.0;
    let mu = aurocs.iter().sum::<f64>() / 10.0;
    println!("mean acc {ma:.3} mean auroc {mu:.3} elapsed {:?}", start.elapsed());
}
