use tomsc_core::causal::{train_discovery, DiscoveryConfig, SampleStats};
use tomsc_core::scenario::{generate_scm, generate_timeseries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    for seed in [8u64, 9] {
        let scm = generate_scm(5, 0.35, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dataset = generate_timeseries(&scm, 50, 100, &mut rng).unwrap();
        println!("== seed {seed}");
        for i in 0..5 {
            for j in 0..5 {
                if scm.adjacency[i][j] {
                    println!("true edge ({i},{j}) w={:+.3}", scm.weights[i][j]);
                }
            }
        }
        // average beta over samples
        let mut avg = vec![vec![0.0; 5]; 5];
        for s in &dataset {
            let st = SampleStats::compute(s);
            for i in 0..5 {
                for j in 0..5 {
                    avg[i][j] += st.beta[i][j] / 50.0;
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                if i != j && avg[i][j].abs() > 0.1 {
                    println!("  beta[{i}->{j}] = {:+.3}", avg[i][j]);
                }
            }
        }
        // per-series variance of the data
        for i in 0..5 {
            let var: f64 = dataset.iter().flat_map(|s| s.values.iter().map(move |r| r[i] * r[i])).sum::<f64>()
                / (50.0 * 100.0);
            print!(" var[{i}]={var:.3}");
        }
        println!();
        let config = DiscoveryConfig::default();
        let (_, graph, _) = train_discovery(&dataset, &config, &mut rng).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j && (scm.adjacency[i][j] || graph.edge_prob(i, j) > 0.4) {
                    println!("  post({i},{j}) truth={} prob={:.4}", scm.adjacency[i][j], graph.edge_prob(i, j));
                }
            }
        }
    }
}
