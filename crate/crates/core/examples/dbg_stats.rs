use tomsc_core::causal::SampleStats;
use tomsc_core::scenario::{generate_timeseries, GroundTruthScm, DEFAULT_SELF_COEFF};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 3;
    let mut adjacency = vec![vec![false; n]; n];
    let mut weights = vec![vec![0.0; n]; n];
    for k in 0..n - 1 {
        adjacency[k][k + 1] = true;
        weights[k][k + 1] = 0.9;
    }
    let scm = GroundTruthScm { n_series: n, adjacency, weights, self_coeff: DEFAULT_SELF_COEFF, noise_std: 0.1, seed: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let dataset = generate_timeseries(&scm, 3, 500, &mut rng).unwrap();
    for s in &dataset {
        let stats = SampleStats::compute(s);
        println!("sample {}", s.id);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    print!(" beta[{i}->{j}]={:+.3}", stats.beta[i][j]);
                }
            }
        }
        println!();
    }
}
