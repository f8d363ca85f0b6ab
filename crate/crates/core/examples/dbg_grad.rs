use tomsc_core::causal::{elbo_tape, DiscoveryConfig, DiscoveryModel, ModelDims};
use tomsc_core::scenario::{generate_scm, generate_timeseries};
use tomsc_core::tensor::Tape;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let scm = generate_scm(5, 0.35, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dataset = generate_timeseries(&scm, 2, 100, &mut rng).unwrap();
    for e_types in [2usize, 3] {
        let config = DiscoveryConfig { n_edge_types: e_types, ..Default::default() };
        let dims = ModelDims { t_steps: 100, hidden: 24, decoder_hidden: 16, n_edge_types: e_types };
        let mut model = DiscoveryModel::new(dims, config.sigma2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let prior = config.prior();
        let gumbel: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..e_types).map(|_| {
                let u: f64 = rng.random_range(1e-12..1.0);
                -(-(u.ln())).ln()
            }).collect())
            .collect();
        model.params.zero_grad();
        let mut tape = Tape::new();
        let v = elbo_tape(&model, &mut tape, &dataset[0], 1.0, &gumbel, &prior).unwrap();
        let loss = tape.scale(v, -1.0);
        tape.backward(loss, &mut model.params).unwrap();
        for p in model.params.iter() {
            if p.name().starts_with("enc.edge_out") {
                let gnorm: f64 = p.grad().iter().map(|g| g * g).sum::<f64>().sqrt();
                println!("E={e_types} {} grad norm {gnorm:.6}", p.name());
            }
        }
    }
}
