use tomsc_core::causal::{train_discovery, DiscoveryConfig};
use tomsc_core::scenario::{generate_scm, generate_timeseries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let scm = generate_scm(5, 0.35, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dataset = generate_timeseries(&scm, 10, 100, &mut rng).unwrap();
    let config = DiscoveryConfig { epochs: 10, ..Default::default() };
    let (model, _, _) = train_discovery(&dataset, &config, &mut rng).unwrap();
    for p in model.params.iter() {
        if p.name().starts_with("enc.edge_out.1") {
            let norm: f64 = p.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("{} value norm {norm:.4} first vals {:?}", p.name(), &p.values()[..p.len().min(6)]);
        }
    }
    let logits = model.encode_graph(&dataset[0]).unwrap();
    println!("logits(0,4) = {:?}", logits.at(0, 4));
    println!("logits(3,2) = {:?}", logits.at(3, 2));
    println!("logits(0,1) = {:?}", logits.at(0, 1));
}
