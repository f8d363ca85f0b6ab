//! Enumerable toy pipeline: a finite state alphabet, two BPSK bits per
//! message, per-bit independent Rayleigh fading, and a fixed receiver policy
//! table.
//!
//! Because every channel outcome is a bit-flip pattern with an analytic
//! probability, the induced action distribution is exactly enumerable; it
//! anchors the Monte Carlo estimator of semantic effectiveness.

use crate::channel::{self, Channel, Constellation};
use crate::error::{Error, Result};
use crate::metrics::ActionDistribution;
use crate::tensor::kld;
use rand::Rng;

/// A fully-specified toy semantic pipeline.
#[derive(Debug, Clone)]
pub struct ToyPipeline {
    /// Scalar value of each semantic state.
    pub state_values: Vec<f64>,
    /// Fixed-length codeword (bits) per state.
    pub codewords: Vec<Vec<u8>>,
    /// Receiver policy π(a|ẑ) per state, one simplex row each.
    pub policy: Vec<Vec<f64>>,
    /// Source distribution p(z).
    pub prior: Vec<f64>,
    pub snr_db: f64,
    pub delta: f64,
}

impl ToyPipeline {
    /// Three states, three actions, two BPSK bits, a mildly peaked policy.
    pub fn standard(snr_db: f64) -> Self {
        Self {
            state_values: vec![-1.0, 0.0, 1.0],
            codewords: vec![vec![0, 0], vec![0, 1], vec![1, 1]],
            policy: vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]],
            prior: vec![1.0 / 3.0; 3],
            snr_db,
            delta: 0.25,
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_values.len()
    }

    fn bits_per_message(&self) -> usize {
        self.codewords[0].len()
    }

    /// Nearest-codeword decoding by Hamming distance, ties to the lowest
    /// state index.
    pub fn decode(&self, bits: &[u8]) -> usize {
        let mut best = 0usize;
        let mut best_d = usize::MAX;
        for (idx, cw) in self.codewords.iter().enumerate() {
            let d = cw.iter().zip(bits).filter(|(a, b)| a != b).count();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }

    /// Per-bit error probability of the fading channel at the configured SNR.
    pub fn bit_error_prob(&self) -> f64 {
        channel::rayleigh_bpsk_ber(self.snr_db)
    }

    /// Exact induced action distribution for one transmitted state, by
    /// enumerating all bit-flip patterns.
    pub fn induced_enumerated(&self, z_idx: usize) -> Vec<f64> {
        let p = self.bit_error_prob();
        let n_bits = self.bits_per_message();
        let n_actions = self.policy[0].len();
        let mut induced = vec![0.0; n_actions];
        for pattern in 0..(1usize << n_bits) {
            let flips = pattern.count_ones() as i32;
            let prob = p.powi(flips) * (1.0 - p).powi(n_bits as i32 - flips);
            let mut bits = self.codewords[z_idx].clone();
            for (b, bit) in bits.iter_mut().enumerate() {
                if (pattern >> b) & 1 == 1 {
                    *bit ^= 1;
                }
            }
            let decoded = self.decode(&bits);
            for (a, pi) in self.policy[decoded].iter().enumerate() {
                induced[a] += prob * pi;
            }
        }
        induced
    }

    /// Exact semantic effectiveness for one state.
    pub fn effectiveness_enumerated(&self, z_idx: usize) -> Result<f64> {
        kld(&self.policy[z_idx], &self.induced_enumerated(z_idx))
    }

    /// Monte Carlo semantic effectiveness through the real channel module.
    ///
    /// Returns (estimate, standard error) via batch means so the estimate
    /// carries an honest uncertainty.
    pub fn effectiveness_monte_carlo(
        &self,
        z_idx: usize,
        n_samples: usize,
        n_batches: usize,
        rng: &mut impl Rng,
    ) -> Result<(f64, f64)> {
        if n_batches < 2 || n_samples < n_batches {
            return Err(Error::InvalidArg("need ≥2 batches and ≥1 sample per batch".into()));
        }
        let constellation = Constellation::bpsk();
        let ch = Channel::new(self.snr_db);
        let per_batch = n_samples / n_batches;
        let n_actions = self.policy[0].len();
        let mut batch_values = Vec::with_capacity(n_batches);
        for _ in 0..n_batches {
            let mut induced = vec![0.0; n_actions];
            for _ in 0..per_batch {
                let mut bits = Vec::with_capacity(self.bits_per_message());
                // independent fade per bit matches the enumeration's BSC view
                for &b in &self.codewords[z_idx] {
                    let frame = channel::modulate(&[b], &constellation)?;
                    let (y, real) = channel::transmit(&frame, &ch, rng);
                    bits.push(channel::demodulate(&y, &real, &constellation)[0]);
                }
                let decoded = self.decode(&bits);
                for (a, pi) in self.policy[decoded].iter().enumerate() {
                    induced[a] += pi;
                }
            }
            induced.iter_mut().for_each(|v| *v /= per_batch as f64);
            batch_values.push(kld(&self.policy[z_idx], &induced)?);
        }
        let mean = batch_values.iter().sum::<f64>() / n_batches as f64;
        let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (n_batches as f64 - 1.0);
        let stderr = (var / n_batches as f64).sqrt();
        Ok((mean, stderr))
    }

    /// Prior-weighted marginal action distribution.
    pub fn marginal_policy(&self) -> Vec<f64> {
        let n_actions = self.policy[0].len();
        let mut m = vec![0.0; n_actions];
        for (pz, row) in self.prior.iter().zip(&self.policy) {
            for (a, pi) in row.iter().enumerate() {
                m[a] += pz * pi;
            }
        }
        m
    }

    /// Semantic information of one state against the marginal.
    pub fn state_information(&self, z_idx: usize) -> Result<f64> {
        kld(&self.policy[z_idx], &self.marginal_policy())
    }

    /// δ-ball hit rate P(E(z, ẑ) ≤ δ | z) by enumeration.
    pub fn kernel_hit_rate(&self, z_idx: usize) -> f64 {
        let p = self.bit_error_prob();
        let n_bits = self.bits_per_message();
        let mut hit = 0.0;
        for pattern in 0..(1usize << n_bits) {
            let flips = pattern.count_ones() as i32;
            let prob = p.powi(flips) * (1.0 - p).powi(n_bits as i32 - flips);
            let mut bits = self.codewords[z_idx].clone();
            for (b, bit) in bits.iter_mut().enumerate() {
                if (pattern >> b) & 1 == 1 {
                    *bit ^= 1;
                }
            }
            let decoded = self.decode(&bits);
            let e_t = (self.state_values[z_idx] - self.state_values[decoded]).powi(2);
            if e_t <= self.delta {
                hit += prob;
            }
        }
        hit
    }

    /// Received semantic information (simplified Eq.-4 estimator):
    /// per state, the transmitted information minus the effectiveness gap,
    /// clamped at zero and weighted by the δ-ball hit rate, then averaged
    /// over the source prior. Exact by enumeration.
    ///
    /// A lossless pipeline recovers the average semantic information; a
    /// pipeline whose induced actions are independent of z scores zero.
    pub fn received_information_enumerated(&self) -> Result<f64> {
        let mut total = 0.0;
        for z_idx in 0..self.n_states() {
            let s_z = self.state_information(z_idx)?;
            let c_t = self.effectiveness_enumerated(z_idx)?;
            let kernel = self.kernel_hit_rate(z_idx);
            total += self.prior[z_idx] * kernel * (s_z - c_t).max(0.0);
        }
        Ok(total)
    }

    pub fn ideal(&self, z_idx: usize) -> ActionDistribution {
        ActionDistribution::new(vec![self.policy[z_idx].clone()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_pipeline_has_zero_effectiveness_gap() {
        let toy = ToyPipeline::standard(f64::INFINITY);
        for z in 0..3 {
            assert!(toy.effectiveness_enumerated(z).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_received_information_is_average_state_information() {
        let toy = ToyPipeline::standard(f64::INFINITY);
        let avg: f64 =
            (0..3).map(|z| toy.prior[z] * toy.state_information(z).unwrap()).sum();
        let got = toy.received_information_enumerated().unwrap();
        assert!((got - avg).abs() < 1e-12, "{got} vs {avg}");
    }

    #[test]
    fn received_information_grows_with_snr() {
        let low = ToyPipeline::standard(0.0).received_information_enumerated().unwrap();
        let high = ToyPipeline::standard(20.0).received_information_enumerated().unwrap();
        assert!(high > low, "high {high} low {low}");
    }

    #[test]
    fn heavy_noise_drives_received_information_toward_zero() {
        // at -30 dB the flip probability approaches 1/2 and the kernel
        // almost never triggers away from the diagonal
        let noisy = ToyPipeline::standard(-30.0).received_information_enumerated().unwrap();
        let clean = ToyPipeline::standard(f64::INFINITY).received_information_enumerated().unwrap();
        assert!(noisy < 0.25 * clean, "noisy {noisy} clean {clean}");
    }

    #[test]
    fn enumeration_matches_monte_carlo_within_three_stderr() {
        let toy = ToyPipeline::standard(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for z in 0..3 {
            let exact = toy.effectiveness_enumerated(z).unwrap();
            let (mc, stderr) = toy.effectiveness_monte_carlo(z, 100_000, 20, &mut rng).unwrap();
            assert!(
                (mc - exact).abs() <= 3.0 * stderr.max(1e-6),
                "state {z}: exact {exact}, mc {mc} ± {stderr}"
            );
        }
    }

    #[test]
    fn enumeration_agrees_with_mc_within_two_percent() {
        let toy = ToyPipeline::standard(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exact = toy.effectiveness_enumerated(0).unwrap();
        let (mc, _) = toy.effectiveness_monte_carlo(0, 100_000, 20, &mut rng).unwrap();
        assert!((mc - exact).abs() / exact.max(1e-9) < 0.02, "exact {exact} mc {mc}");
    }
}
