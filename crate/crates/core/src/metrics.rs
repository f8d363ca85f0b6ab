//! Scalar semantic measures and experiment records: semantic information,
//! semantic effectiveness C_t, feedback d_t, distortion E_t, reliability,
//! received semantic information, and spectral-efficiency accounting.

pub mod toy;

use crate::error::{Error, Result};
use rand::Rng;

/// Factorized distribution over a finite action vector: one simplex per
/// action component. Components are independent by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    components: Vec<Vec<f64>>,
}

impl ActionDistribution {
    pub fn new(components: Vec<Vec<f64>>) -> Self {
        Self { components }
    }

    pub fn uniform(n_components: usize, alphabet: usize) -> Self {
        Self { components: vec![vec![1.0 / alphabet as f64; alphabet]; n_components] }
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn alphabet(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    /// Verify every component sums to one within 1e-9 and is nonnegative.
    pub fn validate(&self) -> Result<()> {
        for comp in &self.components {
            if comp.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::NonFinite("action distribution".into()));
            }
            let sum: f64 = comp.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized { context: "action distribution", sum });
            }
        }
        Ok(())
    }

    /// Probability of a concrete action vector.
    pub fn prob_of(&self, action: &[usize]) -> f64 {
        self.components.iter().zip(action).map(|(comp, &a)| comp[a]).product()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<usize> {
        self.components
            .iter()
            .map(|comp| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, &p) in comp.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                comp.len() - 1
            })
            .collect()
    }

    /// KL(self ‖ other) in nats; sums over components by independence.
    pub fn kl_from(&self, other: &ActionDistribution) -> Result<f64> {
        if self.components.len() != other.components.len() {
            return Err(Error::DimMismatch {
                context: "action kl",
                left: format!("{}", self.components.len()),
                right: format!("{}", other.components.len()),
            });
        }
        let mut acc = 0.0;
        for (p, q) in self.components.iter().zip(&other.components) {
            acc += crate::tensor::kld(p, q)?;
        }
        Ok(acc)
    }
}

/// Scalar semantic-effectiveness feedback d = 1/(1+C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticFeedback {
    pub d: f64,
    pub episode: u64,
}

/// Reliability target: distortion radius δ and outage tolerance ε.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    pub delta: f64,
    pub epsilon: f64,
}

impl ReliabilityConfig {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::InvalidArg(format!("delta must be positive, got {delta}")));
        }
        if !(0.0..1.0).contains(&epsilon) || epsilon == 0.0 {
            return Err(Error::InvalidArg(format!("epsilon must be in (0,1), got {epsilon}")));
        }
        Ok(Self { delta, epsilon })
    }
}

use serde::{Deserialize, Serialize};

/// One evaluation step's bookkeeping row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRecord {
    pub episode: u64,
    pub snr_db: f64,
    pub c_t: f64,
    pub d_t: f64,
    pub e_t: f64,
    pub s_z: f64,
    pub bits_sent: u64,
    pub channel_uses: u64,
    pub success: bool,
}

impl MetricRecord {
    pub const CSV_HEADER: &'static str =
        "episode,snr_db,c_t,d_t,e_t,s_z,bits_sent,channel_uses,success";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.snr_db,
            self.c_t,
            self.d_t,
            self.e_t,
            self.s_z,
            self.bits_sent,
            self.channel_uses,
            self.success as u8
        )
    }
}

/// Semantic information of a causal state: S(z) = KL(π(a|z) ‖ π(a)).
pub fn semantic_information(
    policy_given_z: &ActionDistribution,
    marginal: &ActionDistribution,
) -> Result<f64> {
    policy_given_z.validate()?;
    marginal.validate()?;
    policy_given_z.kl_from(marginal)
}

/// Semantic effectiveness C_t = KL(ideal ‖ induced).
///
/// The induced distribution is the caller's marginalization of the full
/// pipeline kernel (channel, decoding, state mapping, receiver policy),
/// either by enumeration or Monte Carlo.
pub fn semantic_effectiveness(
    ideal: &ActionDistribution,
    induced: &ActionDistribution,
) -> Result<f64> {
    ideal.validate()?;
    induced.validate()?;
    ideal.kl_from(induced)
}

/// Like [`semantic_effectiveness`] but with epsilon-smoothing of the induced
/// distribution, for callers that opted into soft support handling.
pub fn semantic_effectiveness_smoothed(
    ideal: &ActionDistribution,
    induced: &ActionDistribution,
    eps: f64,
) -> Result<f64> {
    ideal.validate()?;
    let mut acc = 0.0;
    for (p, q) in ideal.components().iter().zip(induced.components()) {
        acc += crate::tensor::kld_smoothed(p, q, eps)?;
    }
    Ok(acc)
}

/// Semantic feedback d = 1/(1+C), strictly decreasing in C, in (0, 1].
pub fn feedback(c_t: f64, episode: u64) -> Result<SemanticFeedback> {
    if c_t < 0.0 || !c_t.is_finite() {
        return Err(Error::InvalidArg(format!("C_t must be a nonnegative real, got {c_t}")));
    }
    Ok(SemanticFeedback { d: 1.0 / (1.0 + c_t), episode })
}

/// Quantize the feedback scalar to 8 bits on (0, 1] before it crosses the
/// (error-free) semantic plane.
pub fn quantize_feedback(d: f64) -> f64 {
    let code = (d * 255.0).round().clamp(0.0, 255.0);
    code / 255.0
}

/// Squared-Euclidean semantic distortion. States over different retained
/// index sets are aligned by embedding both in the union with zeros.
pub fn semantic_distortion(z: &[f64], z_hat: &[f64]) -> f64 {
    let n = z.len().max(z_hat.len());
    (0..n)
        .map(|i| {
            let a = z.get(i).copied().unwrap_or(0.0);
            let b = z_hat.get(i).copied().unwrap_or(0.0);
            (a - b) * (a - b)
        })
        .sum()
}

/// Distortion between states on explicit (index, value) pairs; missing
/// variables on either side are imputed as zero.
pub fn semantic_distortion_aligned(
    z_idx: &[usize],
    z_val: &[f64],
    zh_idx: &[usize],
    zh_val: &[f64],
) -> f64 {
    let max_idx = z_idx.iter().chain(zh_idx).copied().max().map_or(0, |m| m + 1);
    let mut a = vec![0.0; max_idx];
    let mut b = vec![0.0; max_idx];
    for (&i, &v) in z_idx.iter().zip(z_val) {
        a[i] = v;
    }
    for (&i, &v) in zh_idx.iter().zip(zh_val) {
        b[i] = v;
    }
    semantic_distortion(&a, &b)
}

/// Fraction of episodes with E_t < δ and whether it clears 1 − ε.
pub fn semantic_reliability(distortions: &[f64], config: &ReliabilityConfig) -> Result<(f64, bool)> {
    if distortions.is_empty() {
        return Err(Error::InvalidArg("semantic_reliability needs at least one record".into()));
    }
    let hits = distortions.iter().filter(|&&e| e < config.delta).count();
    let p = hits as f64 / distortions.len() as f64;
    Ok((p, p >= 1.0 - config.epsilon))
}

/// Simplified received semantic information over logged `(S_z, C_t, E_t)`
/// episodes: transmitted information minus the effectiveness gap, clamped at
/// zero, gated by the δ-ball similarity kernel (Z = 1 iff E_t ≤ δ), averaged.
pub fn received_semantic_information_records(records: &[(f64, f64, f64)], delta: f64) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records
        .iter()
        .map(|&(s_z, c_t, e_t)| if e_t <= delta { (s_z - c_t).max(0.0) } else { 0.0 })
        .sum::<f64>()
        / records.len() as f64
}

/// Spectral efficiency: semantic payload bits of episodes that met the
/// distortion target, divided by total channel uses (retransmissions
/// included).
pub fn spectral_efficiency(records: &[MetricRecord]) -> Result<f64> {
    let uses: u64 = records.iter().map(|r| r.channel_uses).sum();
    if uses == 0 {
        return Err(Error::InvalidArg("spectral efficiency undefined with zero channel uses".into()));
    }
    let payload: u64 = records.iter().filter(|r| r.success).map(|r| r.bits_sent).sum();
    Ok(payload as f64 / uses as f64)
}

/// Append records to a CSV file, writing the header when the file is new.
pub fn append_records_csv(path: &std::path::Path, records: &[MetricRecord]) -> Result<()> {
    use std::io::Write;
    let exists = path.exists();
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(file, "{}", MetricRecord::CSV_HEADER)?;
    }
    for r in records {
        writeln!(file, "{}", r.to_csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(probs: &[f64]) -> ActionDistribution {
        ActionDistribution::new(vec![probs.to_vec()])
    }

    #[test]
    fn semantic_information_zero_when_marginal_matches() {
        let p = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(semantic_information(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_policy_against_uniform_is_ln4() {
        let p = dist(&[1.0, 0.0, 0.0, 0.0]);
        let m = dist(&[0.25; 4]);
        let s = semantic_information(&p, &m).unwrap();
        assert!((s - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn semantic_information_nonnegative_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..300 {
            let n = rng.random_range(2..6usize);
            let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|v| *v /= sp);
            q.iter_mut().for_each(|v| *v /= sq);
            assert!(semantic_information(&dist(&p), &dist(&q)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn effectiveness_identity_and_ln2() {
        let ideal = dist(&[1.0, 0.0]);
        assert_eq!(semantic_effectiveness(&ideal, &ideal).unwrap(), 0.0);
        let induced = dist(&[0.5, 0.5]);
        let c = semantic_effectiveness(&ideal, &induced).unwrap();
        assert!((c - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn effectiveness_support_violation_errors_unless_smoothed() {
        let ideal = dist(&[0.5, 0.5]);
        let induced = dist(&[1.0, 0.0]);
        assert!(semantic_effectiveness(&ideal, &induced).is_err());
        assert!(semantic_effectiveness_smoothed(&ideal, &induced, 1e-9).unwrap() > 0.0);
    }

    #[test]
    fn feedback_formula() {
        assert_eq!(feedback(0.0, 0).unwrap().d, 1.0);
        assert_eq!(feedback(1.0, 0).unwrap().d, 0.5);
        assert_eq!(feedback(3.0, 0).unwrap().d, 0.25);
        assert!(feedback(-0.1, 0).is_err());
    }

    #[test]
    fn feedback_strictly_decreasing() {
        let mut prev = feedback(0.0, 0).unwrap().d;
        for i in 1..100 {
            let d = feedback(i as f64 * 0.2, 0).unwrap().d;
            assert!(d < prev && d > 0.0);
            prev = d;
        }
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(semantic_distortion(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(semantic_distortion(&[1.0, 0.0], &[0.0, 0.0]), 1.0);
        assert_eq!(semantic_distortion(&[1.0, 2.0], &[2.0, 4.0]), 5.0);
    }

    #[test]
    fn distortion_aligns_mismatched_supports() {
        // z on {0,1}, ẑ on {1,2}: missing vars imputed as zero
        let e = semantic_distortion_aligned(&[0, 1], &[1.0, 2.0], &[1, 2], &[2.0, 3.0]);
        assert_eq!(e, 1.0 + 0.0 + 9.0);
    }

    #[test]
    fn reliability_counts() {
        let cfg = ReliabilityConfig::new(0.5, 0.1).unwrap();
        let (p, pass) = semantic_reliability(&[0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(p, 1.0);
        assert!(pass);
        let (p, pass) = semantic_reliability(&[0.1, 0.9], &cfg).unwrap();
        assert_eq!(p, 0.5);
        assert!(!pass);
        assert!(semantic_reliability(&[], &cfg).is_err());
    }

    #[test]
    fn reliability_tracks_known_distribution() {
        // E ~ Uniform(0, 1): P(E < δ) = δ
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let es: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let cfg = ReliabilityConfig::new(0.35, 0.5).unwrap();
        let (p, _) = semantic_reliability(&es, &cfg).unwrap();
        assert!((p - 0.35).abs() < 0.02, "empirical {p}");
    }

    #[test]
    fn spectral_efficiency_accounting() {
        let rec = |success, bits, uses| MetricRecord {
            episode: 0,
            snr_db: 5.0,
            c_t: 0.0,
            d_t: 1.0,
            e_t: 0.0,
            s_z: 0.0,
            bits_sent: bits,
            channel_uses: uses,
            success,
        };
        assert_eq!(spectral_efficiency(&[rec(true, 8, 8)]).unwrap(), 1.0);
        assert_eq!(spectral_efficiency(&[rec(false, 8, 8)]).unwrap(), 0.0);
        // repetition-3 success: same payload, triple uses
        let se1 = spectral_efficiency(&[rec(true, 8, 8)]).unwrap();
        let se3 = spectral_efficiency(&[rec(true, 8, 24)]).unwrap();
        assert!((se3 - se1 / 3.0).abs() < 1e-12);
        assert!(spectral_efficiency(&[]).is_err());
    }

    #[test]
    fn spectral_efficiency_order_invariant_and_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut records: Vec<MetricRecord> = (0..100)
            .map(|i| MetricRecord {
                episode: i,
                snr_db: 5.0,
                c_t: 0.0,
                d_t: 1.0,
                e_t: 0.0,
                s_z: 0.0,
                bits_sent: rng.random_range(1..50),
                channel_uses: rng.random_range(1..100),
                success: rng.random::<bool>(),
            })
            .collect();
        let se = spectral_efficiency(&records).unwrap();
        records.reverse();
        assert_eq!(se, spectral_efficiency(&records).unwrap());

        // weighted additivity across disjoint sets
        let (a, b) = records.split_at(37);
        let (ua, ub): (u64, u64) =
            (a.iter().map(|r| r.channel_uses).sum(), b.iter().map(|r| r.channel_uses).sum());
        let combined = (spectral_efficiency(a).unwrap() * ua as f64
            + spectral_efficiency(b).unwrap() * ub as f64)
            / (ua + ub) as f64;
        assert!((combined - se).abs() < 1e-12);
    }

    #[test]
    fn received_information_collapses_correctly() {
        // lossless pipeline: kernel = 1, no effectiveness gap → average S(z)
        let recs = [(0.5, 0.0, 0.0), (1.5, 0.0, 0.0)];
        assert!((received_semantic_information_records(&recs, 0.1) - 1.0).abs() < 1e-12);
        // all outside the ball → 0
        let recs = [(0.5, 0.0, 5.0), (1.5, 0.0, 9.0)];
        assert_eq!(received_semantic_information_records(&recs, 0.1), 0.0);
        // gap eats the transmitted information
        let recs = [(0.5, 0.5, 0.0), (1.5, 2.0, 0.0)];
        assert_eq!(received_semantic_information_records(&recs, 0.1), 0.0);
    }

    #[test]
    fn feedback_quantization_is_8_bit() {
        for d in [1.0, 0.5, 0.25, 1.0 / 255.0] {
            let q = quantize_feedback(d);
            assert!((q - d).abs() <= 0.5 / 255.0 + 1e-12);
        }
        assert_eq!(quantize_feedback(1.0), 1.0);
    }

    #[test]
    fn metric_outputs_finite_on_fuzzed_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let k = rng.random_range(1..5usize);
            let z: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
            let zh: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
            let e = semantic_distortion(&z, &zh);
            assert!(e.is_finite() && e >= 0.0);
            let d = feedback(e, 0).unwrap().d;
            assert!(d.is_finite() && d > 0.0 && d <= 1.0);
        }
    }
}
