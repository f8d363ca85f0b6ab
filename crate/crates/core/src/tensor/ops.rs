//! Pure (non-tape) vector operations shared by metrics and policies.

use crate::error::{Error, Result};

pub(crate) fn softmax_of(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::InvalidArg(format!("temperature must be positive, got {temperature}")));
    }
    if logits.is_empty() {
        return Err(Error::InvalidArg("softmax of empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| ((v - max) / temperature).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

pub(crate) fn log_softmax_of(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::InvalidArg(format!("temperature must be positive, got {temperature}")));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log_softmax input".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logits.iter().map(|&v| (v - max) / temperature).collect();
    let lse = scaled.iter().map(|&v| v.exp()).sum::<f64>().ln();
    Ok(scaled.into_iter().map(|v| v - lse).collect())
}

/// Numerically stable softmax with temperature (max-subtraction form).
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    softmax_of(logits, temperature)
}

/// Log-probabilities of [`softmax`].
pub fn log_softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    log_softmax_of(logits, temperature)
}

const NORMALIZATION_TOL: f64 = 1e-9;

fn check_simplex(p: &[f64], context: &'static str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite(context.to_string()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { context, sum });
    }
    Ok(())
}

/// Kullback-Leibler divergence KL(p‖q) in nats.
///
/// Both inputs must be normalized within 1e-9. A zero q entry with positive
/// p mass is a hard error: silent clamping hides modeling bugs. Use
/// [`kld_smoothed`] when training-time smoothing is explicitly wanted.
pub fn kld(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch {
            context: "kld",
            left: format!("{}", p.len()),
            right: format!("{}", q.len()),
        });
    }
    check_simplex(p, "kld p")?;
    check_simplex(q, "kld q")?;
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::Support { index: i, p: pi });
        }
        acc += pi * (pi / qi).ln();
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(acc.max(0.0))
}

/// KL(p‖q) after epsilon-smoothing q: q' = (q + eps) / (1 + n·eps).
pub fn kld_smoothed(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidArg(format!("smoothing eps must be positive, got {eps}")));
    }
    let n = q.len() as f64;
    let qs: Vec<f64> = q.iter().map(|&v| (v + eps) / (1.0 + n * eps)).collect();
    kld(p, &qs)
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Cross-entropy −Σ p ln q in nats; q entries are clamped at 1e-300 to keep
/// the value finite (callers that need hard support errors use [`kld`]).
pub fn cross_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| -pi * qi.max(1e-300).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_symmetric_and_closed_form() {
        let p = softmax(&[0.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        // 1/(1+e^-1) for logits [1,0] at temperature 1
        let p = softmax(&[1.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 0.7311).abs() < 1e-4);
        assert!((p[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0], 1.0).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!(p[0] > 1.0 - 1e-12);
    }

    #[test]
    fn softmax_sums_to_one_and_shift_invariant() {
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 10.0 - 5.0
        };
        for _ in 0..200 {
            let logits: Vec<f64> = (0..7).map(|_| next()).collect();
            let temp = next().abs() + 0.1;
            let p = softmax(&logits, temp).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0));
            let shifted: Vec<f64> = logits.iter().map(|v| v + 3.7).collect();
            let p2 = softmax(&shifted, temp).unwrap();
            for (a, b) in p.iter().zip(&p2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softmax(&[f64::NAN, 0.0], 1.0).is_err());
        assert!(softmax(&[1.0, 0.0], 0.0).is_err());
        assert!(softmax(&[1.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn kld_identity_is_zero() {
        assert_eq!(kld(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    }

    #[test]
    fn kld_deterministic_vs_uniform_is_ln2() {
        let v = kld(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kld_support_violation_names_index() {
        let err = kld(&[0.5, 0.5], &[1.0, 0.0]).unwrap_err();
        match err {
            Error::Support { index, .. } => assert_eq!(index, 1),
            other => panic!("expected support error, got {other}"),
        }
    }

    #[test]
    fn kld_nonnegative_on_random_simplex_pairs() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..500 {
            let n = 2 + (next() * 6.0) as usize;
            let mut p: Vec<f64> = (0..n).map(|_| next() + 1e-3).collect();
            let mut q: Vec<f64> = (0..n).map(|_| next() + 1e-3).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|v| *v /= sp);
            q.iter_mut().for_each(|v| *v /= sq);
            let v = kld(&p, &q).unwrap();
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn kld_rejects_unnormalized() {
        assert!(kld(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn smoothed_kld_tolerates_zero_support() {
        let v = kld_smoothed(&[0.5, 0.5], &[1.0, 0.0], 1e-6).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
