//! Digital modulation, block-fading noisy channel, coherent demodulation,
//! and channel-quality (CQI) feedback.
//!
//! The channel draws one CN(0,1) fade per frame (block fading) and adds
//! CN(0, σ²) noise per symbol with σ² = Es/10^(snr/10), Es = 1. The receiver
//! equalizes with perfect CSI and makes per-symbol maximum-likelihood
//! decisions.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A finite set of unit-average-energy modulation symbols.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    /// BPSK: bit 0 → +1, bit 1 → −1.
    pub fn bpsk() -> Self {
        Self { points: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], bits_per_symbol: 1 }
    }

    /// Gray-mapped QPSK.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            points: vec![
                Complex64::new(a, a),
                Complex64::new(-a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, -a),
            ],
            bits_per_symbol: 2,
        }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Mean symbol energy; unity for the built-in constellations.
    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// A sequence of constellation symbols ready for transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFrame {
    pub symbols: Vec<Complex64>,
}

impl ChannelFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// The fade and noise level that applied to one frame.
#[derive(Debug, Clone, Copy)]
pub struct ChannelRealization {
    pub fade: Complex64,
    pub noise_variance: f64,
    pub snr_db: f64,
}

/// Channel-quality feedback: estimated instantaneous post-fading SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqiFeedback {
    pub snr_db: f64,
}

/// Fading model applied per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    /// h ~ CN(0,1), one draw per frame.
    Rayleigh,
    /// h = 1 (calibration / noiseless identity paths).
    Unit,
}

/// Channel configuration. `snr_db = f64::INFINITY` disables noise.
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    pub snr_db: f64,
    pub fading: Fading,
    /// Std-dev in dB of Gaussian error on the CQI estimate (0 = perfect).
    pub cqi_noise_db: f64,
}

impl Channel {
    pub fn new(snr_db: f64) -> Self {
        Self { snr_db, fading: Fading::Rayleigh, cqi_noise_db: 0.0 }
    }

    pub fn noiseless() -> Self {
        Self { snr_db: f64::INFINITY, fading: Fading::Unit, cqi_noise_db: 0.0 }
    }

    pub fn noise_variance(&self) -> f64 {
        if self.snr_db.is_infinite() {
            0.0
        } else {
            // Es = 1
            10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Map a bit sequence onto constellation symbols (MSB first within a symbol).
pub fn modulate(bits: &[u8], constellation: &Constellation) -> Result<ChannelFrame> {
    let bps = constellation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::DimMismatch {
            context: "modulate",
            left: format!("{} bits", bits.len()),
            right: format!("{bps} bits/symbol"),
        });
    }
    let symbols = bits
        .chunks(bps)
        .map(|chunk| {
            let mut idx = 0usize;
            for &b in chunk {
                idx = (idx << 1) | (b as usize & 1);
            }
            constellation.points()[idx]
        })
        .collect();
    Ok(ChannelFrame { symbols })
}

/// Push one frame through the channel: y_i = h·u_i + n_i.
pub fn transmit(
    frame: &ChannelFrame,
    channel: &Channel,
    rng: &mut impl Rng,
) -> (Vec<Complex64>, ChannelRealization) {
    let fade = match channel.fading {
        Fading::Unit => Complex64::new(1.0, 0.0),
        Fading::Rayleigh => {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    };
    let sigma2 = channel.noise_variance();
    let sigma_component = (sigma2 / 2.0).sqrt();
    let received = frame
        .symbols
        .iter()
        .map(|&u| {
            let noise = if sigma2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * sigma_component, im * sigma_component)
            };
            fade * u + noise
        })
        .collect();
    let realization = ChannelRealization { fade, noise_variance: sigma2, snr_db: channel.snr_db };
    (received, realization)
}

/// Coherent per-symbol maximum-likelihood demodulation (perfect CSI).
pub fn demodulate(
    received: &[Complex64],
    realization: &ChannelRealization,
    constellation: &Constellation,
) -> Vec<u8> {
    let bps = constellation.bits_per_symbol();
    let mut bits = Vec::with_capacity(received.len() * bps);
    for &y in received {
        let eq = y / realization.fade;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (idx, &p) in constellation.points().iter().enumerate() {
            let d = (eq - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        for k in (0..bps).rev() {
            bits.push(((best >> k) & 1) as u8);
        }
    }
    bits
}

/// Post-fading SNR report p = snr + 10·log10(|h|²), optionally corrupted by
/// Gaussian estimation noise.
pub fn measure_cqi(
    realization: &ChannelRealization,
    channel: &Channel,
    rng: &mut impl Rng,
) -> CqiFeedback {
    let gain = realization.fade.norm_sqr().max(1e-12);
    let mut p = realization.snr_db + 10.0 * gain.log10();
    if channel.cqi_noise_db > 0.0 {
        let e: f64 = StandardNormal.sample(rng);
        p += e * channel.cqi_noise_db;
    }
    CqiFeedback { snr_db: p }
}

/// Closed-form BPSK bit error rate over Rayleigh fading with coherent
/// detection: 0.5·(1 − sqrt(γ̄/(1+γ̄))).
pub fn rayleigh_bpsk_ber(snr_db: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return 0.0;
    }
    let g = 10f64.powf(snr_db / 10.0);
    0.5 * (1.0 - (g / (1.0 + g)).sqrt())
}
