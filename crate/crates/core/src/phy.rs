//! Geometric wideband mmWave channel, ULA steering vectors, the oversampled
//! beam codebook and exhaustive beam training.
//!
//! The receive array is a horizontal ULA whose broadside faces the sky.
//! Azimuth is measured from the array axis and elevation from the horizontal
//! plane, so the per-element phase progression depends only on the direction
//! cosine `cos(azimuth) * cos(elevation)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhyError {
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error("path delay {delay:e} s exceeds cyclic prefix span {span:e} s")]
    CyclicPrefixViolation { delay: f64, span: f64 },
    #[error("dimension mismatch: channel has {channel} antennas, codebook {codebook}")]
    DimensionMismatch { channel: usize, codebook: usize },
}

pub type Result<T> = std::result::Result<T, PhyError>;

/// One propagation path: complex gain (path loss included), excess delay and
/// angles of arrival at the base-station array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    pub delay: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub num_subcarriers: usize,
    pub cyclic_prefix_len: usize,
    pub sample_time: f64,
    pub noise_variance: f64,
    pub symbol_power: f64,
    /// Constant factor applied to every averaged beam power. It never
    /// changes which beam wins.
    pub snr_scale: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        let noise_variance = 1e-13;
        let symbol_power = 1.0;
        Self {
            num_subcarriers: 64,
            cyclic_prefix_len: 16,
            sample_time: 5e-9,
            noise_variance,
            symbol_power,
            snr_scale: symbol_power / noise_variance,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.num_subcarriers >= 1
            && self.cyclic_prefix_len >= 1
            && self.cyclic_prefix_len <= self.num_subcarriers
            && self.sample_time > 0.0
            && self.noise_variance >= 0.0
            && self.symbol_power > 0.0
            && self.snr_scale > 0.0
            && self.snr_scale.is_finite();
        if ok {
            Ok(())
        } else {
            Err(PhyError::Rejected(format!("invalid OFDM configuration {self:?}")))
        }
    }

    pub fn max_delay(&self) -> f64 {
        self.cyclic_prefix_len as f64 * self.sample_time
    }
}

/// Uniform linear array geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UlaArray {
    pub num_antennas: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
}

impl Default for UlaArray {
    fn default() -> Self {
        Self {
            num_antennas: 16,
            element_spacing: 0.5,
        }
    }
}

/// Per-subcarrier channel vectors `h_k`, each of length M.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub per_subcarrier: Vec<Vec<Complex64>>,
    pub timestamp_index: i64,
}

impl ChannelState {
    pub fn num_antennas(&self) -> usize {
        self.per_subcarrier.first().map_or(0, Vec::len)
    }

    /// Single-subcarrier channel from an explicit vector.
    pub fn flat(h: Vec<Complex64>) -> Self {
        Self {
            per_subcarrier: vec![h],
            timestamp_index: 0,
        }
    }

    pub fn energy(&self) -> f64 {
        self.per_subcarrier
            .iter()
            .flat_map(|h| h.iter())
            .map(|v| v.norm_sqr())
            .sum()
    }
}

/// Steering vector for a direction cosine `u` along the array axis.
pub fn steering_from_cosine(u: f64, num_antennas: usize, spacing: f64) -> Vec<Complex64> {
    (0..num_antennas)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * spacing * m as f64 * u))
        .collect()
}

/// `a(θ, φ)_m = exp(j 2π s m cos θ cos φ)`, m = 0..M-1.
pub fn array_response(
    azimuth: f64,
    elevation: f64,
    num_antennas: usize,
    element_spacing: f64,
) -> Result<Vec<Complex64>> {
    if !azimuth.is_finite() || !elevation.is_finite() {
        return Err(PhyError::Rejected("non-finite angle".into()));
    }
    if num_antennas == 0 || element_spacing <= 0.0 || !element_spacing.is_finite() {
        return Err(PhyError::Rejected("array needs M >= 1 and spacing > 0".into()));
    }
    Ok(steering_from_cosine(
        azimuth.cos() * elevation.cos(),
        num_antennas,
        element_spacing,
    ))
}

/// Normalized sinc pulse, `p(0) = 1`, zero at every other multiple of `ts`.
pub fn sinc_pulse(t: f64, ts: f64) -> f64 {
    let x = t / ts;
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Delay-domain taps `Σ_ℓ α_ℓ p(d T_S - τ_ℓ) a(θ_ℓ, φ_ℓ)` for d = 0..D-1.
pub fn channel_taps(
    paths: &[PathComponent],
    cfg: &OfdmConfig,
    array: &UlaArray,
) -> Result<Vec<Vec<Complex64>>> {
    cfg.validate()?;
    let m = array.num_antennas;
    let mut taps = vec![vec![Complex64::new(0.0, 0.0); m]; cfg.cyclic_prefix_len];
    for path in paths {
        if !(path.gain.re.is_finite() && path.gain.im.is_finite()) {
            return Err(PhyError::Rejected("non-finite path gain".into()));
        }
        if !(path.delay >= 0.0) {
            return Err(PhyError::Rejected("negative path delay".into()));
        }
        if path.delay >= cfg.max_delay() {
            return Err(PhyError::CyclicPrefixViolation {
                delay: path.delay,
                span: cfg.max_delay(),
            });
        }
        let a = array_response(path.azimuth, path.elevation, m, array.element_spacing)?;
        for (d, tap) in taps.iter_mut().enumerate() {
            let p = sinc_pulse(d as f64 * cfg.sample_time - path.delay, cfg.sample_time);
            let coef = path.gain * p;
            for (t, ai) in tap.iter_mut().zip(&a) {
                *t += coef * ai;
            }
        }
    }
    Ok(taps)
}

/// `h_k = Σ_d Σ_ℓ α_ℓ e^{-j2πkd/K} p(d T_S - τ_ℓ) a(θ_ℓ, φ_ℓ)`.
pub fn build_channel(
    paths: &[PathComponent],
    cfg: &OfdmConfig,
    array: &UlaArray,
) -> Result<ChannelState> {
    let taps = channel_taps(paths, cfg, array)?;
    let k_total = cfg.num_subcarriers;
    let per_subcarrier = (0..k_total)
        .map(|k| {
            let mut h = vec![Complex64::new(0.0, 0.0); array.num_antennas];
            for (d, tap) in taps.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, -2.0 * PI * (k * d) as f64 / k_total as f64);
                for (hi, ti) in h.iter_mut().zip(tap) {
                    *hi += phase * ti;
                }
            }
            h
        })
        .collect();
    Ok(ChannelState {
        per_subcarrier,
        timestamp_index: 0,
    })
}

/// Oversampled conjugate-steering codebook on a uniform grid of direction
/// cosines `u_q = -1 + 2q/Q`, beams ordered by grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamCodebook {
    pub beams: Vec<Vec<Complex64>>,
    pub num_antennas: usize,
    /// Direction cosine each beam is steered to.
    pub grid: Vec<f64>,
}

impl BeamCodebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }
}

pub fn make_codebook(num_antennas: usize, num_beams: usize, spacing: f64) -> Result<BeamCodebook> {
    if num_antennas == 0 {
        return Err(PhyError::Rejected("codebook needs at least one antenna".into()));
    }
    if num_beams < num_antennas {
        return Err(PhyError::Rejected(format!(
            "under-sampled codebook ({num_beams} beams for {num_antennas} antennas)"
        )));
    }
    let norm = (num_antennas as f64).sqrt();
    let grid: Vec<f64> = (0..num_beams)
        .map(|q| -1.0 + 2.0 * q as f64 / num_beams as f64)
        .collect();
    let beams = grid
        .iter()
        .map(|&u| {
            steering_from_cosine(u, num_antennas, spacing)
                .into_iter()
                .map(|a| a.conj() / norm)
                .collect()
        })
        .collect();
    Ok(BeamCodebook {
        beams,
        num_antennas,
        grid,
    })
}

/// Received power per beam plus the winning index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerVector {
    pub powers: Vec<f64>,
    pub best_index: usize,
}

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        let best_index = optimal_beam(&powers)?;
        Ok(Self { powers, best_index })
    }

    pub fn best_power(&self) -> f64 {
        self.powers[self.best_index]
    }
}

/// Index of the maximum power; the lowest index wins exact ties.
pub fn optimal_beam(powers: &[f64]) -> Result<usize> {
    if powers.is_empty() {
        return Err(PhyError::Rejected("empty power vector".into()));
    }
    let mut best = 0;
    for (i, &p) in powers.iter().enumerate().skip(1) {
        if p > powers[best] {
            best = i;
        }
    }
    Ok(best)
}

/// `powers[q] = (1/K) Σ_k snr · |h_kᵀ f_q|²`.
pub fn beam_sweep(
    channel: &ChannelState,
    codebook: &BeamCodebook,
    cfg: &OfdmConfig,
) -> Result<PowerVector> {
    if channel.per_subcarrier.is_empty() {
        return Err(PhyError::Rejected("channel has no subcarriers".into()));
    }
    for h in &channel.per_subcarrier {
        if h.len() != codebook.num_antennas {
            return Err(PhyError::DimensionMismatch {
                channel: h.len(),
                codebook: codebook.num_antennas,
            });
        }
    }
    let k = channel.per_subcarrier.len() as f64;
    let powers = codebook
        .beams
        .iter()
        .map(|f| {
            let acc: f64 = channel
                .per_subcarrier
                .iter()
                .map(|h| {
                    h.iter()
                        .zip(f)
                        .fold(Complex64::new(0.0, 0.0), |s, (a, b)| s + a * b)
                        .norm_sqr()
                })
                .sum();
            cfg.snr_scale * acc / k
        })
        .collect();
    PowerVector::new(powers)
}

/// Keeps every other entry of a 64-beam sweep (`out[i] = in[2i]`).
pub fn downsample_power(p64: &PowerVector) -> Result<PowerVector> {
    if p64.powers.len() != 64 {
        return Err(PhyError::Rejected(format!(
            "expected a 64-entry power vector, got {}",
            p64.powers.len()
        )));
    }
    PowerVector::new(p64.powers.iter().step_by(2).copied().collect())
}
