//! Proportional-diversity block-Rayleigh fading.
//!
//! A codeword of `k/R_C` channel uses spans `k/(R_C·l_f)` fades of `l_f`
//! symbols each. Every fade sees an independent SNR `γ ~ Exponential(1/P)`
//! (mean `P`); a trailing partial fade contributes with weight equal to the
//! fractional part of the fade count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::special::{alpha, beta, QuadratureSettings};

/// Relative slack applied when testing rate bounds and integrality of ratios
/// that are computed in floating point.
pub(crate) const RATIO_SLACK: f64 = 1e-9;

/// The random stream used by every sampler in the crate.
pub type Stream = ChaCha8Rng;

/// Builds the stream for `(seed, point, block)`. Distinct triples give
/// independent ChaCha streams, so work split across threads by `point` and
/// `block` reproduces a serial run exactly.
pub fn derive_stream(seed: u64, point: u64, block: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(b"pd-fade\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

/// Converts a power in dB to a linear SNR.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Fixed inputs of the rate-allocation problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Message packets.
    pub m: u64,
    /// Packets the erasure decoder needs (`m_hat >= m`).
    pub m_hat: u64,
    /// Nats of information per packet.
    pub k: f64,
    /// Fade length in channel uses.
    pub l_f: f64,
    /// Total channel uses.
    pub t: f64,
    /// Average SNR, linear scale.
    pub power: f64,
    /// Decoding margin.
    pub epsilon: f64,
}

impl SystemParams {
    pub fn new(m: u64, m_hat: u64, k: f64, l_f: f64, t: f64, power: f64, epsilon: f64) -> Result<Self> {
        let params = SystemParams {
            m,
            m_hat,
            k,
            l_f,
            t,
            power,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_power_db(self, power_db: f64) -> Result<Self> {
        SystemParams {
            power: db_to_linear(power_db),
            ..self
        }
        .validated()
    }

    pub fn with_channel_uses(self, t: f64) -> Result<Self> {
        SystemParams { t, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::constraint("m must be >= 1"));
        }
        if self.m_hat < self.m {
            return Err(Error::constraint(format!(
                "m_hat ({}) must be >= m ({})",
                self.m_hat, self.m
            )));
        }
        let positive = [("k", self.k), ("T", self.t), ("P", self.power)];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::constraint(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if !(self.l_f >= 1.0) || !self.l_f.is_finite() {
            return Err(Error::constraint(format!("l_f must be finite and >= 1, got {}", self.l_f)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::constraint(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.m_hat as f64 * self.l_f > self.t * (1.0 + RATIO_SLACK) {
            return Err(Error::constraint(format!(
                "m_hat * l_f = {} exceeds T = {}: the transmitter cannot send m_hat packets \
                 (need m_hat <= T / l_f)",
                self.m_hat as f64 * self.l_f,
                self.t
            )));
        }
        Ok(())
    }

    /// Advisory messages for parameters that are valid but outside the regime
    /// where fades are short relative to the transmission.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.l_f > self.t / 100.0 {
            out.push(format!(
                "l_f = {} is not much smaller than T = {} (l_f > T/100)",
                self.l_f, self.t
            ));
        }
        out
    }

    /// Decoding constant `c = 2(1 + ε)`.
    pub fn c(&self) -> f64 {
        2.0 * (1.0 + self.epsilon)
    }

    /// Overall code rate `m·k/T` in nats per channel use.
    pub fn overall_rate(&self) -> f64 {
        self.m as f64 * self.k / self.t
    }

    pub fn power_db(&self) -> f64 {
        10.0 * self.power.log10()
    }

    /// Smallest admissible channel-coding rate, `k·m_hat/T`.
    pub fn rc_min(&self) -> f64 {
        self.k * self.m_hat as f64 / self.t
    }

    /// Largest admissible channel-coding rate, `k/l_f` (at least one full fade).
    pub fn rc_max(&self) -> f64 {
        self.k / self.l_f
    }

    /// Largest packet count the channel uses allow, `⌊T/l_f⌋`.
    pub fn max_packets(&self) -> u64 {
        snap_floor(self.t / self.l_f)
    }

    pub fn check_rc(&self, rc: f64) -> Result<()> {
        let lo = self.rc_min() * (1.0 - RATIO_SLACK);
        let hi = self.rc_max() * (1.0 + RATIO_SLACK);
        if !(rc >= lo && rc <= hi) {
            return Err(Error::constraint(format!(
                "R_C = {rc} outside [k*m_hat/T, k/l_f] = [{}, {}]",
                self.rc_min(),
                self.rc_max()
            )));
        }
        Ok(())
    }
}

/// `⌊x⌋`, treating values within relative `RATIO_SLACK` of an integer as that integer.
pub(crate) fn snap_floor(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= RATIO_SLACK * nearest.abs().max(1.0) {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

/// Returns `Some(n)` when `x` is within relative `RATIO_SLACK` of the integer `n`.
pub(crate) fn as_integer(x: f64) -> Option<u64> {
    let nearest = x.round();
    if nearest >= 0.0 && (x - nearest).abs() <= RATIO_SLACK * nearest.abs().max(1.0) {
        Some(nearest as u64)
    } else {
        None
    }
}

/// A candidate operating point: channel-coding rate, erasure-coding rate and
/// the number of transmitted packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSplit {
    pub rc: f64,
    pub re: f64,
    pub n: u64,
}

impl RateSplit {
    /// The split that transmits `n` packets in `T` channel uses.
    pub fn from_packets(params: &SystemParams, n: u64) -> Result<Self> {
        if n < params.m_hat {
            return Err(Error::constraint(format!(
                "packet count {n} is below m_hat = {}",
                params.m_hat
            )));
        }
        let split = RateSplit {
            rc: n as f64 * params.k / params.t,
            re: params.m as f64 / n as f64,
            n,
        };
        params.check_rc(split.rc)?;
        Ok(split)
    }

    /// The split at channel-coding rate `rc`; `rc·T/k` must be an integer.
    pub fn from_rc(params: &SystemParams, rc: f64) -> Result<Self> {
        params.check_rc(rc)?;
        let n = as_integer(rc * params.t / params.k).ok_or_else(|| {
            Error::constraint(format!(
                "R_C = {rc} gives a non-integer packet count R_C*T/k = {}",
                rc * params.t / params.k
            ))
        })?;
        RateSplit::from_packets(params, n)
    }
}

/// Per-fade moments of `ln(1 + γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingStats {
    pub mu: f64,
    pub var: f64,
    pub power: f64,
}

/// Mean and variance of `ln(1 + γ)` for `γ ~ Exponential(1/P)`:
/// `μ = e^{1/P} α(P)` and `Var = 2e^{1/P} β(P) + 2e^{1/P} ln(P) α(P) − e^{2/P} α(P)²`.
pub fn fading_stats(power: f64, quad: &QuadratureSettings) -> Result<FadingStats> {
    let a = alpha(power, quad)?;
    let b = beta(power, quad)?;
    // e^{1/P} can overflow at tiny P while the products stay finite.
    let scale = |x: f64| -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x.signum() * (power.recip() + x.abs().ln()).exp()
        }
    };
    let mu = scale(a);
    let var = 2.0 * scale(b) + 2.0 * power.ln() * scale(a) - mu * mu;
    if !(mu > 0.0) || !(var > 0.0) || !var.is_finite() {
        return Err(Error::Numeric(format!(
            "inconsistent fading moments at P = {power}: mu = {mu}, var = {var}"
        )));
    }
    Ok(FadingStats { mu, var, power })
}

/// Mutual information `½ ln(1 + γ)` of a real Gaussian channel at SNR `γ`.
pub fn mutual_info(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("SNR must be >= 0, got {gamma}")));
    }
    Ok(0.5 * gamma.ln_1p())
}

/// Decomposition of the fade count `k/(R_C·l_f)` of one codeword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadeProfile {
    pub full_fades: u64,
    pub total_fades: u64,
    pub fractional_weight: f64,
    /// The unrounded ratio `k/(R_C·l_f)`.
    pub ratio: f64,
}

impl FadeProfile {
    pub fn has_partial_fade(&self) -> bool {
        self.fractional_weight > 0.0
    }
}

pub fn fade_profile(params: &SystemParams, rc: f64) -> Result<FadeProfile> {
    params.check_rc(rc)?;
    let raw = params.k / (rc * params.l_f);
    let (full, frac, ratio) = match as_integer(raw) {
        Some(f) => (f, 0.0, f as f64),
        None => (raw.floor() as u64, raw - raw.floor(), raw),
    };
    let full = full.max(1);
    Ok(FadeProfile {
        full_fades: full,
        total_fades: full + u64::from(frac > 0.0),
        fractional_weight: frac,
        ratio,
    })
}

/// One SNR draw by inversion: `γ = −P ln u` with `u ∈ (0, 1]`.
#[inline]
pub fn sample_snr<R: Rng + ?Sized>(power: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -power * u.ln()
}

/// Draws one codeword's fades and returns its weighted average mutual
/// information `W = (1/ratio)·[Σ C(γ_i) + frac·C(γ_last)]`.
pub fn sample_weighted_avg_mi<R: Rng + ?Sized>(
    params: &SystemParams,
    rc: f64,
    rng: &mut R,
) -> Result<f64> {
    let profile = fade_profile(params, rc)?;
    Ok(weighted_avg_mi(&profile, params.power, rng))
}

pub(crate) fn weighted_avg_mi<R: Rng + ?Sized>(profile: &FadeProfile, power: f64, rng: &mut R) -> f64 {
    let mut full = 0.0;
    for _ in 0..profile.full_fades {
        full += 0.5 * sample_snr(power, rng).ln_1p();
    }
    let mut last = 0.0;
    if profile.has_partial_fade() {
        last = profile.fractional_weight * 0.5 * sample_snr(power, rng).ln_1p();
    }
    (full + last) / profile.ratio
}
