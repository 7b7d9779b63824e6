//! Packet-erasure (outage) probability `p_e`.
//!
//! A packet is lost when `Σ W_i + frac·W_last < c·k/l_f`, with
//! `W = ln(1 + γ)` per fade and `c = 2(1 + ε)`. Four Gaussian approximations
//! differ in how they treat the floor of the fade count and the partial last
//! fade; the Monte Carlo estimator samples the event directly.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::{derive_stream, fade_profile, sample_snr, FadeProfile, FadingStats, SystemParams};
use crate::special::{log_phi, phi};

/// Trials per independently seeded Monte Carlo block.
pub const MC_BLOCK: u64 = 1 << 14;

pub const DEFAULT_MC_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApproxMethod {
    /// Floor ignored, partial fade dropped.
    Approx1,
    /// Floored fade count, partial fade dropped.
    Approx2,
    /// Approx1 restricted to integer fade counts.
    Approx3,
    /// Floored fades plus a Gaussian partial fade.
    Approx4,
    MonteCarlo,
}

impl ApproxMethod {
    pub const ALL: [ApproxMethod; 5] = [
        ApproxMethod::Approx1,
        ApproxMethod::Approx2,
        ApproxMethod::Approx3,
        ApproxMethod::Approx4,
        ApproxMethod::MonteCarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ApproxMethod::Approx1 => "Approx1",
            ApproxMethod::Approx2 => "Approx2",
            ApproxMethod::Approx3 => "Approx3",
            ApproxMethod::Approx4 => "Approx4",
            ApproxMethod::MonteCarlo => "MonteCarlo",
        }
    }

    pub fn is_closed_form(self) -> bool {
        self != ApproxMethod::MonteCarlo
    }
}

impl fmt::Display for ApproxMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApproxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let method = match lower.as_str() {
            "approx1" | "1" => ApproxMethod::Approx1,
            "approx2" | "2" => ApproxMethod::Approx2,
            "approx3" | "3" => ApproxMethod::Approx3,
            "approx4" | "4" => ApproxMethod::Approx4,
            "montecarlo" | "monte-carlo" | "mc" => ApproxMethod::MonteCarlo,
            _ => {
                return Err(Error::config(
                    "method",
                    format!("unknown method `{s}`; expected Approx1..Approx4 or MonteCarlo"),
                ))
            }
        };
        Ok(method)
    }
}

/// Monte Carlo budget and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            trials: DEFAULT_MC_TRIALS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub p_e: f64,
    /// `ln p_e`, kept separately so deep tails survive underflow of `p_e`.
    pub ln_p_e: f64,
    pub method: ApproxMethod,
    /// Argument of `Φ` for closed-form methods.
    pub z: Option<f64>,
    pub mc_trials: u64,
    pub mc_std_err: f64,
}

impl OutageEstimate {
    fn gaussian(z: f64, method: ApproxMethod) -> Self {
        OutageEstimate {
            p_e: phi(z),
            ln_p_e: log_phi(z),
            method,
            z: Some(z),
            mc_trials: 0,
            mc_std_err: 0.0,
        }
    }

    fn empirical(failures: u64, trials: u64) -> Self {
        let p_e = failures as f64 / trials as f64;
        OutageEstimate {
            p_e,
            ln_p_e: p_e.ln(),
            method: ApproxMethod::MonteCarlo,
            z: None,
            mc_trials: trials,
            mc_std_err: (p_e * (1.0 - p_e) / trials as f64).sqrt(),
        }
    }
}

/// `Φ[√(k/(R_C l_f)) · (c·R_C − μ) / √Var]`.
pub fn pe_approx1(params: &SystemParams, rc: f64, stats: &FadingStats) -> Result<OutageEstimate> {
    let profile = fade_profile(params, rc)?;
    Ok(OutageEstimate::gaussian(z_unfloored(params, rc, &profile, stats), ApproxMethod::Approx1))
}

fn z_unfloored(params: &SystemParams, rc: f64, profile: &FadeProfile, stats: &FadingStats) -> f64 {
    profile.ratio.sqrt() * (params.c() * rc - stats.mu) / stats.var.sqrt()
}

/// `Φ[(c·k/l_f − ⌊k/(R_C l_f)⌋·μ) / √(⌊k/(R_C l_f)⌋·Var)]`; piecewise constant in `R_C`.
pub fn pe_approx2(params: &SystemParams, rc: f64, stats: &FadingStats) -> Result<OutageEstimate> {
    let profile = fade_profile(params, rc)?;
    let full = profile.full_fades as f64;
    let z = (threshold(params) - full * stats.mu) / (full * stats.var).sqrt();
    Ok(OutageEstimate::gaussian(z, ApproxMethod::Approx2))
}

/// Approx1 on the restricted set where `k/(R_C l_f)` is an integer.
pub fn pe_approx3(params: &SystemParams, rc: f64, stats: &FadingStats) -> Result<OutageEstimate> {
    let profile = fade_profile(params, rc)?;
    if profile.has_partial_fade() {
        return Err(Error::constraint(format!(
            "Approx3 needs an integer fade count, but k/(R_C*l_f) = {} at R_C = {rc}",
            profile.ratio
        )));
    }
    Ok(OutageEstimate::gaussian(z_unfloored(params, rc, &profile, stats), ApproxMethod::Approx3))
}

/// Gaussian fit of the weighted sum: mean `ratio·μ`, variance
/// `Var·(⌊ratio⌋ + frac²)`.
pub fn pe_approx4(params: &SystemParams, rc: f64, stats: &FadingStats) -> Result<OutageEstimate> {
    let profile = fade_profile(params, rc)?;
    let frac = profile.fractional_weight;
    let mean = profile.ratio * stats.mu;
    let var = stats.var * (profile.full_fades as f64 + frac * frac);
    let z = (threshold(params) - mean) / var.sqrt();
    Ok(OutageEstimate::gaussian(z, ApproxMethod::Approx4))
}

/// `c·k/l_f`, the outage threshold on the unhalved log sum.
fn threshold(params: &SystemParams) -> f64 {
    params.c() * params.k / params.l_f
}

/// Empirical outage frequency over `trials` codewords.
pub fn pe_monte_carlo(params: &SystemParams, rc: f64, trials: u64, seed: u64) -> Result<OutageEstimate> {
    pe_monte_carlo_at(params, rc, trials, seed, 0)
}

/// As [`pe_monte_carlo`], drawing from the streams of grid point `point`.
pub fn pe_monte_carlo_at(
    params: &SystemParams,
    rc: f64,
    trials: u64,
    seed: u64,
    point: u64,
) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    let profile = fade_profile(params, rc)?;
    let limit = threshold(params);
    let power = params.power;
    let failures = run_blocks(trials, |block, count| {
        let mut rng = derive_stream(seed, point, block);
        let mut failures = 0u64;
        for _ in 0..count {
            let mut sum = 0.0;
            for _ in 0..profile.full_fades {
                sum += sample_snr(power, &mut rng).ln_1p();
            }
            if profile.has_partial_fade() {
                sum += profile.fractional_weight * sample_snr(power, &mut rng).ln_1p();
            }
            failures += u64::from(sum < limit);
        }
        failures
    });
    Ok(OutageEstimate::empirical(failures, trials))
}

/// Splits `trials` into fixed-size blocks, runs `block_fn(block_index, count)`
/// in parallel and sums the results. The split does not depend on the thread
/// count, so the total is reproducible.
pub(crate) fn run_blocks<F>(trials: u64, block_fn: F) -> u64
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    let blocks = trials.div_ceil(MC_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = MC_BLOCK.min(trials - b * MC_BLOCK);
            block_fn(b, count)
        })
        .sum()
}

/// Dispatches to the estimator for `method`. `point` selects the Monte Carlo
/// stream family and is ignored by closed-form methods.
pub fn estimate(
    method: ApproxMethod,
    params: &SystemParams,
    rc: f64,
    stats: &FadingStats,
    mc: &McSettings,
    point: u64,
) -> Result<OutageEstimate> {
    match method {
        ApproxMethod::Approx1 => pe_approx1(params, rc, stats),
        ApproxMethod::Approx2 => pe_approx2(params, rc, stats),
        ApproxMethod::Approx3 => pe_approx3(params, rc, stats),
        ApproxMethod::Approx4 => pe_approx4(params, rc, stats),
        ApproxMethod::MonteCarlo => pe_monte_carlo_at(params, rc, mc.trials, mc.seed, point),
    }
}
