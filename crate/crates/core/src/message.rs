//! Message-error probability `q`: the erasure decoder fails when fewer than
//! `m_hat` of the `n` transmitted packets survive.

use std::f64::consts::{LN_10, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::fading::{derive_stream, fade_profile, weighted_avg_mi, SystemParams};
use crate::outage::run_blocks;
use crate::special::log_phi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageMethod {
    BinomialExact,
    GaussianClt,
    FullMonteCarlo,
}

impl MessageMethod {
    pub fn name(self) -> &'static str {
        match self {
            MessageMethod::BinomialExact => "BinomialExact",
            MessageMethod::GaussianClt => "GaussianCLT",
            MessageMethod::FullMonteCarlo => "FullMonteCarlo",
        }
    }
}

impl fmt::Display for MessageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageErrorResult {
    pub q: f64,
    /// `log10 q`, computed in the log domain; `-inf` when `q = 0`.
    pub log10_q: f64,
    pub method: MessageMethod,
    pub n: u64,
    /// Packet-erasure probability the result was computed from.
    pub p_e_used: Option<f64>,
    /// Argument of `Φ` for [`MessageMethod::GaussianClt`].
    pub phi_argument: Option<f64>,
    pub mc_trials: u64,
    pub mc_std_err: f64,
}

impl MessageErrorResult {
    fn closed_form(ln_q: f64, method: MessageMethod, n: u64, p_e: f64) -> Self {
        MessageErrorResult {
            q: ln_q.exp(),
            log10_q: ln_q / LN_10,
            method,
            n,
            p_e_used: Some(p_e),
            phi_argument: None,
            mc_trials: 0,
            mc_std_err: 0.0,
        }
    }
}

fn check_counts(n: u64, m_hat: u64) -> Result<()> {
    if m_hat < 1 {
        return Err(Error::constraint("m_hat must be >= 1"));
    }
    if n < m_hat {
        return Err(Error::constraint(format!(
            "packet count n = {n} is below the required m_hat = {m_hat}"
        )));
    }
    Ok(())
}

fn check_probability(p_e: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::domain(format!("p_e must lie in [0, 1], got {p_e}")));
    }
    Ok(())
}

/// Exact `q = Σ_{i<m_hat} C(n,i)(1−p_e)^i p_e^{n−i}`, accumulated in the log
/// domain from saddle-point binomial terms.
pub fn q_binomial(n: u64, m_hat: u64, p_e: f64) -> Result<MessageErrorResult> {
    check_counts(n, m_hat)?;
    check_probability(p_e)?;
    let ln_q = ln_binomial_range(n, 0, m_hat - 1, p_e);
    Ok(MessageErrorResult::closed_form(ln_q, MessageMethod::BinomialExact, n, p_e))
}

/// Probability that at least `m_hat` packets survive; the complement of
/// [`q_binomial`] summed independently over the upper range.
pub fn decode_probability(n: u64, m_hat: u64, p_e: f64) -> Result<f64> {
    check_counts(n, m_hat)?;
    check_probability(p_e)?;
    Ok(ln_binomial_range(n, m_hat, n, p_e).exp())
}

/// `ln Σ_{i=lo}^{hi} P[i successes]` with success probability `1 − p_e`.
fn ln_binomial_range(n: u64, lo: u64, hi: u64, p_e: f64) -> f64 {
    if p_e == 0.0 {
        return if hi >= n && lo <= n { 0.0 } else { f64::NEG_INFINITY };
    }
    if p_e == 1.0 {
        return if lo == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let terms: Vec<f64> = (lo..=hi).map(|i| ln_dbinom(i, n, 1.0 - p_e, p_e)).collect();
    log_sum_exp(&terms)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Log of the binomial pmf at `x` successes, success probability `p`,
/// failure probability `q = 1 − p` passed separately to keep precision.
/// Loader's saddle-point form: no cancellation for large `n`.
fn ln_dbinom(x: u64, n: u64, p: f64, q: f64) -> f64 {
    let (xf, nf) = (x as f64, n as f64);
    if x == 0 {
        return if p < q { nf * (-p).ln_1p() } else { nf * q.ln() };
    }
    if x == n {
        return if q < p { nf * (-q).ln_1p() } else { nf * p.ln() };
    }
    let lc = stirling_error(nf)
        - stirling_error(xf)
        - stirling_error(nf - xf)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = (2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln n! − [(n + ½) ln n − n + ln √(2π)]` for integer `n ≥ 1`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return libm::lgamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x/np) + np − x`, evaluated by series when `x ≈ np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let v2 = v * v;
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return s;
            }
            s = next;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// Argument of the CLT approximation of `q`:
/// `((m_hat − 1) − n(1 − p_e)) / √(n p_e (1 − p_e))`.
///
/// `ln_p_e` carries `p_e` when it underflows; the endpoints map to `∓∞`.
pub fn gaussian_argument(n: f64, m_hat: u64, p_e: f64, ln_p_e: f64) -> f64 {
    if p_e >= 1.0 {
        return f64::INFINITY;
    }
    if ln_p_e == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let numerator = (m_hat as f64 - 1.0) - n * (1.0 - p_e);
    let denominator = n.sqrt() * (0.5 * ln_p_e).exp() * (0.5 * (-p_e).ln_1p()).exp();
    if denominator == 0.0 {
        return if numerator < 0.0 {
            f64::NEG_INFINITY
        } else if numerator > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    numerator / denominator
}

/// CLT approximation `q ≈ Φ(argument)`.
pub fn q_gaussian(n: u64, m_hat: u64, p_e: f64) -> Result<MessageErrorResult> {
    q_gaussian_ln(n, m_hat, p_e, p_e.ln())
}

/// [`q_gaussian`] with an explicit `ln p_e`, for erasure probabilities below
/// the smallest representable double.
pub fn q_gaussian_ln(n: u64, m_hat: u64, p_e: f64, ln_p_e: f64) -> Result<MessageErrorResult> {
    check_counts(n, m_hat)?;
    check_probability(p_e)?;
    let z = gaussian_argument(n as f64, m_hat, p_e, ln_p_e);
    let ln_q = log_phi(z);
    Ok(MessageErrorResult {
        phi_argument: Some(z),
        ..MessageErrorResult::closed_form(ln_q, MessageMethod::GaussianClt, n, p_e)
    })
}

/// Stream family reserved for whole-message simulation.
const MESSAGE_STREAM: u64 = u64::MAX;

/// Simulates whole messages: `n = R_C·T/k` packets per trial, each decoded iff
/// its weighted average mutual information exceeds `(1 + ε)·R_C`; the message
/// fails when fewer than `m_hat` packets decode.
pub fn q_full_monte_carlo(
    params: &SystemParams,
    rc: f64,
    trials: u64,
    seed: u64,
) -> Result<MessageErrorResult> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    let split = crate::fading::RateSplit::from_rc(params, rc)?;
    let profile = fade_profile(params, rc)?;
    let target = (1.0 + params.epsilon) * rc;
    let n = split.n;
    let allowed_losses = n - params.m_hat;
    let power = params.power;
    let failures = run_blocks(trials, |block, count| {
        let mut rng = derive_stream(seed, MESSAGE_STREAM, block);
        let mut failures = 0u64;
        for _ in 0..count {
            let mut lost = 0u64;
            for _ in 0..n {
                if weighted_avg_mi(&profile, power, &mut rng) <= target {
                    lost += 1;
                    if lost > allowed_losses {
                        break;
                    }
                }
            }
            failures += u64::from(lost > allowed_losses);
        }
        failures
    });
    let q = failures as f64 / trials as f64;
    Ok(MessageErrorResult {
        q,
        log10_q: q.log10(),
        method: MessageMethod::FullMonteCarlo,
        n,
        p_e_used: None,
        phi_argument: None,
        mc_trials: trials,
        mc_std_err: (q * (1.0 - q) / trials as f64).sqrt(),
    })
}
