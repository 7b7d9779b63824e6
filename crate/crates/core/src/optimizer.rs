//! Exhaustive search for the rate split minimizing message-error probability,
//! plus the overall-rate / power sweeps and fixed-`R_E` trajectories built on it.
//!
//! Candidates are indexed by the transmitted packet count `n`, which must be
//! an integer in `[m_hat, ⌊T/l_f⌋]`; `R_C = n·k/T` and `R_E = m/n`. The
//! objective is the argument of `Φ` in the CLT approximation of `q`, which is
//! monotone in `q` and does not underflow.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::{as_integer, fade_profile, fading_stats, FadingStats, RateSplit, SystemParams};
use crate::message::{gaussian_argument, q_gaussian_ln, MessageErrorResult};
use crate::outage::{estimate, ApproxMethod, McSettings, OutageEstimate};
use crate::special::{log_phi, QuadratureSettings};

/// Minimum trials per grid point when Monte Carlo drives the search.
pub const MIN_OPTIMIZER_MC_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchOptions {
    pub quad: QuadratureSettings,
    pub mc: McSettings,
    /// Must be set to use [`ApproxMethod::MonteCarlo`] as the search method.
    pub allow_mc_search: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub split: RateSplit,
    pub p_e: OutageEstimate,
    pub q: MessageErrorResult,
    pub phi_argument: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: GridPoint,
    pub grid: Vec<GridPoint>,
    pub method: ApproxMethod,
}

/// One optimized operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub overall_rate: f64,
    pub t: f64,
    pub power_db: f64,
    pub rc_star: f64,
    pub re_star: f64,
    pub n_star: u64,
    pub p_e_star: f64,
    pub log10_q_star: f64,
    pub method: ApproxMethod,
}

/// A channel-use count the sweep could not evaluate, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub t: f64,
    pub power_db: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub overall_rate: f64,
    pub t: f64,
    pub re_fixed: f64,
    pub rc: f64,
    pub n: u64,
    pub p_e: f64,
    pub phi_argument: f64,
    pub log10_q: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryOutput {
    pub rows: Vec<TrajectoryRow>,
    pub failures: Vec<SweepFailure>,
}

/// All admissible splits, ordered by increasing `n` (increasing `R_C`).
/// Approx3 keeps only splits whose fade count `k/(R_C l_f)` is an integer.
pub fn admissible_grid(params: &SystemParams, method: ApproxMethod) -> Result<Vec<RateSplit>> {
    params.validate()?;
    let max_n = params.max_packets();
    if max_n < params.m_hat {
        return Err(Error::constraint(format!(
            "empty grid: m_hat = {} exceeds T/l_f = {} (need m_hat <= T / l_f)",
            params.m_hat,
            params.t / params.l_f
        )));
    }
    let mut grid = Vec::with_capacity((max_n - params.m_hat + 1) as usize);
    for n in params.m_hat..=max_n {
        let split = RateSplit::from_packets(params, n)?;
        if method == ApproxMethod::Approx3 && fade_profile(params, split.rc)?.has_partial_fade() {
            continue;
        }
        grid.push(split);
    }
    if grid.is_empty() {
        return Err(Error::constraint(format!(
            "no split with an integer fade count for {method} (m_hat = {}, T = {}, k = {}, l_f = {})",
            params.m_hat, params.t, params.k, params.l_f
        )));
    }
    Ok(grid)
}

fn check_method(method: ApproxMethod, opts: &SearchOptions) -> Result<()> {
    if method == ApproxMethod::MonteCarlo {
        if !opts.allow_mc_search {
            return Err(Error::config(
                "mc_search",
                "Monte Carlo as a search method is disabled; enable it explicitly (mc_search = true)",
            ));
        }
        if opts.mc.trials < MIN_OPTIMIZER_MC_TRIALS {
            return Err(Error::config(
                "trials",
                format!(
                    "Monte Carlo search needs at least {MIN_OPTIMIZER_MC_TRIALS} trials per grid point, got {}",
                    opts.mc.trials
                ),
            ));
        }
    }
    Ok(())
}

/// Evaluates `p_e`, the CLT argument and `q` at one split.
pub fn evaluate_split(
    params: &SystemParams,
    split: RateSplit,
    method: ApproxMethod,
    stats: &FadingStats,
    mc: &McSettings,
    point: u64,
) -> Result<GridPoint> {
    let p_e = estimate(method, params, split.rc, stats, mc, point)?;
    let q = q_gaussian_ln(split.n, params.m_hat, p_e.p_e, p_e.ln_p_e)?;
    let phi_argument = q.phi_argument.expect("CLT result carries its argument");
    Ok(GridPoint {
        split,
        p_e,
        q,
        phi_argument,
    })
}

/// Index of the smallest objective; ties go to the smaller `R_C`.
fn argmin(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if v.total_cmp(&b).is_ge() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Solves the rate-allocation problem by exhaustive search over the
/// admissible grid. Grid points are evaluated in parallel and returned in
/// grid order.
pub fn optimize(params: &SystemParams, method: ApproxMethod, opts: &SearchOptions) -> Result<OptimizationResult> {
    check_method(method, opts)?;
    let stats = fading_stats(params.power, &opts.quad)?;
    optimize_with_stats(params, method, &stats, opts)
}

pub(crate) fn optimize_with_stats(
    params: &SystemParams,
    method: ApproxMethod,
    stats: &FadingStats,
    opts: &SearchOptions,
) -> Result<OptimizationResult> {
    let splits = admissible_grid(params, method)?;
    let grid = splits
        .par_iter()
        .enumerate()
        .map(|(i, split)| evaluate_split(params, *split, method, stats, &opts.mc, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let best_index = argmin(grid.iter().map(|g| g.phi_argument)).expect("grid is non-empty");
    Ok(OptimizationResult {
        best: grid[best_index],
        grid,
        method,
    })
}

/// Diagnostic relaxation: evaluates the objective at `density` points per
/// unit packet count, treating `n` as real, and returns the minimizing `R_C`.
/// Only meaningful for the closed-form methods that accept any `R_C`.
pub fn relaxed_argmin_rc(
    params: &SystemParams,
    method: ApproxMethod,
    density: u32,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if !matches!(method, ApproxMethod::Approx1 | ApproxMethod::Approx2 | ApproxMethod::Approx4) {
        return Err(Error::constraint(format!("relaxed search is not defined for {method}")));
    }
    if density == 0 {
        return Err(Error::domain("density must be >= 1"));
    }
    let stats = fading_stats(params.power, quad)?;
    let lo = params.m_hat as f64;
    let steps = ((params.max_packets() as f64 - lo) * density as f64).round() as u64;
    let mc = McSettings::default();
    let candidates = (0..=steps)
        .map(|j| {
            let n = lo + j as f64 / density as f64;
            let rc = n * params.k / params.t;
            let p_e = estimate(method, params, rc, &stats, &mc, 0)?;
            Ok((rc, gaussian_argument(n, params.m_hat, p_e.p_e, p_e.ln_p_e)))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = argmin(candidates.iter().map(|c| c.1)).expect("at least one candidate");
    Ok(candidates[best].0)
}

fn sweep_row(params: &SystemParams, result: &OptimizationResult) -> SweepRow {
    let best = &result.best;
    SweepRow {
        overall_rate: params.overall_rate(),
        t: params.t,
        power_db: params.power_db(),
        rc_star: best.split.rc,
        re_star: best.split.re,
        n_star: best.split.n,
        p_e_star: best.p_e.p_e,
        log10_q_star: best.q.log10_q,
        method: result.method,
    }
}

/// Channel-use counts whose overall rates `m·k/T` are geometrically spaced
/// from `rate_hi` down to `rate_lo`. Counts are rounded to integers,
/// deduplicated, and sorted increasing (decreasing overall rate).
pub fn geometric_t_values(template: &SystemParams, rate_hi: f64, rate_lo: f64, points: usize) -> Result<Vec<f64>> {
    if !(rate_hi > 0.0 && rate_lo > 0.0 && rate_hi >= rate_lo) || points == 0 {
        return Err(Error::domain(format!(
            "need rate_hi >= rate_lo > 0 and at least one point (got {rate_hi}, {rate_lo}, {points})"
        )));
    }
    let mk = template.m as f64 * template.k;
    let ratio = if points > 1 {
        (rate_lo / rate_hi).powf(1.0 / (points - 1) as f64)
    } else {
        1.0
    };
    let mut t_values: Vec<f64> = (0..points)
        .map(|i| (mk / (rate_hi * ratio.powi(i as i32))).round())
        .collect();
    t_values.sort_by(f64::total_cmp);
    t_values.dedup();
    Ok(t_values)
}

/// Upper end of the overall-rate axis: `m·k/(m_hat·l_f)`, where only `n = m_hat` fits.
pub fn max_overall_rate(template: &SystemParams) -> f64 {
    template.m as f64 * template.k / (template.m_hat as f64 * template.l_f)
}

/// Optimizes at every `T`. Failing channel-use counts are collected rather
/// than aborting the sweep. Rows are ordered by decreasing overall rate.
pub fn sweep_overall_rate(
    template: &SystemParams,
    t_values: &[f64],
    method: ApproxMethod,
    opts: &SearchOptions,
) -> Result<SweepOutput> {
    check_method(method, opts)?;
    let stats = fading_stats(template.power, &opts.quad)?;
    let mut t_sorted = t_values.to_vec();
    t_sorted.sort_by(f64::total_cmp);
    let outcomes: Vec<(f64, Result<SweepRow>)> = t_sorted
        .iter()
        .map(|&t| {
            let row = template
                .with_channel_uses(t)
                .and_then(|p| optimize_with_stats(&p, method, &stats, opts).map(|r| sweep_row(&p, &r)));
            (t, row)
        })
        .collect();
    let mut out = SweepOutput::default();
    for (t, outcome) in outcomes {
        match outcome {
            Ok(row) => out.rows.push(row),
            Err(e) => out.failures.push(SweepFailure {
                t,
                power_db: template.power_db(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// [`sweep_overall_rate`] at each power level (dB), concatenated in the
/// given power order.
pub fn sweep_power(
    template: &SystemParams,
    t_values: &[f64],
    power_db_values: &[f64],
    method: ApproxMethod,
    opts: &SearchOptions,
) -> Result<SweepOutput> {
    let mut out = SweepOutput::default();
    for &db in power_db_values {
        let params = template.with_power_db(db)?;
        let part = sweep_overall_rate(&params, t_values, method, opts)?;
        out.rows.extend(part.rows);
        out.failures.extend(part.failures);
    }
    Ok(out)
}

/// Holds `R_E` fixed (so `n = m/R_E` is fixed) while `T` grows and `R_C = n·k/T`
/// falls; evaluates `q` once per `T`.
pub fn fixed_re_trajectory(
    template: &SystemParams,
    re_fixed: f64,
    t_values: &[f64],
    method: ApproxMethod,
    opts: &SearchOptions,
) -> Result<TrajectoryOutput> {
    check_method(method, opts)?;
    if !(re_fixed > 0.0 && re_fixed <= 1.0) {
        return Err(Error::constraint(format!("R_E must lie in (0, 1], got {re_fixed}")));
    }
    let n = as_integer(template.m as f64 / re_fixed).ok_or_else(|| {
        Error::constraint(format!(
            "m / R_E = {} is not an integer packet count",
            template.m as f64 / re_fixed
        ))
    })?;
    if n < template.m_hat {
        return Err(Error::constraint(format!(
            "m / R_E = {n} packets is below m_hat = {}",
            template.m_hat
        )));
    }
    let stats = fading_stats(template.power, &opts.quad)?;
    let mut t_sorted = t_values.to_vec();
    t_sorted.sort_by(f64::total_cmp);
    let mut out = TrajectoryOutput::default();
    for (i, &t) in t_sorted.iter().enumerate() {
        let point = template
            .with_channel_uses(t)
            .and_then(|p| {
                let split = RateSplit::from_packets(&p, n)?;
                let g = evaluate_split(&p, split, method, &stats, &opts.mc, i as u64)?;
                Ok((p, g))
            });
        match point {
            Ok((p, g)) => out.rows.push(TrajectoryRow {
                overall_rate: p.overall_rate(),
                t,
                re_fixed,
                rc: g.split.rc,
                n,
                p_e: g.p_e.p_e,
                phi_argument: g.phi_argument,
                log10_q: g.q.log10_q,
            }),
            Err(e) => out.failures.push(SweepFailure {
                t,
                power_db: template.power_db(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// `log10 Φ(z)`.
pub fn log10_q_from_argument(z: f64) -> f64 {
    log_phi(z) / std::f64::consts::LN_10
}
