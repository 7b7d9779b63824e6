//! Brute-force and Monte Carlo reference computations, the approximation
//! versus Monte Carlo comparison behind `validate-mc`, and golden-record I/O.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::{derive_stream, fading_stats, sample_snr, SystemParams};
use crate::optimizer::admissible_grid;
use crate::outage::{estimate, pe_monte_carlo_at, ApproxMethod, McSettings, MC_BLOCK};
use crate::special::QuadratureSettings;

pub const MIN_MOMENT_SAMPLES: u64 = 100_000;

/// Stream family used by [`oracle_moments`].
const MOMENT_STREAM: u64 = u64::MAX - 1;

/// Empirical moments of `ln(1 + γ)` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub mean_std_err: f64,
    pub variance_std_err: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct PowerSums {
    count: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.count += 1.0;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    fn merge(mut self, other: PowerSums) -> Self {
        self.count += other.count;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
        self
    }

    fn finish(self) -> MomentEstimate {
        let n = self.count;
        let mean = self.s1 / n;
        let raw2 = self.s2 / n;
        let raw3 = self.s3 / n;
        let raw4 = self.s4 / n;
        let central2 = raw2 - mean * mean;
        let central4 = raw4 - 4.0 * mean * raw3 + 6.0 * mean * mean * raw2 - 3.0 * mean.powi(4);
        let variance = central2 * n / (n - 1.0);
        MomentEstimate {
            mean,
            variance,
            mean_std_err: (variance / n).sqrt(),
            variance_std_err: ((central4 - central2 * central2).max(0.0) / n).sqrt(),
            samples: n as u64,
        }
    }
}

/// Sample mean and variance of `ln(1 + γ)`, `γ ~ Exponential(1/P)`, from
/// `samples` draws split into independently seeded blocks.
pub fn oracle_moments(power: f64, samples: u64, seed: u64) -> Result<MomentEstimate> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::domain(format!("average SNR must be > 0, got {power}")));
    }
    if samples < MIN_MOMENT_SAMPLES {
        return Err(Error::domain(format!(
            "moment oracle needs at least {MIN_MOMENT_SAMPLES} samples, got {samples}"
        )));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<PowerSums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut rng = derive_stream(seed, MOMENT_STREAM, b);
            let mut sums = PowerSums::default();
            for _ in 0..count {
                sums.push(sample_snr(power, &mut rng).ln_1p());
            }
            sums
        })
        .collect();
    // Merge in block order so the floating-point result is reproducible.
    Ok(partial.into_iter().fold(PowerSums::default(), PowerSums::merge).finish())
}

/// [`oracle_moments`] over a caller-supplied stream (no sample-count floor).
pub fn oracle_moments_from<R: Rng + ?Sized>(power: f64, samples: u64, rng: &mut R) -> Result<MomentEstimate> {
    if samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let mut sums = PowerSums::default();
    for _ in 0..samples {
        sums.push(sample_snr(power, rng).ln_1p());
    }
    Ok(sums.finish())
}

pub const MAX_EXHAUSTIVE_PACKETS: u64 = 20;

/// Message-error probability by enumerating all `2^n` packet outcome patterns.
pub fn oracle_q_exhaustive(n: u64, m_hat: u64, p_e: f64) -> Result<f64> {
    if n > MAX_EXHAUSTIVE_PACKETS {
        return Err(Error::domain(format!(
            "exhaustive enumeration is limited to n <= {MAX_EXHAUSTIVE_PACKETS}, got {n}"
        )));
    }
    if m_hat < 1 || n < m_hat {
        return Err(Error::constraint(format!("need 1 <= m_hat <= n, got m_hat = {m_hat}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::domain(format!("p_e must lie in [0, 1], got {p_e}")));
    }
    // Neumaier summation: up to 2^20 terms would otherwise drift by ~1e-11.
    let (mut q, mut carry) = (0.0f64, 0.0f64);
    for pattern in 0u32..(1u32 << n) {
        let successes = u64::from(pattern.count_ones());
        if successes >= m_hat {
            continue;
        }
        let mut prob = 1.0;
        for bit in 0..n {
            prob *= if pattern >> bit & 1 == 1 { 1.0 - p_e } else { p_e };
        }
        let t = q + prob;
        carry += if q.abs() >= prob.abs() { (q - t) + prob } else { (prob - t) + q };
        q = t;
    }
    Ok(q + carry)
}

/// One grid point of an approximation-versus-Monte-Carlo comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McComparison {
    pub rc: f64,
    pub n: u64,
    pub p_e_approx: f64,
    pub p_e_mc: f64,
    pub mc_std_err: f64,
    pub deviation: f64,
    /// `3·mc_std_err + tolerance`.
    pub bound: f64,
}

impl McComparison {
    pub fn within(&self) -> bool {
        self.deviation <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McValidation {
    pub method: ApproxMethod,
    pub rows: Vec<McComparison>,
}

impl McValidation {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(McComparison::within)
    }

    pub fn worst(&self) -> Option<&McComparison> {
        self.rows.iter().max_by(|a, b| a.deviation.total_cmp(&b.deviation))
    }
}

/// Compares a closed-form `p_e` against Monte Carlo at every admissible split.
/// Grid point `i` draws from stream family `i`.
pub fn compare_with_monte_carlo(
    params: &SystemParams,
    method: ApproxMethod,
    quad: &QuadratureSettings,
    mc: &McSettings,
    tolerance: f64,
) -> Result<McValidation> {
    if !method.is_closed_form() {
        return Err(Error::constraint("comparison needs a closed-form method"));
    }
    let stats = fading_stats(params.power, quad)?;
    let grid = admissible_grid(params, method)?;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, split)| {
            let approx = estimate(method, params, split.rc, &stats, mc, i as u64)?;
            let sim = pe_monte_carlo_at(params, split.rc, mc.trials, mc.seed, i as u64)?;
            Ok(McComparison {
                rc: split.rc,
                n: split.n,
                p_e_approx: approx.p_e,
                p_e_mc: sim.p_e,
                mc_std_err: sim.mc_std_err,
                deviation: (approx.p_e - sim.p_e).abs(),
                bound: 3.0 * sim.mc_std_err + tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McValidation { method, rows })
}

/// A frozen reference value with its provenance and tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRecord {
    pub scenario: String,
    /// Echo of the inputs (`key=value;…`).
    pub inputs: String,
    pub expected: f64,
    /// Tag (`TRIVIAL` / `DERIVED` / `PAPER`) followed by the oracle description.
    pub provenance: String,
    pub tolerance: f64,
}

impl GoldenRecord {
    pub fn validate(&self) -> Result<()> {
        let tagged = ["TRIVIAL", "DERIVED", "PAPER"]
            .iter()
            .any(|t| self.provenance.starts_with(t));
        if !tagged {
            return Err(Error::constraint(format!(
                "golden record `{}` lacks a provenance tag",
                self.scenario
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::constraint(format!(
                "golden record `{}` has no valid tolerance",
                self.scenario
            )));
        }
        Ok(())
    }

    pub fn matches(&self, value: f64) -> bool {
        (value - self.expected).abs() <= self.tolerance
    }
}

const GOLDEN_HEADER: [&str; 5] = ["scenario", "inputs", "expected", "provenance", "tolerance"];

pub fn write_golden(path: &Path, records: &[GoldenRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(GOLDEN_HEADER)?;
    for r in records {
        r.validate()?;
        w.write_record([
            r.scenario.as_str(),
            r.inputs.as_str(),
            &format!("{:e}", r.expected),
            r.provenance.as_str(),
            &format!("{:e}", r.tolerance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_golden(path: &Path) -> Result<Vec<GoldenRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != GOLDEN_HEADER {
        return Err(Error::constraint(format!("unexpected golden header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let number = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::constraint(format!("bad number `{}` in golden file", &row[i])))
        };
        let record = GoldenRecord {
            scenario: row[0].to_string(),
            inputs: row[1].to_string(),
            expected: number(2)?,
            provenance: row[3].to_string(),
            tolerance: number(4)?,
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}
