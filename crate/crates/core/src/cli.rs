//! Command execution for the `pd-fade-opt` binary.
//!
//! Every command writes one CSV table (to a file or stdout) and a one-line
//! summary (to stdout, or stderr when the table itself goes to stdout).

use std::fs::File;
use std::io::{self, Write};

use crate::config::{Command, RunConfig};
use crate::error::Result;
use crate::fading::{fade_profile, fading_stats, RateSplit};
use crate::optimizer::{
    evaluate_split, fixed_re_trajectory, optimize, sweep_overall_rate, sweep_power, SearchOptions, SweepFailure,
    SweepOutput,
};
use crate::validation::compare_with_monte_carlo;

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    /// Non-fatal problems (skipped sweep points, parameter warnings).
    pub warnings: Vec<String>,
    /// False when `validate-mc` found a point outside its bound.
    pub passed: bool,
}

/// Formats a float with 12 significant digits; infinities print as `inf`/`-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float re-parses");
    let mag = rounded.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn search_options(cfg: &RunConfig) -> SearchOptions {
    SearchOptions {
        quad: cfg.quad,
        mc: cfg.mc,
        allow_mc_search: cfg.mc_search,
    }
}

/// CSV header and rows.
pub type Table = (Vec<&'static str>, Vec<Vec<String>>);

/// Runs the configured command and writes its table to `cfg.output` or `stdout`.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let (table, outcome) = execute(cfg)?;
    match &cfg.output {
        Some(path) => write_table(File::create(path)?, &table)?,
        None => write_table(io::stdout().lock(), &table)?,
    }
    Ok(outcome)
}

/// Runs the configured command and returns its table without writing it.
pub fn execute(cfg: &RunConfig) -> Result<(Table, Outcome)> {
    let mut warnings = cfg.params.warnings();
    let (table, summary, passed) = match cfg.command {
        Command::Point => point(cfg)?,
        Command::Optimize => optimize_cmd(cfg)?,
        Command::SweepRate | Command::SweepPower => sweep(cfg, &mut warnings)?,
        Command::Trajectory => trajectory(cfg, &mut warnings)?,
        Command::ValidateMc => validate_mc(cfg)?,
    };
    Ok((table, Outcome { summary, warnings, passed }))
}

pub fn write_table<W: Write>(sink: W, (header, rows): &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn point(cfg: &RunConfig) -> Result<(Table, String, bool)> {
    let params = &cfg.params;
    let rc = cfg.rc.expect("point configs carry rc");
    let split = RateSplit::from_rc(params, rc)?;
    let profile = fade_profile(params, split.rc)?;
    let stats = fading_stats(params.power, &cfg.quad)?;
    let g = evaluate_split(params, split, cfg.method, &stats, &cfg.mc, 0)?;
    let header = vec![
        "rc",
        "re",
        "n",
        "fades_full",
        "frac_weight",
        "p_e",
        "q",
        "log10_q",
        "method",
    ];
    let row = vec![
        fmt_float(split.rc),
        fmt_float(split.re),
        split.n.to_string(),
        profile.full_fades.to_string(),
        fmt_float(profile.fractional_weight),
        fmt_float(g.p_e.p_e),
        fmt_float(g.q.q),
        fmt_float(g.q.log10_q),
        cfg.method.to_string(),
    ];
    let summary = format!(
        "point rc={} n={} p_e={} log10_q={} method={}",
        fmt_float(split.rc),
        split.n,
        fmt_float(g.p_e.p_e),
        fmt_float(g.q.log10_q),
        cfg.method
    );
    Ok(((header, vec![row]), summary, true))
}

fn optimize_cmd(cfg: &RunConfig) -> Result<(Table, String, bool)> {
    let result = optimize(&cfg.params, cfg.method, &search_options(cfg))?;
    let header = vec!["rc", "re", "n", "p_e", "phi_argument", "log10_q", "optimal", "method"];
    let rows = result
        .grid
        .iter()
        .map(|g| {
            vec![
                fmt_float(g.split.rc),
                fmt_float(g.split.re),
                g.split.n.to_string(),
                fmt_float(g.p_e.p_e),
                fmt_float(g.phi_argument),
                fmt_float(g.q.log10_q),
                (g.split.n == result.best.split.n).to_string(),
                cfg.method.to_string(),
            ]
        })
        .collect();
    let b = &result.best;
    let summary = format!(
        "optimize T={} rc*={} re*={} n*={} p_e*={} log10_q*={} grid={} method={}",
        fmt_float(cfg.params.t),
        fmt_float(b.split.rc),
        fmt_float(b.split.re),
        b.split.n,
        fmt_float(b.p_e.p_e),
        fmt_float(b.q.log10_q),
        result.grid.len(),
        cfg.method
    );
    Ok(((header, rows), summary, true))
}

fn note_failures(failures: &[SweepFailure], warnings: &mut Vec<String>) {
    warnings.extend(
        failures
            .iter()
            .map(|f| format!("skipped T={} at P_dB={}: {}", fmt_float(f.t), fmt_float(f.power_db), f.reason)),
    );
}

fn sweep(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<(Table, String, bool)> {
    let t_values = cfg.t_values()?;
    let opts = search_options(cfg);
    let out: SweepOutput = match cfg.command {
        Command::SweepPower => sweep_power(&cfg.params, &t_values, &cfg.power_db_values, cfg.method, &opts)?,
        _ => sweep_overall_rate(&cfg.params, &t_values, cfg.method, &opts)?,
    };
    note_failures(&out.failures, warnings);
    let header = vec![
        "overall_rate",
        "T",
        "P_dB",
        "rc_star",
        "re_star",
        "n_star",
        "p_e_star",
        "log10_q_star",
        "method",
    ];
    let rows = out
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.overall_rate),
                fmt_float(r.t),
                fmt_float(r.power_db),
                fmt_float(r.rc_star),
                fmt_float(r.re_star),
                r.n_star.to_string(),
                fmt_float(r.p_e_star),
                fmt_float(r.log10_q_star),
                r.method.to_string(),
            ]
        })
        .collect();
    let summary = format!(
        "{} rows={} skipped={} method={}",
        cfg.command,
        out.rows.len(),
        out.failures.len(),
        cfg.method
    );
    Ok(((header, rows), summary, true))
}

fn trajectory(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<(Table, String, bool)> {
    let re = cfg.re_fixed.expect("trajectory configs carry re_fixed");
    let out = fixed_re_trajectory(&cfg.params, re, &cfg.t_values()?, cfg.method, &search_options(cfg))?;
    note_failures(&out.failures, warnings);
    let header = vec!["overall_rate", "T", "re_fixed", "rc", "log10_q"];
    let rows = out
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.overall_rate),
                fmt_float(r.t),
                fmt_float(r.re_fixed),
                fmt_float(r.rc),
                fmt_float(r.log10_q),
            ]
        })
        .collect();
    let summary = format!(
        "trajectory re_fixed={} rows={} skipped={} method={}",
        fmt_float(re),
        out.rows.len(),
        out.failures.len(),
        cfg.method
    );
    Ok(((header, rows), summary, true))
}

fn validate_mc(cfg: &RunConfig) -> Result<(Table, String, bool)> {
    let v = compare_with_monte_carlo(&cfg.params, cfg.method, &cfg.quad, &cfg.mc, cfg.mc_tolerance)?;
    let header = vec![
        "rc",
        "n",
        "p_e_approx",
        "p_e_mc",
        "mc_std_err",
        "abs_dev",
        "bound",
        "within",
        "method",
    ];
    let rows = v
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.rc),
                r.n.to_string(),
                fmt_float(r.p_e_approx),
                fmt_float(r.p_e_mc),
                fmt_float(r.mc_std_err),
                fmt_float(r.deviation),
                fmt_float(r.bound),
                r.within().to_string(),
                cfg.method.to_string(),
            ]
        })
        .collect();
    let passed = v.all_within();
    let worst = v.worst();
    let summary = format!(
        "validate-mc {} points={} trials={} seed={} max_abs_dev={} at rc={} method={}",
        if passed { "PASS" } else { "FAIL" },
        v.rows.len(),
        cfg.mc.trials,
        cfg.mc.seed,
        worst.map_or("nan".into(), |w| fmt_float(w.deviation)),
        worst.map_or("nan".into(), |w| fmt_float(w.rc)),
        cfg.method
    );
    Ok(((header, rows), summary, passed))
}
