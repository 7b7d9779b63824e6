//! Run configuration: a flat `key = value` document.
//!
//! Lines are `key = value`; `#` starts a comment; lists are comma-separated;
//! string values may be double-quoted. Keys are case-sensitive and unknown
//! keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fading::{db_to_linear, SystemParams};
use crate::optimizer::{geometric_t_values, max_overall_rate, MIN_OPTIMIZER_MC_TRIALS};
use crate::outage::{ApproxMethod, McSettings, DEFAULT_MC_TRIALS};
use crate::special::QuadratureSettings;

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_RATE_LO: f64 = 0.01;
pub const DEFAULT_RATE_POINTS: usize = 40;
pub const DEFAULT_MC_TOLERANCE: f64 = 0.03;

const KNOWN_KEYS: &[&str] = &[
    "command",
    "m",
    "m_hat",
    "k",
    "l_f",
    "T",
    "P_dB",
    "epsilon",
    "method",
    "rc",
    "t_values",
    "rate_hi",
    "rate_lo",
    "rate_points",
    "P_dB_values",
    "re_fixed",
    "trials",
    "seed",
    "mc_search",
    "mc_tolerance",
    "output",
    "quad_abs_tol",
    "quad_rel_tol",
    "quad_max_subdivisions",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Point,
    Optimize,
    SweepRate,
    SweepPower,
    Trajectory,
    ValidateMc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::Optimize => "optimize",
            Command::SweepRate => "sweep-rate",
            Command::SweepPower => "sweep-power",
            Command::Trajectory => "trajectory",
            Command::ValidateMc => "validate-mc",
        }
    }

    fn uses_schedule(self) -> bool {
        matches!(self, Command::SweepRate | Command::SweepPower | Command::Trajectory)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "point" => Command::Point,
            "optimize" => Command::Optimize,
            "sweep-rate" => Command::SweepRate,
            "sweep-power" => Command::SweepPower,
            "trajectory" => Command::Trajectory,
            "validate-mc" => Command::ValidateMc,
            other => {
                return Err(Error::config(
                    "command",
                    format!(
                        "unknown command `{other}`; expected one of point, optimize, sweep-rate, \
                         sweep-power, trajectory, validate-mc"
                    ),
                ))
            }
        })
    }
}

/// How the channel-use counts of a sweep are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    List(Vec<f64>),
    /// Overall rates geometrically spaced from `rate_hi` down to `rate_lo`.
    Geometric { rate_hi: f64, rate_lo: f64, points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// System parameters. For sweep commands `t` is a placeholder replaced per sweep point.
    pub params: SystemParams,
    pub power_db: f64,
    pub method: ApproxMethod,
    pub rc: Option<f64>,
    pub schedule: Option<Schedule>,
    pub power_db_values: Vec<f64>,
    pub re_fixed: Option<f64>,
    pub mc: McSettings,
    pub mc_search: bool,
    pub mc_tolerance: f64,
    pub output: Option<PathBuf>,
    pub quad: QuadratureSettings,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub method: Option<ApproxMethod>,
}

#[derive(Debug)]
struct Document {
    entries: BTreeMap<String, (usize, String)>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {line_no}"),
                    format!("expected `key = value`, found `{line}`"),
                )
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::config(
                    key,
                    format!("unknown key on line {line_no}; known keys: {}", KNOWN_KEYS.join(", ")),
                ));
            }
            let value = unquote(value.trim());
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value)) {
                return Err(Error::config(key, format!("given twice (lines {first} and {line_no})")));
            }
        }
        Ok(Document { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(key, format!("expected {expected}, found `{v}`"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str, expected: &str) -> Result<T> {
        self.get(key, expected)?
            .ok_or_else(|| Error::config(key, format!("missing required key (expected {expected})")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|item| {
                item.trim().parse::<f64>().map_err(|_| {
                    Error::config(key, format!("expected a comma-separated list of numbers, found `{v}`"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(value: &str) -> String {
    value
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(value)
        .to_string()
}

/// Parses a config document. The command may come from the document's
/// `command` key or from `overrides`; overrides win.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let doc = Document::parse(text)?;
    let command = match overrides.command {
        Some(c) => c,
        None => doc
            .raw("command")
            .ok_or_else(|| Error::config("command", "no command given on the command line or in the config"))?
            .parse()?,
    };

    let m: u64 = doc.require("m", "a positive integer")?;
    let m_hat: u64 = doc.require("m_hat", "an integer >= m")?;
    let k: f64 = doc.require("k", "a positive number (nats per packet)")?;
    let l_f: f64 = doc.require("l_f", "a number >= 1 (channel uses per fade)")?;
    let power_db: f64 = doc.require("P_dB", "a number (average SNR in dB)")?;
    let epsilon: f64 = doc.get("epsilon", "a number >= 0")?.unwrap_or(DEFAULT_EPSILON);
    let method = match overrides.method {
        Some(m) => m,
        None => match doc.raw("method") {
            Some(v) => v.parse()?,
            None => ApproxMethod::Approx4,
        },
    };

    let quad = {
        let d = QuadratureSettings::default();
        QuadratureSettings::new(
            doc.get("quad_abs_tol", "a positive number")?.unwrap_or(d.abs_tol),
            doc.get("quad_rel_tol", "a positive number")?.unwrap_or(d.rel_tol),
            doc.get("quad_max_subdivisions", "a positive integer")?.unwrap_or(d.max_subdivisions),
        )
        .map_err(|e| Error::config("quad_*", e.to_string()))?
    };

    let mc = McSettings {
        trials: overrides
            .trials
            .or(doc.get("trials", "a positive integer")?)
            .unwrap_or(DEFAULT_MC_TRIALS),
        seed: overrides.seed.or(doc.get("seed", "an unsigned 64-bit integer")?).unwrap_or(0),
    };
    if mc.trials == 0 {
        return Err(Error::config("trials", "must be >= 1"));
    }
    let mc_search: bool = doc.get("mc_search", "true or false")?.unwrap_or(false);
    let searches = command == Command::Optimize || command.uses_schedule();
    if method == ApproxMethod::MonteCarlo && searches {
        if !mc_search {
            return Err(Error::config(
                "mc_search",
                "method MonteCarlo drives an exhaustive search here; set `mc_search = true` to allow it",
            ));
        }
        if mc.trials < MIN_OPTIMIZER_MC_TRIALS {
            return Err(Error::config(
                "trials",
                format!("Monte Carlo search needs >= {MIN_OPTIMIZER_MC_TRIALS} trials per grid point"),
            ));
        }
    }
    let mc_tolerance: f64 = doc
        .get("mc_tolerance", "a non-negative number")?
        .unwrap_or(DEFAULT_MC_TOLERANCE);
    if !(mc_tolerance >= 0.0) {
        return Err(Error::config("mc_tolerance", "must be >= 0"));
    }

    let t: Option<f64> = doc.get("T", "a positive number (total channel uses)")?;
    let rc: Option<f64> = doc.get("rc", "a positive number (nats per channel use)")?;
    let re_fixed: Option<f64> = doc.get("re_fixed", "a number in (0, 1]")?;
    let power_db_values = doc
        .list("P_dB_values")?
        .unwrap_or_else(|| (1..=10).map(f64::from).collect());
    if power_db_values.is_empty() {
        return Err(Error::config("P_dB_values", "must list at least one power level"));
    }

    let build = |t: f64| -> Result<SystemParams> {
        SystemParams::new(m, m_hat, k, l_f, t, db_to_linear(power_db), epsilon).map_err(|e| {
            let message = e.to_string();
            let key = if message.contains("m_hat <= T / l_f") { "T" } else { "params" };
            Error::config(key, message)
        })
    };

    let mut schedule = None;
    let params = if command.uses_schedule() {
        // Validate everything except T with a placeholder that satisfies m_hat·l_f <= T.
        let template = build(m_hat.max(1) as f64 * l_f.max(1.0))?;
        let sched = match doc.list("t_values")? {
            Some(list) => {
                if list.is_empty() {
                    return Err(Error::config("t_values", "must list at least one value"));
                }
                for &t in &list {
                    if !(t > 0.0) {
                        return Err(Error::config("t_values", format!("channel uses must be > 0, got {t}")));
                    }
                }
                if doc.raw("rate_hi").is_some() || doc.raw("rate_lo").is_some() || doc.raw("rate_points").is_some() {
                    return Err(Error::config("t_values", "give either t_values or rate_hi/rate_lo/rate_points, not both"));
                }
                Schedule::List(list)
            }
            None => {
                let rate_hi = doc.get("rate_hi", "a positive number")?.unwrap_or(max_overall_rate(&template));
                let rate_lo = doc.get("rate_lo", "a positive number")?.unwrap_or(DEFAULT_RATE_LO);
                let points = doc.get("rate_points", "a positive integer")?.unwrap_or(DEFAULT_RATE_POINTS);
                geometric_t_values(&template, rate_hi, rate_lo, points)
                    .map_err(|e| Error::config("rate_hi/rate_lo/rate_points", e.to_string()))?;
                Schedule::Geometric { rate_hi, rate_lo, points }
            }
        };
        schedule = Some(sched);
        match t {
            Some(t) => build(t)?,
            None => template,
        }
    } else {
        build(t.ok_or_else(|| Error::config("T", "missing required key (expected total channel uses)"))?)?
    };

    match command {
        Command::Point => {
            let rc = rc.ok_or_else(|| Error::config("rc", "missing required key for `point`"))?;
            crate::fading::RateSplit::from_rc(&params, rc).map_err(|e| Error::config("rc", e.to_string()))?;
        }
        Command::Trajectory => {
            let re = re_fixed.ok_or_else(|| Error::config("re_fixed", "missing required key for `trajectory`"))?;
            if !(re > 0.0 && re <= 1.0) {
                return Err(Error::config("re_fixed", format!("must lie in (0, 1], got {re}")));
            }
            if crate::fading::as_integer(m as f64 / re).is_none() {
                return Err(Error::config(
                    "re_fixed",
                    format!("m / re_fixed = {} must be an integer packet count", m as f64 / re),
                ));
            }
        }
        _ => {}
    }

    Ok(RunConfig {
        command,
        params,
        power_db,
        method,
        rc,
        schedule,
        power_db_values,
        re_fixed,
        mc,
        mc_search,
        mc_tolerance,
        output: overrides.output.clone().or(doc.raw("output").map(PathBuf::from)),
        quad,
    })
}

impl RunConfig {
    /// Channel-use counts for sweep commands.
    pub fn t_values(&self) -> Result<Vec<f64>> {
        match &self.schedule {
            Some(Schedule::List(list)) => Ok(list.clone()),
            Some(Schedule::Geometric { rate_hi, rate_lo, points }) => {
                geometric_t_values(&self.params, *rate_hi, *rate_lo, *points)
            }
            None => Ok(vec![self.params.t]),
        }
    }

    /// Flat `key = value` echo of the effective configuration.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut parts = vec![
            format!("command={}", self.command),
            format!("m={}", p.m),
            format!("m_hat={}", p.m_hat),
            format!("k={}", p.k),
            format!("l_f={}", p.l_f),
            format!("T={}", p.t),
            format!("P_dB={}", self.power_db),
            format!("epsilon={}", p.epsilon),
            format!("method={}", self.method),
        ];
        if let Some(rc) = self.rc {
            parts.push(format!("rc={rc}"));
        }
        if let Some(re) = self.re_fixed {
            parts.push(format!("re_fixed={re}"));
        }
        parts.push(format!("trials={}", self.mc.trials));
        parts.push(format!("seed={}", self.mc.seed));
        parts.join(";")
    }
}
