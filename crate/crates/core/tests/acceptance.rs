//! Acceptance run: one PASS/FAIL line per criterion, with its runtime bound.
//!
//! Runs as a plain binary so the lines always reach the test log. A criterion
//! listed in `KNOWN_RED` is a documented, analysed failure: the run still
//! prints FAIL for it, and exits nonzero if it unexpectedly turns green (so
//! the list stays truthful) or if any other criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{fig1, FIG1_T};
use pdfade::cli::{execute, write_table};
use pdfade::config::parse_config;
use pdfade::optimizer::geometric_t_values;
use pdfade::validation::{compare_with_monte_carlo, oracle_moments, oracle_q_exhaustive};
use pdfade::{
    admissible_grid, db_to_linear, fade_profile, fading_stats, fixed_re_trajectory, optimize, pe_approx1, pe_approx2,
    pe_approx4, q_binomial, q_gaussian, sweep_overall_rate, ApproxMethod, McSettings, QuadratureSettings,
    SearchOptions, SweepOutput, SystemParams,
};

const KNOWN_RED: &[u32] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: u32, title: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {id} [{title}]: {} | {} | {:.2}s (limit {}s){}",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { " over time" },
    );
    pass
}

fn quad() -> QuadratureSettings {
    QuadratureSettings::default()
}

/// Overall-rate schedule shared by the sweep criteria: geometric from the
/// upper bound `m·k/(m_hat·l_f)` down to 0.01, 40 points.
fn sweep_t_values(template: &SystemParams) -> Vec<f64> {
    geometric_t_values(template, pdfade::optimizer::max_overall_rate(template), 0.01, 40).unwrap()
}

fn reduction_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut plateau_ok = true;
    for t in [FIG1_T, 2000.0] {
        let p = fig1(t);
        let stats = fading_stats(p.power, &quad()).unwrap();
        let grid = admissible_grid(&p, ApproxMethod::Approx4).unwrap();
        for s in &grid {
            let f = fade_profile(&p, s.rc).unwrap();
            if f.has_partial_fade() {
                continue;
            }
            let a1 = pe_approx1(&p, s.rc, &stats).unwrap().p_e;
            let a2 = pe_approx2(&p, s.rc, &stats).unwrap().p_e;
            let a4 = pe_approx4(&p, s.rc, &stats).unwrap().p_e;
            worst = worst.max((a1 - a2).abs()).max((a1 - a4).abs());
            checked += 1;
        }
        for w in grid.windows(2) {
            let (f0, f1) = (fade_profile(&p, w[0].rc).unwrap(), fade_profile(&p, w[1].rc).unwrap());
            if f0.full_fades == f1.full_fades {
                let a = pe_approx2(&p, w[0].rc, &stats).unwrap().p_e;
                let b = pe_approx2(&p, w[1].rc, &stats).unwrap().p_e;
                plateau_ok &= a == b;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12 && plateau_ok && checked > 0,
        detail: format!(
            "{checked} integer-fade points, max |A1-A2|,|A1-A4| = {worst:.1e} (tol 1e-12), Approx2 piecewise constant: {plateau_ok}"
        ),
    }
}

fn remark4_mc() -> Outcome {
    let p = fig1(FIG1_T);
    let mc = McSettings {
        trials: 1_000_000,
        seed: 1,
    };
    let v = compare_with_monte_carlo(&p, ApproxMethod::Approx4, &quad(), &mc, 0.03).unwrap();
    let worst = v.worst().unwrap();
    Outcome {
        pass: v.all_within(),
        detail: format!(
            "{} grid points, 1e6 trials each, max |A4-MC| = {:.5} at rc={} (bound there {:.5} = 3se + 0.03)",
            v.rows.len(),
            worst.deviation,
            worst.rc,
            worst.bound
        ),
    }
}

fn fig1_structure() -> Outcome {
    let p = fig1(FIG1_T);
    let a3 = admissible_grid(&p, ApproxMethod::Approx3).unwrap();
    let a3_low: Vec<f64> = a3.iter().map(|s| s.rc).filter(|&rc| rc <= 0.8 + 1e-12).collect();
    let opts = SearchOptions::default();
    let r1 = optimize(&p, ApproxMethod::Approx1, &opts).unwrap().best.split.rc;
    let r4 = optimize(&p, ApproxMethod::Approx4, &opts).unwrap().best.split.rc;
    let step = p.k / p.t;
    Outcome {
        pass: a3_low.len() == 3 && (r1 - r4).abs() <= step + 1e-12,
        detail: format!(
            "T={FIG1_T}: Approx3 points with rc<=0.8 = {a3_low:?}, argmin Approx1 rc={r1} vs Approx4 rc={r4} (grid step {step})"
        ),
    }
}

fn sweep_trends() -> Outcome {
    let template = fig1(500.0);
    let t_values = sweep_t_values(&template);
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for db in 1..=10 {
        let p = template.with_power_db(f64::from(db)).unwrap();
        let out: SweepOutput = sweep_overall_rate(&p, &t_values, ApproxMethod::Approx4, &SearchOptions::default()).unwrap();
        let rows = &out.rows;
        let re: Vec<f64> = rows.iter().map(|r| r.re_star).collect();
        let i_min = (0..re.len()).min_by(|&a, &b| re[a].total_cmp(&re[b])).unwrap();
        // Low-rate tail: every row past the re* minimum.
        let tail = &rows[i_min..];
        let rc_nonincreasing = tail.windows(2).all(|w| w[1].rc_star <= w[0].rc_star + 1e-12);
        let rc_toward_zero = tail.last().unwrap().rc_star < tail[0].rc_star;
        let dips = re[i_min] < re[0] - 1e-12;
        let rises = re[re.len() - 1] > re[i_min] + 1e-12;
        let ends_high = re[re.len() - 1] >= 0.95;
        if !(rc_nonincreasing && rc_toward_zero && dips && rises && ends_high && out.failures.is_empty()) {
            failures.push(db);
        }
        summary.push(format!("{db}dB re*min={:.3} end={:.3}", re[i_min], re[re.len() - 1]));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} overall rates from {:.3} to 0.01; {}; failing levels {failures:?}",
            t_values.len(),
            pdfade::optimizer::max_overall_rate(&template),
            summary.join(", ")
        ),
    }
}

/// Ideal log10 q below this is not representable as a double probability.
const REPRESENTABLE_LOG10_Q: f64 = -300.0;

fn trajectory_dominance() -> Outcome {
    let template = fig1(500.0);
    let t_values = sweep_t_values(&template);
    let opts = SearchOptions::default();
    let ideal = sweep_overall_rate(&template, &t_values, ApproxMethod::Approx4, &opts).unwrap();
    let mut dominated = true;
    let mut gaps = Vec::new();
    for n in [50u64, 55, 58, 60, 70] {
        let re = 50.0 / n as f64;
        let traj = fixed_re_trajectory(&template, re, &t_values, ApproxMethod::Approx4, &opts).unwrap();
        let (mut window_gap, mut full_gap) = (0.0f64, 0.0f64);
        for row in &traj.rows {
            let best = ideal.rows.iter().find(|r| r.t == row.t).expect("ideal covers every T");
            dominated &= row.log10_q >= best.log10_q_star;
            let gap = row.log10_q - best.log10_q_star;
            if gap.is_finite() {
                full_gap = full_gap.max(gap);
                if best.log10_q_star >= REPRESENTABLE_LOG10_Q {
                    window_gap = window_gap.max(gap);
                }
            }
        }
        gaps.push((n, window_gap, full_gap));
    }
    let re1 = gaps[0].1;
    let best_other = gaps[1..].iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let detail = gaps
        .iter()
        .map(|(n, w, f)| format!("re=50/{n}: {w:.1} ({f:.3e})"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        pass: dominated && re1 > best_other,
        detail: format!(
            "dominance at every rate: {dominated}; worst gap in decades where log10 q* >= {REPRESENTABLE_LOG10_Q} \
             (full range in parentheses): {detail}"
        ),
    }
}

fn oracle_suites() -> Outcome {
    // Exhaustive enumeration.
    let mut enum_worst: f64 = 0.0;
    for n in 1..=20u64 {
        let m_hats: Vec<u64> = if n <= 12 {
            (1..=n).collect()
        } else {
            vec![1, n / 4, n / 2, 3 * n / 4, n].into_iter().filter(|&m| m >= 1).collect()
        };
        let p_values: &[f64] = if n <= 12 { &[0.0, 0.05, 0.3, 0.5, 0.9, 1.0] } else { &[0.05, 0.5, 0.9] };
        for &m in &m_hats {
            for &p in p_values {
                let d = (q_binomial(n, m, p).unwrap().q - oracle_q_exhaustive(n, m, p).unwrap()).abs();
                enum_worst = enum_worst.max(d);
            }
        }
    }
    let enum_ok = enum_worst <= 1e-12;

    // Moments against sampling.
    let mut moment_z: f64 = 0.0;
    for (db, seed) in [(1.0, 101), (5.0, 105), (10.0, 110)] {
        let p = db_to_linear(db);
        let s = fading_stats(p, &quad()).unwrap();
        let m = oracle_moments(p, 1_000_000, seed).unwrap();
        moment_z = moment_z
            .max((m.mean - s.mu).abs() / m.mean_std_err)
            .max((m.variance - s.var).abs() / m.variance_std_err);
    }
    let moments_ok = moment_z <= 4.0;

    // CLT against exact binomial.
    let mut clt_worst = (0.0f64, 0u64, 0u64, 0.0f64);
    let mut corrected_worst: f64 = 0.0;
    for n in [1000u64, 1500, 2000, 3000, 10000] {
        for i in 0..=16 {
            let p = 0.1 + 0.05 * f64::from(i);
            let nf = n as f64;
            let centre = nf * (1.0 - p) + 1.0;
            let sd = (nf * p * (1.0 - p)).sqrt();
            let lo = (centre - 4.0 * sd).max(1.0) as u64;
            let hi = ((centre + 4.0 * sd) as u64).min(n);
            let coarse = (1..=n).step_by((n / 200) as usize);
            for m in coarse.chain(lo..=hi) {
                let exact = q_binomial(n, m, p).unwrap().q;
                let d = (q_gaussian(n, m, p).unwrap().q - exact).abs();
                if d > clt_worst.0 {
                    clt_worst = (d, n, m, p);
                }
                // Same CLT with the half-unit continuity correction, as a diagnostic.
                let z = ((m as f64 - 0.5) - nf * (1.0 - p)) / sd;
                corrected_worst = corrected_worst.max((pdfade::normal_cdf(z).unwrap() - exact).abs());
            }
        }
    }
    let clt_ok = clt_worst.0 <= 0.02;

    Outcome {
        pass: enum_ok && moments_ok && clt_ok,
        detail: format!(
            "enumeration n<=20 max diff {enum_worst:.1e} (tol 1e-12) {}; moments at 1/5/10 dB max {moment_z:.2} SE (tol 4) {}; \
             CLT vs binomial n>=1000, p_e in [0.1,0.9] max {:.4} at n={} m_hat={} p_e={:.2} (tol 0.02) {}; \
             continuity-corrected CLT max {corrected_worst:.4}",
            ok(enum_ok),
            ok(moments_ok),
            clt_worst.0,
            clt_worst.1,
            clt_worst.2,
            clt_worst.3,
            ok(clt_ok)
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

const BASE: &str = "m = 50\nm_hat = 50\nk = 20\nl_f = 10\nP_dB = 5\nepsilon = 0.05\n";

fn determinism() -> Outcome {
    let configs = [
        ("point", "T = 2000\nrc = 0.8\nmethod = MonteCarlo\ntrials = 200000\nseed = 7\n"),
        ("optimize", "T = 4000\nmethod = Approx4\n"),
        ("optimize", "T = 2000\nmethod = MonteCarlo\nmc_search = true\ntrials = 100000\nseed = 2\n"),
        ("sweep-rate", "method = Approx4\nrate_hi = 2\nrate_lo = 0.01\nrate_points = 40\n"),
        ("sweep-power", "method = Approx2\nt_values = 1000, 2000, 4000\nP_dB_values = 1, 5, 10\n"),
        ("trajectory", "method = Approx4\nre_fixed = 0.625\nrate_hi = 2\nrate_lo = 0.01\nrate_points = 40\n"),
        ("validate-mc", "T = 2000\nmethod = Approx4\ntrials = 100000\nseed = 3\n"),
    ];
    let render = |cmd: &str, extra: &str| -> Vec<u8> {
        let cfg = parse_config(&format!("command = {cmd}\n{BASE}{extra}")).unwrap();
        let (table, _) = execute(&cfg).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &table).unwrap();
        buf
    };
    let mut mismatches = Vec::new();
    for (cmd, extra) in configs {
        let reference = render(cmd, extra);
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            if pool.install(|| render(cmd, extra)) != reference {
                mismatches.push(format!("{cmd}@{threads}"));
            }
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{} configs rendered three times (default pool, 1 thread, 4 threads); mismatches {mismatches:?}",
            configs.len()
        ),
    }
}

fn main() {
    // `cargo test -- --list` and filters come through here too.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let results = [
        (1, criterion(1, "reduction identities", Duration::from_secs(1), reduction_identities)),
        (2, criterion(2, "Approx4 vs Monte Carlo", Duration::from_secs(120), remark4_mc)),
        (3, criterion(3, "reference-system structure", Duration::from_secs(10), fig1_structure)),
        (4, criterion(4, "overall-rate sweep trend", Duration::from_secs(300), sweep_trends)),
        (5, criterion(5, "fixed-R_E dominance", Duration::from_secs(300), trajectory_dominance)),
        (6, criterion(6, "oracle suites", Duration::from_secs(60), oracle_suites)),
        (7, criterion(7, "determinism", Duration::from_secs(600), determinism)),
    ];
    let mut bad = false;
    for (id, pass) in results {
        let known = KNOWN_RED.contains(&id);
        if !pass && !known {
            println!("criterion {id}: unexpected failure");
            bad = true;
        }
        if pass && known {
            println!("criterion {id}: listed as known red but passed; update KNOWN_RED and the notes");
            bad = true;
        }
    }
    let passed = results.iter().filter(|r| r.1).count();
    println!("acceptance: {passed}/{} criteria PASS, known red {KNOWN_RED:?}", results.len());
    if bad {
        std::process::exit(1);
    }
}
