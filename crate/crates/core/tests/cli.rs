use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = "\
m = 50
m_hat = 50
k = 20
l_f = 10
P_dB = 5
epsilon = 0.05
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pd-fade-opt"))
}

fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{BASE}{extra}")).unwrap();
    path
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect::<Vec<_>>();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    for row in &rows {
        assert_eq!(row.len(), header.len());
    }
    (header, rows)
}

fn cases() -> Vec<(&'static str, &'static str, &'static [&'static str])> {
    vec![
        (
            "point",
            "T = 2000\nmethod = Approx4\nrc = 0.5\n",
            &["rc", "re", "n", "fades_full", "frac_weight", "p_e", "q", "log10_q", "method"],
        ),
        (
            "optimize",
            "T = 4000\nmethod = Approx4\n",
            &["rc", "re", "n", "p_e", "phi_argument", "log10_q", "optimal", "method"],
        ),
        (
            "sweep-rate",
            "method = Approx4\nrate_hi = 2\nrate_lo = 0.05\nrate_points = 12\n",
            &["overall_rate", "T", "P_dB", "rc_star", "re_star", "n_star", "p_e_star", "log10_q_star", "method"],
        ),
        (
            "sweep-power",
            "method = Approx1\nt_values = 1000, 2000, 4000\nP_dB_values = 1, 5, 10\n",
            &["overall_rate", "T", "P_dB", "rc_star", "re_star", "n_star", "p_e_star", "log10_q_star", "method"],
        ),
        (
            "trajectory",
            "method = Approx4\nre_fixed = 0.862068965517241\nt_values = 2000, 3000, 4000, 8000\n",
            &["overall_rate", "T", "re_fixed", "rc", "log10_q"],
        ),
        (
            "validate-mc",
            "T = 1000\nmethod = Approx4\ntrials = 20000\nseed = 3\n",
            &["rc", "n", "p_e_approx", "p_e_mc", "mc_std_err", "abs_dev", "bound", "within", "method"],
        ),
    ]
}

#[test]
fn every_command_emits_a_reparsable_fixed_schema() {
    let dir = TempDir::new().unwrap();
    for (command, extra, header) in cases() {
        let cfg = write_config(dir.path(), &format!("{command}.conf"), extra);
        let out = dir.path().join(format!("{command}.csv"));
        let o = run(command, &cfg, &out, &[]);
        assert!(o.status.success(), "{command}: {}", String::from_utf8_lossy(&o.stderr));
        let (got, rows) = read_csv(&out);
        assert_eq!(got, header.to_vec(), "{command}");
        assert!(!rows.is_empty(), "{command}");
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.starts_with(command), "{command}: summary `{stdout}`");
        let bytes = std::fs::read(&out).unwrap();
        assert!(!bytes.contains(&b'\r'));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut all = cases();
    all.push(("point", "T = 2000\nmethod = MonteCarlo\nrc = 0.8\ntrials = 70000\nseed = 9\n", &[]));
    for (i, (command, extra, _)) in all.into_iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{i}.conf"), extra);
        let a = dir.path().join(format!("{i}a.csv"));
        let b = dir.path().join(format!("{i}b.csv"));
        assert!(run(command, &cfg, &a, &[]).status.success());
        assert!(run(command, &cfg, &b, &[]).status.success());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{command}");
    }
}

#[test]
fn monte_carlo_output_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "mc.conf", "T = 1000\nmethod = Approx4\ntrials = 50000\nseed = 21\n");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let o = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["validate-mc", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn optimize_summary_reports_optimum() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "o.conf", "T = 4000\nmethod = Approx4\n");
    let o = run("optimize", &cfg, &dir.path().join("o.csv"), &[]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("rc*=0.305") && s.contains("re*=") && s.contains("log10_q*=-26.6175"), "{s}");
    let (_, rows) = read_csv(&dir.path().join("o.csv"));
    assert_eq!(rows.len(), 351);
    assert_eq!(rows.iter().filter(|r| r[6] == "true").count(), 1);
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.conf", "T = 2000\nmethod = Approx4\nrc = 0.8\nseed = 1\ntrials = 30000\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    run("point", &cfg, &a, &["--method", "MonteCarlo"]);
    run("point", &cfg, &b, &["--method", "MonteCarlo", "--seed", "2"]);
    run("point", &cfg, &c, &["--method", "MonteCarlo", "--seed", "2", "--trials", "40000"]);
    let (_, ra) = read_csv(&a);
    let (_, rb) = read_csv(&b);
    let (_, rc) = read_csv(&c);
    assert_eq!(ra[0][8], "MonteCarlo");
    assert_ne!(ra[0][5], rb[0][5]);
    assert_ne!(rb[0][5], rc[0][5]);
}

#[test]
fn csv_to_stdout_moves_summary_to_stderr() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.conf", "T = 2000\nrc = 0.5\n");
    let o = bin().args(["point", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("rc,re,n,"));
    assert!(String::from_utf8(o.stderr).unwrap().contains("point rc=0.5"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.conf");
    std::fs::write(&missing, "m = 50\nm_hat = 50\nk = 20\nT = 2000\nP_dB = 5\nrc = 0.5\n").unwrap();
    let o = run("point", &missing, &dir.path().join("x.csv"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("l_f"));

    let tight = write_config(dir.path(), "tight.conf", "T = 400\nrc = 0.5\n");
    let o = run("point", &tight, &dir.path().join("x.csv"), &[]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("`T`") && err.contains("m_hat <= T / l_f"), "{err}");

    let typo = write_config(dir.path(), "typo.conf", "T = 2000\nrc = 0.5\nepsilom = 0.1\n");
    let o = run("point", &typo, &dir.path().join("x.csv"), &[]);
    assert!(String::from_utf8(o.stderr).unwrap().contains("epsilom"));

    let gated = write_config(dir.path(), "mc.conf", "T = 2000\nmethod = MonteCarlo\n");
    let o = run("optimize", &gated, &dir.path().join("x.csv"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("mc_search"));
}

#[test]
fn validate_mc_fails_loudly_outside_tolerance() {
    let dir = TempDir::new().unwrap();
    // Approx2 ignores the partial fade and sits far from simulation between breakpoints.
    let cfg = write_config(dir.path(), "v.conf", "T = 1000\nmethod = Approx2\ntrials = 20000\nmc_tolerance = 0\n");
    let out = dir.path().join("v.csv");
    let o = run("validate-mc", &cfg, &out, &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
    let (_, rows) = read_csv(&out);
    assert!(rows.iter().any(|r| r[7] == "false"));
}

#[test]
fn infinities_serialize_as_tokens() {
    let dir = TempDir::new().unwrap();
    // At 30 dB no simulated codeword is in outage, so p_e = 0 and q = 0.
    let cfg = dir.path().join("hi.conf");
    std::fs::write(
        &cfg,
        "m = 50\nm_hat = 50\nk = 20\nl_f = 10\nT = 2000\nP_dB = 30\nrc = 0.5\nmethod = MonteCarlo\ntrials = 2000\n",
    )
    .unwrap();
    let out = dir.path().join("hi.csv");
    let o = run("point", &cfg, &out, &["--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let (_, rows) = read_csv(&out);
    assert_eq!(rows[0][5], "0", "{text}");
    assert_eq!(rows[0][7], "-inf");
    let parsed: f64 = rows[0][7].parse().unwrap();
    assert_eq!(parsed, f64::NEG_INFINITY);
}
