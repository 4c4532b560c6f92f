//! End-to-end runs of the binary against the bundled configs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use orlicz_obstacle::io::{read_grid, Sidecar};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz-obstacle"))
        .args(args)
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn linear_dirichlet_reproduces_the_datum() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["run"],
        &configs().join("linear_dirichlet.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let u = read_grid(&fs::read_to_string(dir.path().join("solution.grid")).unwrap()).unwrap();
    let l = u.lattice();
    let worst = (0..l.len())
        .map(|k| {
            let x = l.position(k);
            (u.get(k) - (0.3 + 1.7 * x[0] - 0.6 * x[1])).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
    let meta =
        Sidecar::parse(&fs::read_to_string(dir.path().join("solution.meta")).unwrap()).unwrap();
    assert_eq!(meta.get("converged"), Some("true"));
}

/// Projected SOR on the same complementarity problem.
fn psor(psi: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = psi.iter().map(|p| p.max(0.0)).collect();
    let n = u.len();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    loop {
        let mut change: f64 = 0.0;
        for i in 1..n - 1 {
            let next = (-0.9 * u[i] + 1.9 * 0.5 * (u[i - 1] + u[i + 1])).max(psi[i]);
            change = change.max((next - u[i]).abs());
            u[i] = next;
        }
        if change < 1e-15 {
            return u;
        }
    }
}

#[test]
fn shipped_parabola_oracle_matches_a_fresh_psor_solve() {
    let text =
        fs::read_to_string(configs().join("fixtures/parabola_obstacle_1d.oracle.grid")).unwrap();
    let oracle = read_grid(&text).unwrap();
    let l = oracle.lattice();
    let psi: Vec<f64> = (0..l.len())
        .map(|k| {
            let x = l.position(k)[0];
            0.4 - 3.0 * (x - 0.45) * (x - 0.45)
        })
        .collect();
    let fresh = psor(&psi);
    let worst = fresh
        .iter()
        .zip(oracle.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn parabola_obstacle_matches_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["run"],
        &configs().join("parabola_obstacle_1d.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let meta =
        Sidecar::parse(&fs::read_to_string(dir.path().join("solution.meta")).unwrap()).unwrap();
    let diff = meta.get_f64("reference_max_diff").unwrap().unwrap();
    assert!(diff <= 1e-6, "{diff}");
}

const FEASIBLE_HEAD: &str = "\
[phi]
family = power
p = 2
[domain]
shape = rectangle
min = 0, 0
max = 1, 1
h = 1/16
";

#[test]
fn obstacle_above_the_datum_is_an_infeasibility_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(
        &cfg,
        format!("{FEASIBLE_HEAD}[problem]\nboundary = 0\nobstacle = 0.5 - x\n"),
    )
    .unwrap();
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("infeasible"), "{err}");
}

#[test]
fn config_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(
        &cfg,
        format!("{FEASIBLE_HEAD}[problem]\nboundary = 2 * (x + 1\n"),
    )
    .unwrap();
    let o = run(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 10, column 22"), "{err}");
}

#[test]
fn power_conditions_all_hold() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify-conditions"],
        &configs().join("power_conditions.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("conditions.csv"));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["A0", "aInc_1.5", "aDec_2.5", "A1", "A1n"]);
    assert!(rows.iter().all(|r| r[1] == "true"));
}

#[test]
fn double_phase_gap_fails_a1_with_a_witness_ball() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify-conditions"],
        &configs().join("double_phase_gap.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("conditions.csv"));
    let a1 = rows.iter().find(|r| r[0] == "A1").unwrap();
    assert_eq!(a1[1], "false");
    assert!(a1[5].starts_with("ball="), "{}", a1[5]);
}

#[test]
fn variable_exponent_satisfies_a1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify-conditions"],
        &configs().join("variable_exponent.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("conditions.csv"));
    assert!(rows.iter().any(|r| r[0] == "A1" && r[1] == "true"));
}

#[test]
fn annulus_capacity_matches_the_radial_formula() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["capacity"],
        &configs().join("annulus_capacity.cfg"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("capacity.csv"));
    let rel: f64 = rows[0][3].parse().unwrap();
    assert!(rel <= 0.05, "{rel}");
}

/// Small obstacle problem with cheap checks, used for determinism.
const SMALL: &str = "[phi]
family = double_phase
p = 1.5
q = 1.8
a = 0.5 + 0.5*x
[domain]
shape = disk
radius = 1
h = 1/24
[problem]
boundary = 0.3*x + 0.2*y^2
obstacle = 0.25 - (x^2 + y^2)
[diagnostics]
checks = interior-k, interior-mean, boundary
centers = 0.4, 0.3
radii = 0.25, 0.125
boundary_radii = 0.3, 0.15
[run]
seed = 11
";

#[test]
fn same_config_and_seed_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = run(&["run"], &cfg, &a);
    let ob = run(&["run"], &cfg, &b);
    assert_eq!(oa.status.code(), ob.status.code());
    assert!(
        oa.status.code().unwrap() < 3,
        "{}",
        String::from_utf8_lossy(&oa.stderr)
    );
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(
        names
            .iter()
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .count()
            == 3
    );
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn diagnose_overrides_the_configured_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_orlicz-obstacle"))
        .args(["diagnose", "--checks=interior-mean"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        o.status.code().unwrap() < 3,
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("caccioppoli_interior-mean.csv").exists());
    assert!(!out.join("caccioppoli_interior-k.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_orlicz-obstacle"))
        .args(["diagnose", "--checks=harnack"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown check `harnack`"));
}

#[test]
fn grid_scale_refines_the_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_orlicz-obstacle"))
        .args(["run", "--grid-scale", "2"])
        .arg(configs().join("linear_dirichlet.cfg"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let meta =
        Sidecar::parse(&fs::read_to_string(dir.path().join("solution.meta")).unwrap()).unwrap();
    assert_eq!(meta.get_f64("h").unwrap(), Some(1.0 / 128.0));
}

#[test]
fn every_bundled_config_runs_within_a_minute() {
    let cases: [(&str, &str, i32); 7] = [
        ("linear_dirichlet.cfg", "run", 0),
        ("parabola_obstacle_1d.cfg", "run", 0),
        ("annulus_capacity.cfg", "capacity", 0),
        ("power_conditions.cfg", "verify-conditions", 0),
        ("double_phase_gap.cfg", "verify-conditions", 1),
        ("variable_exponent.cfg", "verify-conditions", 0),
        ("disk_obstacle_diagnostics.cfg", "run", 0),
    ];
    let mut bundled: Vec<String> = fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cfg"))
        .collect();
    bundled.sort();
    let mut listed: Vec<String> = cases.iter().map(|c| c.0.to_string()).collect();
    listed.sort();
    assert_eq!(bundled, listed, "every bundled config needs a case here");
    for (name, cmd, code) in cases {
        let dir = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let o = run(&[cmd], &configs().join(name), dir.path());
        let elapsed = start.elapsed();
        assert_eq!(o.status.code(), Some(code), "{name}: {}", stdout(&o));
        assert!(
            elapsed <= Duration::from_secs(60),
            "{name} took {elapsed:?}"
        );
    }
}
