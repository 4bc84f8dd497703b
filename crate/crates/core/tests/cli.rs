//! End-to-end runs of the `berwald2d` binary on the bundled scenarios.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use berwald_core::cli::{self, Scenario};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.conf"))
}

fn run(cmd: &str, name: &str, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_berwald2d"))
        .arg(cmd)
        .arg("--config")
        .arg(scenario_path(name))
        .args(extra)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&run("verify", "verify_euclidean", &[])), 0);
    assert_eq!(code(&run("verify", "verify_hyperbolic", &[])), 0);
    let neg = run("verify", "verify_hyperbolic_zero", &[]);
    assert_eq!(code(&neg), 1);
    let line = stdout(&neg).lines().find(|l| l.contains("divergence residual (max)")).unwrap().to_string();
    let value: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-6, "{line}");
}

#[test]
fn config_and_domain_errors() {
    assert_eq!(code(&run("verify", "bad_syntax", &[])), 2);
    assert_eq!(code(&run("transport", "bad_domain", &[])), 3);
    assert_eq!(code(&run("verify", "does_not_exist", &[])), 2);
    assert_eq!(code(&run("torus", "verify_euclidean", &[])), 2);
    assert_eq!(code(&run("figure", "verify_euclidean", &[])), 2);
    assert_eq!(code(&run("transport", "fig1", &["--steps", "0"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_berwald2d")).arg("verify").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_length_curve_echoes_input() {
    let o = run("transport", "transport_point", &[]);
    assert_eq!(code(&o), 0);
    let r = rows(&stdout(&o));
    assert_eq!(r, vec![vec![0.0, 0.5, -0.25, 0.3, 0.7]]);
}

#[test]
fn transport_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("transport", "transport_fig3", &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("transport_fig3_transport.csv")).unwrap();
    assert!(csv.starts_with("t,c1,c2,X1,X2,F\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 401);
    assert!(r.windows(2).all(|w| w[1][0] > w[0][0]));
    for row in &r {
        assert!((row[5] - r[0][5]).abs() < 1e-6);
        let y = row[0] + 1.0;
        assert!((row[3] - y * y.ln().cos()).abs() < 1e-8 && (row[4] - y * y.ln().sin()).abs() < 1e-8);
    }
    // 17 significant digits
    let first = csv.lines().nth(2).unwrap().split(',').next().unwrap();
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn steps_flag_overrides_config() {
    let o = run("transport", "transport_fig3", &["--steps", "10"]);
    assert_eq!(rows(&stdout(&o)).len(), 21);
}

fn figure_files(name: &str, dir: &Path, extra: &[&str]) -> Vec<(String, Vec<u8>)> {
    let mut args = vec!["--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run("figure", name, &args);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn figures_are_byte_identical_across_runs() {
    for name in ["fig1", "fig2", "fig3", "fig4"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = figure_files(name, a.path(), &[]);
        assert_eq!(fa.len(), 3);
        assert_eq!(fa, figure_files(name, b.path(), &[]), "{name}");
    }
}

#[test]
fn svg_uses_subset_and_closed_outlines() {
    let out = cli::run(cli::Command::Figure, &Scenario::from_file(&scenario_path("fig4")).unwrap()).unwrap();
    let svg = out.file("fig4.svg").unwrap();
    let mut outlines = 0;
    for line in svg.lines().skip(1) {
        let t = line.trim_start();
        assert!(["<path ", "<circle ", "<line ", "</svg>"].iter().any(|p| t.starts_with(p)), "{t}");
        if t.starts_with("<path") && !t.contains("#777777") {
            let d = t.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
            let pts: Vec<&str> = d.split(['M', 'L']).map(str::trim).filter(|s| !s.is_empty()).collect();
            assert_eq!(pts.first(), pts.last());
            outlines += 1;
        }
    }
    // eight solid outlines plus the dashed same-level variants that exist
    assert!(outlines >= 8 && svg.contains("stroke-dasharray"));
    let frames = rows(out.file("fig4_frames.csv").unwrap());
    assert_eq!(frames.len(), 8);
    assert!(frames.windows(2).all(|w| w[1][1] > w[0][1]));
}

#[test]
fn single_frame_is_the_base_ellipse() {
    let mut s = Scenario::from_file(&scenario_path("fig1")).unwrap();
    s.figure.times = None;
    s.figure.frames = 1;
    let (frames, _) = cli::figure_frames(&s).unwrap();
    assert_eq!(frames.len(), 1);
    assert_eq!(frames[0].t, 0.0);
    assert_eq!(frames[0].focal(), [1.0, 0.0]);
    let pts = frames[0].indicatrix.boundary(360);
    // symmetric about both axes: angle a and its mirror images
    for i in 0..90 {
        let (p, q, r) = (pts[i], pts[180 - i], pts[(360 - i) % 360]);
        assert!((p[0] + q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
        assert!((p[0] - r[0]).abs() < 1e-10 && (p[1] + r[1]).abs() < 1e-10);
    }
}

#[test]
fn torus_scenarios() {
    assert_eq!(code(&run("torus", "torus_flat", &[])), 0);
    let o = run("torus", "torus_conformal", &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let bad = run("torus", "torus_misdeclared", &[]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).lines().any(|l| l.contains("periodicity") && l.ends_with("FAIL")));
}
