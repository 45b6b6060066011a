use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tubeflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubeflow"))
        .args(args)
        .current_dir(dir)
        .env("TUBEFLOW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn defaults(dir: &Path) -> String {
    let out = tubeflow(&["defaults"], dir);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let j = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[j].parse().unwrap()).collect()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn constant_profile_gives_constant_series() {
    let tmp = TempDir::new().unwrap();
    let text = defaults(tmp.path()).replace("profile = \"flat-cosine\"", "profile = \"constant\"").replace("a = 0.02\nm = 1\n", "");
    write_config(tmp.path(), "c.toml", &text);
    let out = tubeflow(&["run", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("termination=SteadyState"));
    let series = tmp.path().join("tubeflow-out/series.csv");
    let (header, _) = read_csv(&series);
    assert_eq!(header.join(","), "t,area,volD,Hbar,min_u,max_r,bound,sup_rhs,boundary_hess_residual");
    for name in ["area", "volD", "Hbar", "min_u", "max_r"] {
        let col = column(&series, name);
        assert!(col.windows(2).all(|w| w[0] == w[1]), "{name}: {col:?}");
    }
}

#[test]
fn profile_violating_endpoint_conditions_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let text = defaults(tmp.path()).replace("\"flat-cosine\"", "\"cosine\"");
    write_config(tmp.path(), "bad.toml", &text);
    let out = tubeflow(&["run", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("boundary residual"), "{err}");
    assert!(!err.contains("panicked"));
    assert!(!tmp.path().join("tubeflow-out").exists());

    let lenient = text.replace("strict_boundary = true", "strict_boundary = false").replace("t_end = 1.0", "t_end = 0.01");
    write_config(tmp.path(), "lenient.toml", &lenient);
    let out = tubeflow(&["run", "lenient.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn perturbed_run_has_monotone_area_and_exact_csv() {
    let tmp = TempDir::new().unwrap();
    let text = defaults(tmp.path()).replace("t_end = 1.0", "t_end = 0.2").replace("snapshot_every = 0", "snapshot_every = 100");
    write_config(tmp.path(), "p.toml", &text);
    let out = tubeflow(&["run", "p.toml", "--output", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    let area = column(&dir.join("series.csv"), "area");
    assert!(area.len() > 10);
    assert!(area.windows(2).all(|w| w[1] <= w[0] + 1e-10), "area increased");
    let vol = column(&dir.join("series.csv"), "volD");
    assert!(vol.iter().all(|v| ((v - vol[0]) / vol[0]).abs() < 1e-10));

    // Every number carries 17 significant digits.
    let (_, rows) = read_csv(&dir.join("series.csv"));
    for cell in rows.iter().flatten().filter(|c| *c != "inf") {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{cell}");
    }
    let snaps: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snapshot_"))
        .collect();
    assert!(snaps.len() >= 3 && snaps.contains(&"snapshot_0.000000.csv".to_string()), "{snaps:?}");
    let (header, rows) = read_csv(&dir.join("snapshot_0.000000.csv"));
    assert_eq!(header.join(","), "s,r,rho,u");
    assert_eq!(rows.len(), 129);
    for svg in ["series.svg", "profile.svg"] {
        let text = std::fs::read_to_string(dir.join(svg)).unwrap();
        assert!(text.starts_with("<svg") && text.contains("<polyline") && !text.contains("href"));
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let text = defaults(tmp.path()).replace("t_end = 1.0", "t_end = 0.05");
    write_config(tmp.path(), "p.toml", &text);
    for out in ["a", "b"] {
        assert!(tubeflow(&["run", "p.toml", "--output", out], tmp.path()).status.success());
    }
    for name in ["series.csv", "series.svg", "profile.svg", "snapshot_0.000000.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn lost_tube_exits_with_flow_failure() {
    let tmp = TempDir::new().unwrap();
    let text = defaults(tmp.path()).replace("u_floor = 1e-3", "u_floor = 0.9999");
    write_config(tmp.path(), "lost.toml", &text);
    let out = tubeflow(&["run", "lost.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stdout(&out).contains("termination=TubeLost"));
    assert!(stderr(&out).contains("tube lost"));
}

#[test]
fn missing_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = tubeflow(&["run", "nope.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn check_is_deterministic_and_passes() {
    let tmp = TempDir::new().unwrap();
    let a = tubeflow(&["check", "--seed", "42"], tmp.path());
    let b = tubeflow(&["check", "--seed", "42"], tmp.path());
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("flat limit") && !stdout(&a).contains("FAIL"));
}

#[test]
fn check_rejects_unknown_preset() {
    let tmp = TempDir::new().unwrap();
    let out = tubeflow(&["check", "--preset", "no-such-space"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = tubeflow(&["check", "--preset", "hyperbolic-n3-p1", "--samples", "500"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn presets_are_listed() {
    let tmp = TempDir::new().unwrap();
    let out = stdout(&tubeflow(&["presets"], tmp.path()));
    assert!(out.contains("sphere-n2-p1") && out.contains("su3-so3") && out.contains("needs multiplicities"));
}

fn sweep(tmp: &Path, ranges: &str) -> Vec<Vec<String>> {
    let text = defaults(tmp).replace("t_end = 1.0", "t_end = 0.1") + "\n[sweep]\n" + ranges + "\n";
    write_config(tmp, "s.toml", &text);
    let out = tubeflow(&["sweep", "s.toml", "--output", "sweep"], tmp);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = read_csv(&tmp.join("sweep/sweep.csv"));
    assert_eq!(header.join(","), "run,b,amplitude,r0,termination,final_deviation,volD_drift,steps,message");
    rows
}

#[test]
fn sweep_over_amplitude_starts_at_equilibrium() {
    let tmp = TempDir::new().unwrap();
    let rows = sweep(tmp.path(), "amplitude = [0.0, 0.01]");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][4], "SteadyState");
    assert_eq!(rows[0][7], "0");
    assert_eq!(rows[1][4], "ReachedTEnd");
    assert!(tmp.path().join("sweep/run_0001/series.csv").exists());
}

#[test]
fn sweep_over_b_conserves_volume() {
    let tmp = TempDir::new().unwrap();
    let rows = sweep(tmp.path(), "b = [0.5, 1.0]");
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[4], "ReachedTEnd");
        assert!(row[6].parse::<f64>().unwrap() < 1e-10, "{row:?}");
    }
    assert_ne!(rows[0][5], rows[1][5]);
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = TempDir::new().unwrap();
    let rows = sweep(tmp.path(), "r0 = [0.6]");
    let text = defaults(tmp.path()).replace("t_end = 1.0", "t_end = 0.1");
    write_config(tmp.path(), "one.toml", &text);
    let out = stdout(&tubeflow(&["run", "one.toml", "--output", "one"], tmp.path()));
    let row = &rows[0];
    let expected = format!("termination={} steps={} ", row[4], row[7]);
    assert!(out.starts_with(&expected), "{out}");
    assert!(out.contains(&format!("max|r-mean r|={} volD_drift={}", row[5], row[6])), "{out}");
    assert_eq!(
        std::fs::read(tmp.path().join("one/series.csv")).unwrap(),
        std::fs::read(tmp.path().join("sweep/run_0000/series.csv")).unwrap()
    );
}

#[test]
fn sweep_records_bad_points_and_continues() {
    let tmp = TempDir::new().unwrap();
    let rows = sweep(tmp.path(), "b = [-1.0, 1.0]\nr0 = [-1.0, 0.6]");
    let kinds: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(kinds, ["ConfigError", "ConfigError", "NonPositiveRadius", "ReachedTEnd"]);
    assert!(rows[0][8].contains("invalid model"), "{:?}", rows[0]);
}
