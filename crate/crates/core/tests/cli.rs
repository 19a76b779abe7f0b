use std::path::Path;
use std::process::{Command, Output};

fn corrwitness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrwitness"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn presets_list_and_show() {
    let o = corrwitness(&["presets", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "fig2-sin",
        "fig2-linear",
        "fig3-left",
        "fig3-right",
        "uncorrelated",
    ] {
        assert!(text.contains(name), "{text}");
    }
    let o = corrwitness(&["presets", "show", "fig2-linear"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("phase2 = linear:0.1"), "{}", stdout(&o));
    let o = corrwitness(&["presets", "show", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset"));
}

#[test]
fn sweep_writes_the_curve_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrwitness(&[
        "sweep",
        "--preset",
        "fig2-linear",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("argmax_a=0.1 "), "{}", stdout(&o));
    for f in ["curve.csv", "counts.csv", "estimates.csv", "report.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let trailer = corrwitness::runner::read_trailer(&report).unwrap();
    assert_eq!(trailer["semigroup_violated"], true);
    assert_eq!(trailer["bound_satisfied"], true);
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 102);
}

#[test]
fn overrides_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "[state]\nphase2 = sin:-0.6\n[sweep]\na_stop = 0.5\n").unwrap();
    let out = dir.path().join("run");
    let o = corrwitness(&[
        "sweep",
        "--config",
        path(&cfg),
        "--a-step",
        "0.05",
        "--phase1",
        "linear:-0.05",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 12);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("phase1=linear:-0.05"), "{report}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[state]\nv0 = 0.9\nbogus = 1\n").unwrap();
    let o = corrwitness(&["sweep", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));

    let o = corrwitness(&["sweep", "--v0", "1.5", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = corrwitness(&["tomo", "--projector_set", "12", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = corrwitness(&["sweep", "--a_step", "0", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn tomography_and_bound_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrwitness(&[
        "tomo",
        "--preset",
        "fig3-left",
        "--n_total",
        "10000",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = corrwitness::tomography::read_reconstruction_matrix(std::io::BufReader::new(
        std::fs::File::open(dir.path().join("reconstruction.txt")).unwrap(),
    ))
    .unwrap();
    assert!((2.0 * m[(0, 3)].re - 0.914).abs() < 0.03);

    let o = corrwitness(&["bound", "--random_trials", "5", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("bound.txt")).unwrap();
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("random odd phase"))
            .count(),
        5
    );
}

#[test]
fn fig3_right_keeps_the_hv_sector_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrwitness(&["tomo", "--preset", "fig3-right", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("tomo_report.txt")).unwrap();
    let t = corrwitness::runner::read_trailer(&report).unwrap();
    assert!(t["hv_population"].as_f64().unwrap() <= 0.02);
    assert!(t["vh_population"].as_f64().unwrap() <= 0.02);
    assert_eq!(t["a"], 0.6);
}

#[test]
fn uncorrelated_bound_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrwitness(&[
        "bound",
        "--preset",
        "uncorrelated",
        "--random_trials",
        "0",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("bound.txt")).unwrap();
    let t = corrwitness::runner::read_trailer(&text).unwrap();
    assert_eq!(t[0]["i12_bound"], 0.0);
    assert!(t[0]["max_increase"].as_f64().unwrap() <= 1e-10);
}
