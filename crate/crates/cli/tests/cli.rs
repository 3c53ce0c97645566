use std::path::Path;
use std::process::{Command, Output};

fn relmodes(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmodes"))
        .args(args)
        .env("RELMODES_OUT", out)
        .output()
        .expect("binary runs")
}

#[test]
fn lists_required_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = relmodes(&["list-examples"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "trivial-point",
        "weinstein-2modes",
        "irrational-2modes",
        "s1-weights-1-minus1",
        "s1-weights-1-1-minus1",
        "negative-control-noninvariant",
    ] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn trivial_point_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = relmodes(&["run-example", "trivial-point"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let json = std::fs::read_to_string(dir.path().join("trivial-point.check-re.json")).unwrap();
    assert!(json.contains("\"PositiveDefiniteSlice\""));
    assert!(json.contains("\"scenario_sha256\""));
    assert!(dir.path().join("trivial-point.check-re.txt").exists());
}

#[test]
fn empty_level_exits_with_infrastructure_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = relmodes(&["run-example", "empty-level"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("zero level"));
}

#[test]
fn noninvariant_control_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = relmodes(&["run-example", "negative-control-noninvariant"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invariance residual"));
}

#[test]
fn file_subcommand_selects_experiment_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let show = relmodes(&["run-example", "s1-relative-equilibrium", "--show"], dir.path());
    let file = dir.path().join("scenario.txt");
    std::fs::write(&file, &show.stdout).unwrap();
    let out = dir.path().join("reports");
    let o = relmodes(
        &[
            "reduce",
            file.to_str().unwrap(),
            "--seed",
            "9",
            "--tol",
            "lemma1_flag=1e-4",
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(out.join("s1-relative-equilibrium.reduce.json")).unwrap();
    assert!(json.contains("\"seed\": 9"));
    assert!(json.contains("\"lemma1_flag\": 0.0001"));
}

#[test]
fn parse_errors_report_positions() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(
        &file,
        "n = 2\ngroup.kind = torus\ngroup.weights = 1; x\nexperiment = reduce\n",
    )
    .unwrap();
    let o = relmodes(&["reduce", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 20"), "{err}");
    assert!(err.contains("hamiltonian.terms: missing"), "{err}");
}

#[test]
fn reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = relmodes(&["run-example", "s1-weights-1-minus1", "--jobs", "3"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for ext in ["json", "txt"] {
        let name = format!("s1-weights-1-minus1.census.{ext}");
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
}
