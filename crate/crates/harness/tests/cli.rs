use std::path::Path;
use std::process::Command;

use copyreg_harness::solution::read_solution;
use copyreg_harness::sweep::read_csv;

fn copyreg(args: &[&str], dir: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_copyreg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: [&str; 8] = ["--n", "150", "--d", "6", "--n1", "30", "--gamma-c", "0.2"];

#[test]
fn solve_then_audit_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--out", "x.txt"];
    args.extend(SMALL);
    let summary = copyreg(&args, dir.path());
    assert!(summary.contains("converged=true"), "{summary}");
    let x = read_solution(&dir.path().join("x.txt")).unwrap();
    assert_eq!(x.len(), 6);

    let mut args = vec!["audit", "--solution", "x.txt"];
    args.extend(SMALL);
    let audit = copyreg(&args, dir.path());
    assert!(audit.contains("satisfied=true"), "{audit}");
    assert!(audit.contains("tau_c="));

    let mut args = vec!["verify", "--solution", "x.txt"];
    args.extend(SMALL);
    let report: copyreg::CertificateReport = copyreg(&args, dir.path()).parse().unwrap();
    assert!(report.get("ell_le_4").unwrap().pass);
    assert!(report.get("b_norm_le_11").unwrap().pass);
    // Desk-scale weights are far below the PSD weight bound.
    assert!(!report.get("weight_certificate").unwrap().pass);
}

#[test]
fn sweep_from_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# two cells\nn = 150\nd = 6\nn1 = 30, 60\ngamma_c = 0.5\nbaseline_draws = 4\noutput = ignored.csv\n",
    )
    .unwrap();
    let out = copyreg(
        &[
            "sweep",
            "--config",
            "run.cfg",
            "--gamma-c",
            "0.2",
            "--workers",
            "2",
            "--out",
            "rows.csv",
        ],
        dir.path(),
    );
    assert!(out.contains("2 rows"), "{out}");
    assert!(!dir.path().join("ignored.csv").exists());
    let rows = read_csv(&dir.path().join("rows.csv")).unwrap();
    assert_eq!(rows.iter().map(|r| r.n1).collect::<Vec<_>>(), vec![30, 60]);
    assert!(rows.iter().all(|r| r.gamma_c == 0.2 && r.converged));
}

#[test]
fn approximate_mode_solves() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--mode", "approx"];
    args.extend(SMALL);
    let summary = copyreg(&args, dir.path());
    assert!(summary.starts_with("mode=approx"));
    assert!(summary.contains("converged=true"), "{summary}");
}

#[test]
fn bad_flags_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--mode", "fast"],
        vec!["solve", "--n", "10", "--n1", "10"],
        vec!["audit", "--solution", "missing.txt"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_copyreg"))
            .args(&args)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
    }
}
