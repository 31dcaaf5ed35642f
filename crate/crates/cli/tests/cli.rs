use std::path::Path;
use std::process::{Command, Output};

use khe_core::ensemble::{Manifest, PerturbationCoeffs};

fn khe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khe"))
        .args(args)
        .current_dir(dir)
        .env_remove("KHE_CACHE_DIR")
        .output()
        .expect("khe runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const TINY: [&str; 6] = ["-M", "1", "-L", "1", "-T", "0"];

#[test]
fn coeffs_are_reproducible_and_protected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&khe(p, &["coeffs", "--out", "a.txt"])), 0);
    assert_eq!(code(&khe(p, &["coeffs", "--out", "b.txt"])), 0);
    let a = std::fs::read(p.join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(p.join("b.txt")).unwrap());
    let parsed = PerturbationCoeffs::load(&p.join("a.txt")).unwrap();
    for row in parsed.a {
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    let refused = khe(p, &["coeffs", "--out", "a.txt", "--seed", "2"]);
    assert_eq!(code(&refused), 2);
    assert_eq!(std::fs::read(p.join("a.txt")).unwrap(), a);
    assert_eq!(
        code(&khe(
            p,
            &["coeffs", "--out", "a.txt", "--seed", "2", "--force"]
        )),
        0
    );
    assert_ne!(std::fs::read(p.join("a.txt")).unwrap(), a);
}

#[test]
fn run_needs_valid_config_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&khe(p, &["run", "--cfl", "1.5"])), 2);
    assert_eq!(code(&khe(p, &["run"])), 2);
    assert!(!p.join("out").exists());
}

#[test]
fn trivial_campaign_has_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&khe(p, &["coeffs"])), 0);
    let mut args = vec!["run"];
    args.extend(TINY);
    let o = khe(p, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::load(&p.join("out/campaigns/tau_1.1")).unwrap();
    assert_eq!(m.records.len(), 1);
    assert!(m.sealed);
}

#[test]
fn cache_dir_comes_from_the_environment_and_flags_beat_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&khe(p, &["coeffs"])), 0);
    std::fs::write(
        p.join("run.toml"),
        "levels = 1\nnodes = 1\nt_end = 0.0\ntau = [0.0]\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_khe"))
        .args(["run", "--config", "run.toml", "-L", "2"])
        .current_dir(p)
        .env("KHE_CACHE_DIR", p.join("cache"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::load(&p.join("cache/tau_0")).unwrap();
    assert_eq!(m.records.len(), 2);
    assert!(!p.join("out/campaigns").exists());
}

#[test]
fn analyze_requires_a_finished_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let o = khe(dir.path(), &["analyze", "-M", "2", "-L", "7"]);
    assert_eq!(code(&o), 3);
    let o = khe(dir.path(), &["analyze", "-L", "3"]);
    assert_eq!(code(&o), 2);
    let o = khe(dir.path(), &["analyze", "--stages", "bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_analyze_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let shape = [
        "-M",
        "2",
        "-L",
        "7",
        "-T",
        "0.05",
        "--tau",
        "0,1.1",
        "--workers",
        "2",
    ];
    assert_eq!(code(&khe(p, &["coeffs"])), 0);
    for cmd in ["run", "analyze", "report"] {
        let mut args = vec![cmd];
        args.extend(shape);
        let o = khe(p, &args);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        if cmd == "report" {
            let text = String::from_utf8_lossy(&o.stdout);
            assert!(text.contains("K_0.95 for rho_raw:"), "{text}");
            assert!(text.contains("tau = 0 "), "{text}");
        }
    }
    let k = std::fs::read_to_string(p.join("out/analysis/pod/k_rho_raw.csv")).unwrap();
    assert!(k.starts_with("m,tau=0,tau=1.1\n1,0,"), "{k}");

    std::fs::write(p.join("out/analysis/defects.csv"), "M,tau,eps_R,eps_E\n").unwrap();
    let o = khe(p, &["report"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("defects.csv"));
}

#[test]
fn verify_reports_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = khe(p, &["verify", "--only", "A3,A4", "--work-dir", "v"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("A3 PASS")));
    assert!(stdout.lines().any(|l| l.starts_with("A4 PASS")));
    let summary = khe_core::verify::load_checks(&p.join("v/verify.json")).unwrap();
    assert_eq!(
        summary.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
        ["A3", "A4"]
    );
    assert_eq!(
        code(&khe(p, &["verify", "--only", "A10", "--work-dir", "v"])),
        2
    );
}

#[test]
fn verify_fails_with_linear_weights() {
    let dir = tempfile::tempdir().unwrap();
    let o = khe(
        dir.path(),
        &[
            "verify",
            "--only",
            "A3",
            "--cweno-mode",
            "linear",
            "--work-dir",
            "v",
        ],
    );
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("A3 FAIL"));
}
