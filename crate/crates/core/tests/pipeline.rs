use std::path::Path;

use khe_core::analysis::{
    analyze_campaign, verify_index, write_outputs, AnalysisOptions, PodTarget, Stages,
};
use khe_core::config::RunConfig;
use khe_core::ensemble::{
    generate_coeffs, kh_initial_field, run_campaign, CachePolicy, Campaign, CampaignOptions,
    Manifest, MANIFEST_FILE,
};
use khe_core::gas::GasParams;

fn small(tau: f64) -> RunConfig {
    RunConfig {
        m0: 2,
        levels: 2,
        nodes: 7,
        tau: vec![tau],
        t_end: 0.05,
        ..RunConfig::default()
    }
}

fn run(rc: &RunConfig, dir: &Path) -> Manifest {
    run_campaign(
        &rc.campaign(rc.tau[0]),
        &generate_coeffs(1),
        dir,
        CampaignOptions {
            workers: 2,
            cache: CachePolicy::Reuse,
        },
    )
    .unwrap()
}

fn analyze(rc: &RunConfig, campaign: &Path, out: &Path) -> khe_core::analysis::TauReport {
    let c = Campaign::open(campaign).unwrap();
    let opts = AnalysisOptions {
        cweno: rc.cweno(),
        windows: rc.windows().unwrap(),
        ..AnalysisOptions::default()
    };
    let report = analyze_campaign(&c, &opts).unwrap();
    write_outputs(
        std::slice::from_ref(&report),
        Stages::all(),
        out,
        &rc.hash().unwrap(),
    )
    .unwrap();
    report
}

#[test]
fn zero_time_campaign_stores_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let rc = RunConfig {
        levels: 1,
        nodes: 1,
        t_end: 0.0,
        ..small(1.1)
    };
    let m = run(&rc, dir.path());
    assert_eq!(m.records.len(), 1);
    assert!(m.sealed);
    let c = Campaign::open(dir.path()).unwrap();
    let f = c.field(0, 1).unwrap();
    let cfg = rc.campaign(1.1);
    let init = kh_initial_field(
        &cfg.hierarchy().unwrap(),
        1,
        0.0,
        &generate_coeffs(1),
        &cfg.kh,
        &GasParams::default(),
    )
    .unwrap();
    assert_eq!(f.require("rho").unwrap(), init.component(0).as_slice());
    assert_eq!(f.require("mx").unwrap(), init.component(1).as_slice());
}

#[test]
fn interrupted_campaign_recomputes_only_missing_runs() {
    let dir = tempfile::tempdir().unwrap();
    let rc = small(1.1);
    let first = run(&rc, dir.path());
    let victim = first
        .records
        .iter()
        .find(|r| r.xi_index == 3 && r.level == 2)
        .unwrap()
        .clone();
    let bytes = std::fs::read(dir.path().join(&victim.path)).unwrap();

    let mut partial = first.clone();
    partial
        .records
        .retain(|r| !(r.xi_index == 3 && r.level == 2));
    partial.sealed = false;
    std::fs::write(
        dir.path().join(MANIFEST_FILE),
        serde_json::to_string(&partial).unwrap(),
    )
    .unwrap();
    std::fs::remove_file(dir.path().join(&victim.path)).unwrap();
    assert!(Campaign::open(dir.path()).is_err());

    let second = run(&rc, dir.path());
    assert!(second.sealed);
    for r in &first.records {
        let s = second.record(r.xi_index, r.level).unwrap();
        if r.xi_index == 3 && r.level == 2 {
            assert_eq!(std::fs::read(dir.path().join(&s.path)).unwrap(), bytes);
        } else {
            assert_eq!(
                s.wall_time_s, r.wall_time_s,
                "run ({}, {}) was recomputed",
                r.xi_index, r.level
            );
        }
    }
}

#[test]
fn analysis_outputs_are_reproducible_and_indexed() {
    let dir = tempfile::tempdir().unwrap();
    let rc = small(1.1);
    run(&rc, &dir.path().join("c"));
    analyze(&rc, &dir.path().join("c"), &dir.path().join("a"));
    analyze(&rc, &dir.path().join("c"), &dir.path().join("b"));
    for sub in ["a", "b"] {
        assert!(verify_index(&dir.path().join(sub)).unwrap().is_empty());
    }
    let ia = std::fs::read_to_string(dir.path().join("a/index.json")).unwrap();
    let ib = std::fs::read_to_string(dir.path().join("b/index.json")).unwrap();
    assert_eq!(ia, ib);

    let head = |p: &str| {
        std::fs::read_to_string(dir.path().join("a").join(p))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(head("defects.csv"), "M,tau,eps_R,eps_E");
    assert_eq!(head("stats.csv"), "window,quantity,tau,mean,std");
    assert_eq!(head("pod/singular_values.csv"), "target,level,tau,j,s");
    assert_eq!(head("pod/k_rho_raw.csv"), "m,tau=1.1");
    assert_eq!(head("pod/k_tr.csv"), "M,tau=1.1");
    assert_eq!(head("fields/tau1.1/mean_M2_rho.csv"), "x,y,rho");
}

#[test]
fn deterministic_ensemble_has_no_spread() {
    let dir = tempfile::tempdir().unwrap();
    let rc = small(0.0);
    run(&rc, &dir.path().join("c"));
    let report = analyze(&rc, &dir.path().join("c"), &dir.path().join("a"));
    for (q, v) in &report.sigma_max {
        assert!(*v <= 1e-12, "{q}: {v}");
    }
    for t in PodTarget::ALL {
        for m in 1..=2 {
            assert_eq!(report.pod_row(t, m).unwrap().k, 0);
        }
    }
    let r1 = &report.residuals[0];
    assert!(r1.eps_r > 0.0 && report.residuals[1].eps_r == 0.0);
}

#[test]
fn single_level_averages_have_zero_defect() {
    let dir = tempfile::tempdir().unwrap();
    let rc = RunConfig {
        levels: 1,
        ..small(1.1)
    };
    run(&rc, &dir.path().join("c"));
    let report = analyze(&rc, &dir.path().join("c"), &dir.path().join("a"));
    assert_eq!(report.ratio[0].active, 0);
    assert!(report.sigma_max["tr"] <= 1e-12);
    assert!(report.sigma_max["edef"] <= 1e-12);
}
