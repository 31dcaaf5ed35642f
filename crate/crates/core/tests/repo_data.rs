use std::path::PathBuf;

use khe_core::config::RunConfig;
use khe_core::ensemble::{generate_coeffs, PerturbationCoeffs};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_coefficients_match_seed_one() {
    let text = std::fs::read_to_string(root().join("data/coeffs.txt")).unwrap();
    assert_eq!(text, generate_coeffs(1).to_text());
    PerturbationCoeffs::from_text(&text)
        .unwrap()
        .validate()
        .unwrap();
}

#[test]
fn shipped_configs_validate() {
    for name in ["desk", "sweep"] {
        let rc = RunConfig::load(&root().join(format!("configs/{name}.toml"))).unwrap();
        rc.validate().unwrap();
        rc.validate_for_analysis().unwrap();
        assert_eq!(rc.seed, 1);
    }
    let desk = RunConfig::load(&root().join("configs/desk.toml")).unwrap();
    assert_eq!(
        desk.hash().unwrap(),
        khe_core::verify::desk_config(1.1).hash().unwrap()
    );
    let sweep = RunConfig::load(&root().join("configs/sweep.toml")).unwrap();
    assert_eq!(sweep.campaign(0.0).hierarchy().unwrap().n(5), 496);
}
