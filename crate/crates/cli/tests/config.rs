use std::path::Path;

use sdt_cli::config::{DiffusionSpec, Experiment, KappaSpec};
use sdt_cli::{parse_config_str, ConfigError};

fn parse(text: &str) -> Result<sdt_cli::RunConfig, ConfigError> {
    parse_config_str(text, Path::new("test.json"))
}

fn invalid_key(text: &str) -> &'static str {
    match parse(text) {
        Err(ConfigError::Invalid { key, .. }) => key,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn compatibility_defaults() {
    let cfg = parse(r#"{"experiment": "compatibility"}"#).unwrap();
    assert_eq!(cfg.experiment, Experiment::Compatibility);
    assert_eq!((cfg.k, cfg.ell), (2, 1));
    assert_eq!(cfg.beta_f, 40.0);
    assert_eq!(cfg.beta_c, 6.0);
    assert_eq!((cfg.mesh.nx, cfg.mesh.ny), (12, 12));
    assert!(matches!(cfg.kappa, KappaSpec::Constant(_)));
    assert!(matches!(cfg.diffusion, DiffusionSpec::Matrix(_)));
}

#[test]
fn degrees_default_to_the_compatible_pair() {
    let cfg = parse(r#"{"experiment": "convergence", "k": 3}"#).unwrap();
    assert_eq!(cfg.ell, 2);
    let cfg = parse(r#"{"experiment": "convergence", "ell": 2}"#).unwrap();
    assert_eq!(cfg.k, 3);
}

#[test]
fn contaminant_presets() {
    let full = parse(r#"{"experiment": "contaminant"}"#).unwrap();
    assert_eq!((full.mesh.nx, full.mesh.ny), (43, 86));
    assert_eq!((full.k, full.ell), (3, 2));
    assert_eq!(full.dt, 1e-3);
    assert_eq!(full.t_final, 10.0);
    assert!(matches!(full.kappa, KappaSpec::Heterogeneous));
    assert!(matches!(full.diffusion, DiffusionSpec::Dispersion { .. }));
    let ci = parse(r#"{"experiment": "contaminant", "preset": "ci"}"#).unwrap();
    assert_eq!((ci.mesh.nx, ci.mesh.ny), (22, 44));
    assert_ne!(full.hash(), ci.hash());
}

#[test]
fn incompatible_degrees_refused() {
    assert_eq!(invalid_key(r#"{"experiment": "compatibility", "k": 2, "ell": 2}"#), "ell");
    assert_eq!(invalid_key(r#"{"experiment": "convergence", "k": 2, "ell": 2}"#), "ell");
}

#[test]
fn nonpositive_penalty_rejected() {
    assert_eq!(invalid_key(r#"{"experiment": "compatibility", "beta_c": -1}"#), "beta_c");
    assert_eq!(invalid_key(r#"{"experiment": "compatibility", "beta_f": 0}"#), "beta_f");
}

#[test]
fn invalid_values_rejected() {
    assert_eq!(invalid_key(r#"{"experiment": "custom", "phi_darcy": 1.5}"#), "phi_darcy");
    assert_eq!(invalid_key(r#"{"experiment": "convergence", "ladder": [4, 8]}"#), "ladder");
    assert_eq!(invalid_key(r#"{"experiment": "compatibility", "dt": 0.3}"#), "dt");
    assert_eq!(invalid_key(r#"{}"#), "experiment");
}

#[test]
fn unknown_key_rejected() {
    assert!(matches!(parse(r#"{"experiment": "compatibility", "betaf": 3}"#), Err(ConfigError::Parse { .. })));
    assert!(matches!(parse(r#"{"experiment": "sideways"}"#), Err(ConfigError::Parse { .. })));
}

#[test]
fn hash_is_deterministic_and_sensitive() {
    let a = parse(r#"{"experiment": "compatibility", "k": 2}"#).unwrap();
    let b = parse(r#"{"k": 2, "experiment": "compatibility"}"#).unwrap();
    let c = parse(r#"{"experiment": "compatibility", "beta_c": 7}"#).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    assert_ne!(a.hash(), c.hash());
    let d = parse(r#"{"experiment": "compatibility", "output": "elsewhere"}"#).unwrap();
    assert_eq!(a.hash(), d.hash(), "the output directory does not affect results");
    assert!(a.provenance()[0].contains(&a.hash()));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            sdt_cli::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}
