use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiinv"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .unwrap()
}

fn with_file(text: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.scn");
    std::fs::write(&path, text).unwrap();
    let mut all: Vec<&str> = args.to_vec();
    all.push(path.to_str().unwrap());
    run(&all)
}

const PLANE: &str = "total { dim 2 coords x1 x2 metric diag(1, 1) J rows [[0, -1] [1, 0]] }
base { dim 1 coords y metric diag(1) }
map { y = MAP }";

#[test]
fn classify_prints_the_classification_line() {
    let out = run(&["classify", "builtin:example3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "CLASSIFICATION semi_invariant dimD1=2 dimD2=1 dimMu=2\n");
    let out = run(&["classify", "builtin:generic_rotated"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("CLASSIFICATION generic "));
}

#[test]
fn analyze_example3_is_all_pass() {
    let out = run(&["analyze", "builtin:example3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fail=0 not_applicable=0 theorem_violation=0"), "{text}");
    assert!(!text.contains('\x1b'));
}

#[test]
fn json_records_mirror_reports() {
    let out = run(&["analyze", "builtin:umbilical_witness", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    for line in String::from_utf8_lossy(&out.stdout).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["scenario", "check_name", "status", "max_residual", "tolerance", "worst_point", "details"] {
            assert!(keys.contains(&k), "{k} missing in {line}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(with_file(&PLANE.replace("MAP", "x2"), &["analyze"]).status.code(), Some(0));
    assert_eq!(with_file(&PLANE.replace("MAP", "x1 + x2"), &["analyze"]).status.code(), Some(1));
    let bad = with_file(&PLANE.replace("MAP", "x3"), &["analyze"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("'x3'"));
    assert_eq!(with_file(&PLANE.replace("MAP", "(x2"), &["classify"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "builtin:nope"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "/nonexistent.scn"]).status.code(), Some(2));
    let degenerate = PLANE.replace("MAP", "x2").replace("metric diag(1, 1)", "metric diag(0, 1)");
    let out = with_file(&degenerate, &["analyze"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let flat_map = PLANE.replace("MAP", "0 * x1");
    assert_eq!(with_file(&flat_map, &["classify"]).status.code(), Some(3));
}

#[test]
fn flags_change_sampling() {
    let a = run(&["analyze", "builtin:example3", "--json", "--samples", "3"]);
    let first = String::from_utf8_lossy(&a.stdout).lines().next().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["details"].as_array().unwrap().len(), 3);
    let b = run(&["analyze", "builtin:example3", "--json", "--samples", "3", "--seed", "7"]);
    assert_ne!(a.stdout, b.stdout);
    let c = run(&["analyze", "builtin:example3", "--json", "--tol-scale", "2"]);
    let v: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&c.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(v["tolerance"].as_f64().unwrap(), 2e-10);
}

#[test]
fn list_names_every_builtin() {
    let out = run(&["list"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["example3", "anti_invariant_r2", "invariant_r4", "generic_rotated", "product_spheres", "cp1_spaceform", "scaled_fiber", "umbilical_witness", "shear_horizontal"] {
        assert!(text.contains(name), "{name}");
    }
}
