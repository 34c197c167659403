//! End-to-end runs of the `bundle-reduction` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bundle-reduction"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn rows<'a>(v: &'a Value, quantity: &str) -> Vec<&'a Value> {
    v["rows"].as_array().unwrap().iter().filter(|r| r["quantity"] == quantity).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn flat_report_is_all_zero() {
    let o = run(&["report", "--scenario", "flat_torus_u1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    for q in ["r_p_direct", "r_p_nonholonomic", "hr", "r_g", "f_sq", "jsq", "jtilde_coords", "jtilde_geom", "residual_decomposition"] {
        let rs = rows(&v, q);
        assert_eq!(rs.len(), 3, "{q}");
        for r in rs {
            assert!(r["value"].as_f64().unwrap().abs() <= 1e-8, "{r}");
            assert!(!r["provenance"].as_str().unwrap().is_empty());
        }
    }
}

#[test]
fn polar_report_gives_closed_form_jtilde() {
    let o = run(&["report", "--scenario", "polar_plane_u1", "--points", "0.5,0;1,0;2,0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for q in ["jtilde_coords", "jtilde_geom"] {
        let got: Vec<f64> = rows(&v, q).iter().map(|r| r["value"].as_f64().unwrap()).collect();
        for (g, want) in got.iter().zip([-4.0, -1.0, -0.25]) {
            assert!((g - want).abs() <= 1e-6 * want.abs(), "{q}: {g} vs {want}");
        }
        for r in rows(&v, q) {
            assert_eq!(r["pass"], true);
            assert!(r["provenance"].as_str().unwrap().starts_with("closed form"));
        }
    }
}

#[test]
fn impossible_tolerance_is_a_numeric_failure() {
    let o = run(&["report", "--scenario", "polar_plane_u1", "--tolerance", "1e-20"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["pass"], false);
    assert!(v["n_failed"].as_u64().unwrap() > 0);
}

#[test]
fn hopf_verify_passes_only_with_the_recorded_sign() {
    let o = run(&["verify", "--scenario", "hopf_s3", "--random-points", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(rows(&v, "decomposition")[0]["pass"], true);
    assert_eq!(rows(&v, "eps_f")[0]["value"], -1.0);
    let o = run(&["verify", "--scenario", "hopf_s3", "--random-points", "0", "--eps-f", "+1"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(rows(&v, "decomposition")[0]["pass"], false);
}

#[test]
fn flat_verify_passes_everything() {
    let o = run(&["verify", "--scenario", "flat_torus_u1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn corrupted_scenario_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/hopf_s3.json")).unwrap();
    let cases = [
        ("truncated.json", good[..good.len() / 2].to_string()),
        ("extra_key.json", good.replacen("\"eps_f\"", "\"colour\": 1, \"eps_f\"", 1)),
        ("bad_name.json", good.replacen("hopf_s3", "hopf_s5", 1)),
        ("bad_sign.json", good.replacen("\"eps_f\": -1.0", "\"eps_f\": 0.5", 1)),
        ("no_provenance.json", r#"{"scenario":"hopf_s3","eps_f":-1.0,"oracles":[{"quantity":"hr","point":[1,0.5,0],"value":8,"tolerance":1e-5,"provenance":""}]}"#.into()),
    ];
    for (name, text) in cases {
        let p = write(dir.path(), name, &text);
        let o = run(&["verify", "--scenario-file", p.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let o = run(&["verify", "--scenario-file", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn a_scenario_file_replaces_the_builtin_table() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/polar_plane_u1.json")).unwrap();
    let p = write(dir.path(), "polar.json", &good);
    let o = run(&["report", "--scenario-file", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    // a wrong oracle value is caught
    let wrong = good.replacen("\"value\": -4.0", "\"value\": -4.5", 1);
    let p = write(dir.path(), "wrong.json", &wrong);
    let o = run(&["report", "--scenario-file", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = run(&["report", "--scenario", "hopf_s3", "--scenario-file", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(dir.path(), "zero.json", r#"{"scenario":"flat_torus_u1","n_paths":0}"#);
    let unknown = write(dir.path(), "unknown.json", r#"{"scenario":"flat_torus_u1","npaths":10}"#);
    let wrong_cmd = write(dir.path(), "cmd.json", r#"{"command":"report","scenario":"flat_torus_u1"}"#);
    for args in [
        vec!["simulate", "--config", zero.to_str().unwrap()],
        vec!["simulate", "--scenario", "flat_torus_u1", "--paths", "0"],
        vec!["simulate", "--config", unknown.to_str().unwrap()],
        vec!["simulate", "--config", wrong_cmd.to_str().unwrap()],
        vec!["report", "--scenario", "klein_bottle"],
        vec!["report"],
        vec!["report", "--scenario", "polar_plane_u1", "--points", "1,0.3"],
        vec!["report", "--scenario", "polar_plane_u1", "--points", "-1,0"],
        vec!["report", "--scenario", "polar_plane_u1", "--points", "1,0,0"],
        vec!["report", "--scenario", "polar_plane_u1", "--eps-f", "2"],
        vec!["simulate", "--scenario", "flat_torus_u1", "--dt", "-0.1"],
        vec!["simulate", "--scenario", "flat_torus_u1", "--test-function", "sin"],
        vec!["explode"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn flat_simulation_satisfies_the_reduction_relation() {
    let o = run(&["simulate", "--scenario", "flat_torus_u1", "--paths", "20000", "--dt", "0.01", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let z = rows(&v, "reduction_relation_z")[0]["value"].as_f64().unwrap();
    assert!(z < 3.0);
    for q in ["pairing_reduced_sigma", "pairing_original"] {
        let r = rows(&v, q)[0];
        assert_eq!(r["pass"], true, "{r}");
        assert_eq!(r["n_paths"], 20000);
        assert_eq!(r["n_killed"], 0);
        assert!(r["seed"].is_u64());
    }
    assert_eq!(rows(&v, "pairing_reduced_m_no_prefactor")[0]["pass"], Value::Null);
}

#[test]
fn polar_simulation_matches_the_bessel_oracle() {
    let o = run(&["simulate", "--scenario", "polar_plane_u1", "--paths", "4000", "--dt", "0.01", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let r = rows(&v, "pairing_reduced_sigma")[0];
    assert!(r["provenance"].as_str().unwrap().contains("Bessel"));
    let (val, se, oracle) = (r["value"].as_f64().unwrap(), r["standard_error"].as_f64().unwrap(), r["oracle"].as_f64().unwrap());
    assert!((val - oracle).abs() <= 3.0 * se, "{val} ± {se} vs {oracle}");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"scenario":"polar_plane_u1","n_paths":300,"dt":0.02,"t":0.2,"seed":9,"format":"csv","out":"a.csv"}"#,
    );
    assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap()])), 0);
    let b = dir.path().join("b.csv");
    assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])), 0);
    let (a, b) = (std::fs::read(dir.path().join("a.csv")).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let other = dir.path().join("c.csv");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "10", "--out", other.to_str().unwrap()]);
    assert_ne!(a, std::fs::read(other).unwrap());

    let j1 = run(&["report", "--scenario", "hopf_s3", "--random-points", "2"]);
    let j2 = run(&["report", "--scenario", "hopf_s3", "--random-points", "2"]);
    assert_eq!(j1.stdout, j2.stdout);
}

#[test]
fn csv_output_has_the_documented_columns() {
    let o = run(&["report", "--scenario", "polar_plane_u1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "command,scenario,quantity,point,value,standard_error,oracle,residual,tolerance,pass,provenance,n_paths,n_killed,n_excluded,seed"
    );
    let jt = lines.find(|l| l.contains(",jtilde_coords,2.0000000000000000e0 ")).unwrap();
    let value = jt.split(',').nth(4).unwrap();
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{value}");
    assert!((value.parse::<f64>().unwrap() + 0.25).abs() < 1e-6);
}
