use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spikelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikelab"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn spikelab")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn assert_valid(schema: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = spikelab(&["stability", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(spikelab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_parameters_exit_with_two() {
    assert_eq!(spikelab(&["equilibrium", "--epsilon", "-1"]).status.code(), Some(2));
    assert_eq!(spikelab(&["stability", "--k", "1"]).status.code(), Some(2));
    assert_eq!(spikelab(&["reproduce", "--criteria", "11"]).status.code(), Some(2));
}

#[test]
fn triangle_is_stable() {
    let out = spikelab(&["stability", "--k", "3"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["verdict"], "Stable");
    assert_valid("stability", &v);
}

#[test]
fn square_reports_its_mu_values() {
    let out = spikelab(&["stability", "--k", "4"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let mu: Vec<f64> = v["mu"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let lib = spikelab::stability::mu_spectrum(4).unwrap();
    assert_eq!(mu.len(), lib.len());
    for (a, b) in mu.iter().zip(&lib) {
        assert!((a - b).abs() < 1e-14, "{mu:?} vs {lib:?}");
    }
    assert_valid("stability", &v);
}

#[test]
fn oracle_signs_are_emitted_on_request() {
    let v = json_of(&spikelab(&["stability", "--k", "5", "--oracle"]));
    assert_eq!(v["oracle_signs"].as_array().unwrap().len(), 10);
    assert_valid("stability", &v);
}

#[test]
fn equilibrium_and_groundstate_validate() {
    let v = json_of(&spikelab(&["equilibrium", "--k", "4", "--with-centre"]));
    assert!(v["R_numeric"].as_f64().unwrap() > 0.0);
    assert_valid("equilibrium", &v);

    let dir = tempfile::tempdir().unwrap();
    let out = spikelab(&["groundstate", "--out", dir.path().to_str().unwrap()]);
    let v = json_of(&out);
    assert!((v["w0"].as_f64().unwrap() - 2.39195).abs() < 1e-4);
    assert_valid("groundstate", &v);
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("r,w,w_prime\n"));
}

#[test]
fn nlep_tables_validate() {
    let v = json_of(&spikelab(&["nlep", "--cells", "800", "--tau-scan", "0,0.2,5"]));
    assert_eq!(v["tau_scan"].as_array().unwrap().len(), 3);
    assert!(v["spectrum"]["max_real"].as_f64().unwrap() < 0.0);
    assert_valid("nlep", &v);
    let m1 = json_of(&spikelab(&["nlep", "--mode", "1", "--cells", "800"]));
    assert_valid("nlep", &m1);
}

#[test]
fn simulate_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# short run\nk = 3\nnx = 64\nt_end = 1\nsnapshot_every = 25\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = spikelab(&["simulate", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_valid("simulate", &v);
    assert_eq!(v["final_spikes"], 3);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("final.json")).unwrap()).unwrap();
    assert_valid("snapshot", &sidecar);
    assert_eq!(std::fs::metadata(out_dir.join("final.bin")).unwrap().len(), 2 * 64 * 64 * 8);
    let frames = std::fs::read_dir(out_dir.join("snapshots")).unwrap().count();
    assert_eq!(frames, 2 * v["frames"].as_u64().unwrap() as usize);
    assert!(out_dir.join("track.csv").exists());
}

#[test]
fn simulate_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "k = 3\ncolour = blue\n").unwrap();
    let out = spikelab(&["simulate", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = spikelab(&["simulate", "/nonexistent/run.cfg"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn reproduce_is_deterministic() {
    let args = ["reproduce", "--criteria", "1,2,4,5,6"];
    let (a, b) = (spikelab(&args), spikelab(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_valid("reproduce", &v);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 5);
}

#[test]
fn failing_criterion_exits_with_one() {
    // criterion 3 compares against reference μ values the closed form does not reproduce
    let out = spikelab(&["reproduce", "--criteria", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["criteria"][0]["outcome"], "fail");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn thread_override_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_spikelab"))
        .args(["stability", "--k", "3"])
        .env("SPIKELAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = Command::new(env!("CARGO_BIN_EXE_spikelab"))
        .args(["stability", "--k", "3"])
        .env("SPIKELAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success());
}
