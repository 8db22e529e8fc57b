use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bethe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bethe"))
        .args(args)
        .output()
        .expect("failed to run bethe")
}

fn shipped_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/m2_n8.json")
        .to_string_lossy()
        .into_owned()
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("bethe-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> String {
        self.0.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn plane_wave_config(n: usize) -> String {
    format!(r#"{{"schema_version": 1, "N": {n}, "data": {{"M": 1, "k": [0.7], "theta": {{}}}}}}"#)
}

#[test]
fn shipped_config_verifies() {
    let out = bethe(&["verify", &shipped_config(), "--level", "full"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    assert_eq!(text.matches("PASS").count(), 5);
}

#[test]
fn corrupted_network_fails_verification() {
    let dir = Scratch::new("corrupt");
    let net = dir.path("mps.json");
    assert!(
        bethe(&["build", &shipped_config(), "--format", "mps", "-o", &net])
            .status
            .success()
    );
    assert!(bethe(&["verify", &shipped_config(), "--network", &net])
        .status
        .success());

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    let entry = &mut v["sites"][1]["entries"][0]["re"];
    *entry = Value::from(entry.as_f64().unwrap() + 0.5);
    std::fs::write(&net, v.to_string()).unwrap();
    let out = bethe(&["verify", &shipped_config(), "--network", &net]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL network vs oracle"));
}

#[test]
fn corrupted_terms_fail_verification() {
    let dir = Scratch::new("terms");
    let terms = dir.path("terms.json");
    let out = bethe(&["decompose", &shipped_config(), "-o", &terms]);
    assert!(out.status.success());
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&terms).unwrap()).unwrap();

    std::fs::write(dir.path("terms_only.json"), v["terms"].to_string()).unwrap();
    assert!(bethe(&[
        "verify",
        &shipped_config(),
        "--terms",
        &dir.path("terms_only.json")
    ])
    .status
    .success());
    v["terms"][0]["coeff"]["re"] = Value::from(-1.0);
    std::fs::write(dir.path("terms_only.json"), v["terms"].to_string()).unwrap();
    let out = bethe(&[
        "verify",
        &shipped_config(),
        "--terms",
        &dir.path("terms_only.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL decomposition reconstruction"));
}

#[test]
fn plane_wave_self_overlap_is_n() {
    let dir = Scratch::new("plane");
    for n in [4usize, 64] {
        let cfg = dir.path(&format!("pw{n}.json"));
        std::fs::write(&cfg, plane_wave_config(n)).unwrap();
        for method in ["dense", "mps", "transfer"] {
            let v = stdout_json(&bethe(&["overlap", &cfg, &cfg, "--method", method]));
            let re = v["re"].as_f64().unwrap();
            assert!(
                (re - n as f64).abs() < 1e-10 * n as f64,
                "{method} N={n}: {re}"
            );
            assert_eq!(v["method"], method);
        }
    }
}

#[test]
fn different_particle_numbers_are_orthogonal() {
    let dir = Scratch::new("ortho");
    let a = dir.path("a.json");
    std::fs::write(&a, plane_wave_config(8)).unwrap();
    let v = stdout_json(&bethe(&[
        "overlap",
        &a,
        &shipped_config(),
        "--method",
        "mps",
    ]));
    assert_eq!(v["re"].as_f64(), Some(0.0));
    assert_eq!(v["im"].as_f64(), Some(0.0));
}

#[test]
fn methods_agree_on_configs() {
    let dir = Scratch::new("agree");
    let b = dir.path("b.json");
    let out = bethe(&[
        "random",
        "--m",
        "2",
        "--n",
        "8",
        "--partition",
        "2,2,2,2",
        "--seed",
        "3",
    ]);
    std::fs::write(&b, &out.stdout).unwrap();
    let v = stdout_json(&bethe(&[
        "overlap",
        &shipped_config(),
        &b,
        "--method",
        "all",
    ]));
    assert!(v["max_disagreement"].as_f64().unwrap() < 1e-9);
    assert!(v["results"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r.get("skipped").is_none()));
}

#[test]
fn build_round_trips_to_the_oracle() {
    let dir = Scratch::new("build");
    let cfg = shipped_config();
    let dense = dir.path("dense.json");
    assert!(bethe(&["build", &cfg, "--format", "dense", "-o", &dense])
        .status
        .success());
    for (format, extra) in [
        ("mps", vec![]),
        ("ttn", vec!["--homogeneous"]),
        ("planar", vec!["--tree", "((1,2),3,4)"]),
    ] {
        let net = dir.path(&format!("{format}.json"));
        let mut args = vec!["build", &cfg, "--format", format, "-o", &net];
        args.extend(extra);
        let out = bethe(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = stdout_json(&bethe(&["overlap", &net, &dense, "--method", "dense"]));
        assert!(
            (v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12,
            "{format}"
        );
    }
}

#[test]
fn vacuum_has_bond_dimension_one() {
    let dir = Scratch::new("vacuum");
    let cfg = dir.path("m0.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "N": 5, "data": {"M": 0, "k": [], "theta": {}}}"#,
    )
    .unwrap();
    let out = bethe(&[
        "build",
        &cfg,
        "--format",
        "mps",
        "-o",
        &dir.path("m0_mps.json"),
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max bond 1"), "{text}");
}

#[test]
fn schema_errors_name_the_field() {
    let dir = Scratch::new("schema");
    let cfg = dir.path("bad.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "N": 4, "data": {"M": 2, "k": [0.1, 0.2], "theta": {"2,1": "x"}}}"#)
        .unwrap();
    let out = bethe(&["build", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(r#"config.data.theta["2,1"]"#));

    std::fs::write(&cfg, "{\"schema_version\": 1,\n  \"N\": }").unwrap();
    let err = String::from_utf8_lossy(&bethe(&["build", &cfg]).stderr).into_owned();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn generalized_config_skips_real_only_checks() {
    let dir = Scratch::new("gen");
    let cfg = dir.path("g.json");
    let out = bethe(&[
        "random",
        "--m",
        "2",
        "--n",
        "6",
        "--generalized",
        "--partition",
        "3,3",
    ]);
    std::fs::write(&cfg, &out.stdout).unwrap();
    let out = bethe(&["verify", &cfg]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("SKIP tensor normalization"));
    assert!(text.contains("SKIP circuit fidelity"));
}

#[test]
fn circuit_export_reports_fidelity() {
    let dir = Scratch::new("circuit");
    let file = dir.path("c.json");
    let out = bethe(&[
        "circuit",
        &shipped_config(),
        "--wiring",
        "mixed",
        "--verify",
        "-o",
        &file,
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.contains("depth=2"));
    let f: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("fidelity "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(f > 1.0 - 1e-9);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["gates"].as_array().unwrap().len(), 3);
}

#[test]
fn bench_single_point_is_one_row() {
    let out = bethe(&["bench", "--m", "2", "--n", "16", "--reps", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["M,N,dense_s,mps_s,transfer_s", lines[1]]);
    assert!(lines[1].starts_with("2,16,"));
}

#[test]
fn bench_omits_dense_beyond_oracle_bound() {
    let out = Command::new(env!("CARGO_BIN_EXE_bethe"))
        .args(["bench", "--m", "2", "--n", "64", "--reps", "1"])
        .env("BETHE_ORACLE_MAX", "100")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().nth(1).unwrap().starts_with("2,64,,"), "{text}");
}
