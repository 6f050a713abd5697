use std::path::{Path, PathBuf};
use std::process::Command;

use meanforce::models::{closed_form_state, ModelSpec, Regime};
use meanforce::operator::{max_abs, HermitianOperator};
use meanforce_cli::{run_with, EXIT_CONFIG, EXIT_ERROR, EXIT_INVALID_MARGIN, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/v1")
        .join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("meanforce").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn state(v: &Value) -> HermitianOperator {
    let mut s = v.clone();
    s.as_object_mut().unwrap().remove("min_eigenvalue");
    serde_json::from_value(s).unwrap()
}

fn csv_body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).0, EXIT_OK);
    assert_eq!(run(&["--version"]).0, EXIT_OK);
    assert_eq!(run(&["sweep", "--help"]).0, EXIT_OK);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&[]).0, EXIT_USAGE);
    assert_eq!(
        run(&["weak", "--beta", "1", "--temperature", "2"]).0,
        EXIT_USAGE
    );
    assert_eq!(run(&["weak", "--model", "qutrit"]).0, EXIT_USAGE);
}

#[test]
fn config_errors_exit_65() {
    let dir = std::env::temp_dir().join(format!("meanforce-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cases = [
        ("unknown_key.toml", "beta = 1\nfoo = 2\n"),
        (
            "unknown_model_key.toml",
            "[model]\nkind = \"spin_boson\"\nomega_q = 1\ntheta = 0\ndelta = 1\n",
        ),
        ("both_temps.toml", "beta = 1\ntemperature = 1\n"),
        (
            "bad_bath.toml",
            "[bath]\nform = \"ohmic_exponential\"\nq = -1\ntau_c = 1\n",
        ),
        (
            "bad_grid.toml",
            "[sweep]\nt_min = 2\nt_max = 1\nn_points = 3\n",
        ),
    ];
    for (name, text) in cases {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        let (code, _, err) = run(&["weak", "-c", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG, "{name}: {err}");
    }
    assert_eq!(run(&["weak", "-c", "/nonexistent/run.toml"]).0, EXIT_CONFIG);
    // missing inputs and parameters that do not belong to the model
    assert_eq!(
        run(&["weak", "--beta", "1", "--lambda", "0.1"]).0,
        EXIT_CONFIG
    );
    assert_eq!(
        run(&[
            "weak",
            "--model",
            "v_system",
            "--omega-q",
            "3",
            "--theta",
            "1"
        ])
        .0,
        EXIT_CONFIG
    );
    assert_eq!(
        run(&[
            "weak",
            "--model",
            "v_system",
            "--omega-q",
            "3",
            "--delta",
            "0.1",
            "--beta=-1"
        ])
        .0,
        EXIT_CONFIG
    );
    assert_eq!(run(&["oracle", "--grid", "2by3"]).0, EXIT_CONFIG);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn weak_at_zero_coupling_is_bare_gibbs() {
    let (code, out, _) = run(&[
        "weak",
        "--model",
        "spin_boson",
        "--omega-q",
        "1",
        "--theta",
        "0.785",
        "--beta",
        "1",
        "--lambda",
        "0",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let r = &v["result"];
    assert_eq!(r["validity_margin"].as_f64().unwrap(), 0.0);
    let rho = state(&r["rho"]);
    let tau = state(&r["tau_s"]);
    assert!(max_abs(&(rho.matrix() - tau.matrix())) < 1e-15);
    assert_eq!(v["metadata"]["model"], "spin_boson");
}

#[test]
fn weak_flags_invalid_margin_with_exit_3() {
    let (code, out, err) = run(&[
        "weak",
        "--model",
        "v_system",
        "--omega-q",
        "3",
        "--delta",
        "0.1",
        "--temperature",
        "0.05",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(code, EXIT_INVALID_MARGIN, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["validity"], "invalid");
}

#[test]
fn weak_rejects_two_baths() {
    let (code, _, err) = run(&[
        "weak",
        "--model",
        "two_qubit",
        "--omega-q",
        "1",
        "--lambda-s",
        "1",
        "--beta",
        "1",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("single bath"), "{err}");
}

#[test]
fn ultrastrong_matches_closed_form() {
    let (code, out, _) = run(&[
        "ultrastrong",
        "--model",
        "spin-boson",
        "--omega-q",
        "1",
        "--theta",
        "0.785",
        "--beta",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let rho = state(&v["state"]);
    let closed = closed_form_state(
        &ModelSpec::SpinBoson {
            omega_q: 1.0,
            theta: 0.785,
        },
        1.0,
        Regime::UltrastrongDerived,
    )
    .unwrap();
    assert!(max_abs(&(rho.matrix() - closed.matrix())) < 1e-14);
    assert!(v["caveat"].is_null());
}

#[test]
fn ultrastrong_prints_caveat_at_high_temperature() {
    let (code, out, err) = run(&[
        "ultrastrong",
        "--model",
        "spin_boson",
        "--omega-q",
        "1",
        "--theta",
        "0.3",
        "--beta",
        "1e-4",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("warning"), "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["caveat"].is_string());
}

#[test]
fn ultrastrong_subcommands_check_bath_count() {
    let sb = [
        "--model",
        "spin_boson",
        "--omega-q",
        "1",
        "--theta",
        "0.3",
        "--beta",
        "1",
    ];
    let tq = [
        "--model",
        "two_qubit",
        "--omega-q",
        "1",
        "--lambda-s",
        "1.55",
        "--beta",
        "1",
    ];
    assert_eq!(run(&[&["ultrastrong2"][..], &sb].concat()).0, EXIT_ERROR);
    assert_eq!(run(&[&["ultrastrong"][..], &tq].concat()).0, EXIT_ERROR);
    let (code, out, _) = run(&[
        &["ultrastrong2"][..],
        &tq,
        &["--regime", "ultrastrong-conjectured"],
    ]
    .concat());
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let rho = state(&v["state"]);
    let closed = closed_form_state(
        &ModelSpec::TwoQubit {
            omega_q: 1.0,
            lambda_s: 1.55,
        },
        1.0,
        Regime::UltrastrongConjectured,
    )
    .unwrap();
    assert!(max_abs(&(rho.matrix() - closed.matrix())) < 1e-13);
}

#[test]
fn models_lists_and_matches_fixtures() {
    let (code, out, _) = run(&["models"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let kinds: Vec<&str> = v["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["spin_boson", "v_system", "two_qubit"]);

    let cases: [(&str, &[&str]); 3] = [
        (
            "spin_boson_ultrastrong.json",
            &[
                "--model",
                "spin_boson",
                "--omega-q",
                "1",
                "--theta",
                "0.785",
                "--beta",
                "1",
            ],
        ),
        (
            "two_qubit_conjectured.json",
            &[
                "--model",
                "two_qubit",
                "--omega-q",
                "1",
                "--lambda-s",
                "1.55",
                "--temperature",
                "1.5",
                "--regime",
                "ultrastrong_conjectured",
            ],
        ),
        (
            "v_system_ultrastrong.json",
            &[
                "--model",
                "v_system",
                "--omega-q",
                "3",
                "--delta",
                "0.1",
                "--beta",
                "2",
            ],
        ),
    ];
    for (file, args) in cases {
        let (code, out, _) = run(&[&["models"][..], args].concat());
        assert_eq!(code, EXIT_OK);
        let fixture = std::fs::read_to_string(data(file)).unwrap();
        let (a, b): (Value, Value) = (
            serde_json::from_str(&out).unwrap(),
            serde_json::from_str(&fixture).unwrap(),
        );
        let (sa, sb) = (state(&a["state"]), state(&b["state"]));
        assert!(max_abs(&(sa.matrix() - sb.matrix())) < 1e-14, "{file}");
        assert_eq!(a["metadata"], b["metadata"], "{file}");
    }
}

#[test]
fn v_system_has_no_conjectured_closed_form() {
    let (code, _, err) = run(&[
        "models",
        "--model",
        "v_system",
        "--omega-q",
        "3",
        "--delta",
        "0.1",
        "--beta",
        "1",
        "--regime",
        "ultrastrong_conjectured",
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("unsupported"), "{err}");
}

#[test]
fn sweep_is_deterministic_and_flags_override_file() {
    let cfg = data("vsystem.toml");
    let cfg = cfg.to_str().unwrap();
    let (c1, a, _) = run(&["sweep", "-c", cfg]);
    let (c2, b, _) = run(&["sweep", "-c", cfg]);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert!(!a.contains('\r'));
    let body = csv_body(&a);
    assert_eq!(
        body[0],
        "T,lambda2_g,lambda2_f0,lambda2_f1,lambda2_f2,G,F0,F1,F2,validity_margin"
    );
    assert_eq!(body.len(), 13);
    assert!(a.contains("# t_min = 2.0000000000000001e-1\n"));
    for row in &body[1..] {
        for cell in row.split(',') {
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.len(), 18, "{cell}");
        }
    }

    let (code, c, _) = run(&[
        "sweep",
        "-c",
        cfg,
        "--n-points",
        "3",
        "--spacing",
        "linear",
        "--lambda",
        "0.05",
    ]);
    assert_eq!(code, EXIT_OK);
    let body = csv_body(&c);
    assert_eq!(body.len(), 4);
    assert!(body[2].starts_with("5.1000000000000005e0,"), "{}", body[2]);
    assert!(c.contains("# lambda = 5.0000000000000003e-2\n"));
}

#[test]
fn sweep_columns_per_model() {
    let sb = [
        "--model",
        "spin_boson",
        "--omega-q",
        "1",
        "--theta",
        "0.785",
        "--lambda",
        "0.1",
    ];
    let grid = ["--t-min", "0.5", "--t-max", "2", "--n-points", "3"];
    let (code, out, _) = run(&[&["sweep"][..], &sb, &grid].concat());
    assert_eq!(code, EXIT_OK);
    assert!(csv_body(&out)[0].starts_with("T,sx_gibbs,sz_gibbs,sx_weak,sz_weak"));
    let tq = [
        "--model",
        "two_qubit",
        "--omega-q",
        "1",
        "--lambda-s",
        "1.55",
    ];
    let (code, out, _) = run(&[&["sweep"][..], &tq, &grid].concat());
    assert_eq!(code, EXIT_OK);
    assert!(csv_body(&out)[0].starts_with("T,trace_distance_derived_conjectured"));
    assert_eq!(run(&[&["sweep"][..], &sb].concat()).0, EXIT_CONFIG);
}

#[test]
fn fig1_defaults_flag_the_low_temperature_region() {
    let (code, out, err) = run(&["fig1"]);
    assert_eq!(code, EXIT_INVALID_MARGIN);
    let body = csv_body(&out);
    assert_eq!(body.len(), 81);
    assert!(out.contains("# note: validity margin crosses"));
    let summary: Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(summary["peak_is_interior"], true);
    let (code, _, _) = run(&["fig1", "--t-min", "1", "--t-max", "10", "--n-points", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        run(&[
            "fig1",
            "--model",
            "spin_boson",
            "--omega-q",
            "1",
            "--theta",
            "0"
        ])
        .0,
        EXIT_CONFIG
    );
}

#[test]
fn oracle_single_point_and_grid() {
    let sb = [
        "--model",
        "spin_boson",
        "--omega-q",
        "1",
        "--theta",
        "0.785",
        "--beta",
        "1",
        "--lambda",
        "0.1",
    ];
    let (code, out, _) =
        run(&[&["oracle"][..], &sb, &["--n-modes", "2", "--cutoff", "4"]].concat());
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dimension"], 32);
    assert_eq!(v["result"]["converged"], true);
    assert!(v["trace_distance_to_weak_discrete"].as_f64().unwrap() < 1e-3);

    let cfg = data("spin_boson_oracle.toml");
    let (code, out, _) = run(&["oracle", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let body = csv_body(&out);
    assert_eq!(
        body[0],
        "n_modes,cutoff,lambda,beta,trace_distance_to_weak,trace_distance_to_ultrastrong,truncation_diagnostic"
    );
    assert_eq!(body.len(), 4);
    assert!(body[3].starts_with("2,5,"));

    let (code, _, err) =
        run(&[&["oracle"][..], &sb, &["--n-modes", "6", "--cutoff", "6"]].concat());
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("exceeds the cap"), "{err}");
}

#[test]
fn output_path_and_thread_variable() {
    let path = std::env::temp_dir().join(format!("meanforce-out-{}.json", std::process::id()));
    let bin = env!("CARGO_BIN_EXE_meanforce");
    let status = Command::new(bin)
        .args([
            "models",
            "--model",
            "spin_boson",
            "--omega-q",
            "1",
            "--theta",
            "0.785",
            "--beta",
            "1",
            "-o",
        ])
        .arg(&path)
        .env("MEANFORCE_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["regime"], "ultrastrong_derived");
    std::fs::remove_file(&path).unwrap();

    let status = Command::new(bin)
        .args(["models"])
        .env("MEANFORCE_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
    let status = Command::new(bin).args(["nope"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}
