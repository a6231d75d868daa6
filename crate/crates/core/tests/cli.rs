use std::process::{Command, Output};

use serde_json::Value;

const SCHEMA: &str = include_str!("../docs/report.schema.json");

fn otplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otplab"))
        .args(args)
        .env_remove("OTPLAB_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

// Enough of JSON Schema for the shipped report schema: type, enum, pattern
// (anchored [01]* only), required, properties, items.
fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let types: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_u64() || value.is_i64(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {types:?}, got {value}"));
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in {allowed:?}"));
        }
    }
    if let (Some(Value::String(p)), Some(s)) = (schema.get("pattern"), value.as_str()) {
        assert_eq!(p, "^[01]*$");
        if !s.chars().all(|c| c == '0' || c == '1') {
            return Err(format!("{path}: {s:?} is not a bitstring"));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing {key}"));
                }
            }
        }
        if let Some(Value::Object(props)) = schema.get("properties") {
            for (k, sub) in props {
                if let Some(v) = obj.get(k) {
                    validate(sub, v, &format!("{path}.{k}"))?;
                }
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(items, v, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_schema(report: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    validate(&schema, report, "$").unwrap();
}

#[test]
fn simulate_xor_chain() {
    let report = json(&otplab(&["simulate", "--scenario", "xor-chain", "--message-bits", "2", "--seed", "7"]));
    assert_schema(&report);
    assert_eq!(report["leakage"]["eve_bits"].as_f64().unwrap(), 1.0);
    assert_eq!(report["leakage"]["secure_bits"].as_f64().unwrap(), 1.0);
    assert!(report["trials"][0]["attack"].is_null());
    assert_eq!(report["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_es_qkd() {
    let report = json(&otplab(&["simulate", "--scenario", "es-qkd", "--pairs", "phi+:psi+", "--seed", "1"]));
    assert_schema(&report);
    let key = report["trials"][0]["key_or_message"].as_str().unwrap();
    assert!(["0010", "0111", "1000", "1101"].contains(&key), "{key}");
    assert_eq!(report["efficiency"]["claimed_bits_per_carrier"].as_f64().unwrap(), 4.0);
    assert!((report["efficiency"]["effective_bits_per_carrier"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn simulate_otp_baseline() {
    let report = json(&otplab(&["simulate", "--scenario", "otp-baseline", "--message-bits", "8", "--seed", "3"]));
    assert_schema(&report);
    assert!(report["leakage"]["eve_bits"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(report["leakage"]["secure_bits"].as_f64().unwrap(), 8.0);
}

#[test]
fn attack_es_qkd_with_plaintext() {
    let report = json(&otplab(&["attack", "--scenario", "es-qkd", "--pairs", "phi+:psi+", "--plaintext", "1010", "--seed", "4"]));
    assert_schema(&report);
    let attack = &report["trials"][0]["attack"];
    // p1⊕p3 = 1⊕1, p2⊕p4 = 0⊕0
    assert_eq!(attack["recovered_parities"], serde_json::json!([[0, 0]]));
    assert_eq!(attack["recovered_parities"], attack["true_parities"]);
    let c = attack["ciphertext"].as_str().unwrap();
    let key = report["trials"][0]["key_or_message"].as_str().unwrap();
    let xor: String = c.chars().zip(key.chars()).map(|(a, b)| if a == b { '0' } else { '1' }).collect();
    assert_eq!(xor, "1010");
    let events = report["trials"][0]["transcript"].as_array().unwrap();
    assert_eq!(events.last().unwrap()["payload"], c);
}

#[test]
fn attack_xor_chain_posterior() {
    let report = json(&otplab(&["attack", "--scenario", "xor-chain", "--message-bits", "2", "--plaintext", "11"]));
    let attack = &report["trials"][0]["attack"];
    assert_eq!(attack["observation"], "0");
    assert_eq!(attack["posterior_support"], serde_json::json!(["00", "11"]));
    assert_eq!(attack["eve_bits"].as_f64().unwrap(), 1.0);
}

#[test]
fn attack_otp_posterior_equals_prior() {
    let report = json(&otplab(&["attack", "--scenario", "otp-baseline", "--message-bits", "4", "--seed", "9"]));
    let attack = &report["trials"][0]["attack"];
    assert_eq!(attack["posterior_equals_prior"], true);
    assert_eq!(attack["posterior"]["entries"].as_object().unwrap().len(), 16);
}

#[test]
fn audit_reproduces_rates() {
    let table = json(&otplab(&["audit"]));
    let rows = table["rows"].as_array().unwrap();
    let rate = |i: usize, k: &str| rows[i][k].as_f64().unwrap();
    assert_eq!(rows[0]["scenario"], "xor-chain");
    assert_eq!((rate(0, "claimed_bits_per_carrier"), rate(0, "effective_bits_per_carrier")), (2.0, 1.0));
    assert_eq!(rows[1]["scenario"], "es-qkd");
    assert_eq!((rate(1, "claimed_bits_per_carrier"), rate(1, "effective_bits_per_carrier")), (4.0, 2.0));
    assert_eq!(rows[2]["scenario"], "otp-baseline");
    assert_eq!(rate(2, "claimed_bits_per_carrier"), rate(2, "effective_bits_per_carrier"));
    assert!(rows.iter().all(|r| r["holevo_ok"] == true));
}

#[test]
fn identical_command_lines_are_byte_identical() {
    let args = ["attack", "--scenario", "es-qkd", "--pairs", "phi+:psi+,phi-:psi-", "--seed", "42", "--trials", "5"];
    let a = otplab(&args);
    let b = otplab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = otplab(&["attack", "--scenario", "es-qkd", "--pairs", "phi+:psi+,phi-:psi-", "--seed", "43", "--trials", "5"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn seed_environment_variable_is_the_default() {
    let base = ["simulate", "--scenario", "es-qkd", "--pairs", "phi+:psi+,phi+:psi+,phi+:psi+", "--trials", "4"];
    let from_env = Command::new(env!("CARGO_BIN_EXE_otplab")).args(base).env("OTPLAB_SEED", "99").output().unwrap();
    let explicit = otplab(&[&base[..], &["--seed", "99"]].concat());
    assert_eq!(from_env.stdout, explicit.stdout);
    assert_eq!(json(&from_env)["config"]["seed"], 99);
    let overridden = Command::new(env!("CARGO_BIN_EXE_otplab"))
        .args(base)
        .args(["--seed", "5"])
        .env("OTPLAB_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&overridden)["config"]["seed"], 5);
}

#[test]
fn text_format_carries_the_same_numbers() {
    let args = ["simulate", "--scenario", "xor-chain", "--message-bits", "4", "--seed", "2"];
    let report = json(&otplab(&args));
    let text = String::from_utf8(otplab(&[&args[..], &["--format", "text"]].concat()).stdout).unwrap();
    for key in ["claimed_bits", "receiver_bits", "eve_bits", "secure_bits"] {
        let line = format!("leakage.{key}: {}", report["leakage"][key]);
        assert!(text.contains(&line), "missing {line:?}");
    }
    assert!(text.contains("efficiency.holevo_ok: true"));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = std::env::temp_dir().join(format!("otplab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = otplab(&["simulate", "--scenario", "otp-baseline", "--message-bits", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["simulate", "--scenario", "xor-chain", "--message-bits", "5"][..],
        &["simulate", "--scenario", "es-qkd", "--pairs", "phi+:zeta"],
        &["simulate", "--scenario", "otp-baseline", "--trials", "0"],
        &["attack", "--scenario", "xor-chain", "--message-bits", "2", "--plaintext", "1x"],
        &["simulate"],
    ] {
        let out = otplab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}
