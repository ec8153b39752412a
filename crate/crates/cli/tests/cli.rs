use std::path::{Path, PathBuf};
use std::process::Command;

use phipp::datasets::SimulationDesign;
use phipp_cli::report::{read_grid_path, write_grid_path};
use phipp_cli::{cmd_realdata, cmd_sim, cmd_test, RunConfig, Simulation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn phipp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_phipp")).args(args).output().expect("binary runs")
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `value` against the draft-07 keywords used by the shipped schema.
fn validate(value: &Value, schema: &Value, root: &Value, at: &str, errors: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/definitions/").expect("local definition reference");
        return validate(value, &root["definitions"][name], root, at, errors);
    }
    if let Some(t) = schema.get("type") {
        let allowed: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => panic!("bad type keyword"),
        };
        let ok = allowed.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            other => panic!("unsupported type {other}"),
        });
        if !ok {
            errors.push(format!("{at}: expected {allowed:?}, found {value}"));
            return;
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            errors.push(format!("{at}: {value} not in {options:?}"));
        }
    }
    if let Some(x) = value.as_f64() {
        let bound = |k: &str| schema.get(k).and_then(Value::as_f64);
        if bound("minimum").is_some_and(|b| x < b)
            || bound("maximum").is_some_and(|b| x > b)
            || bound("exclusiveMinimum").is_some_and(|b| x <= b)
            || bound("exclusiveMaximum").is_some_and(|b| x >= b)
        {
            errors.push(format!("{at}: {x} out of range"));
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                errors.push(format!("{at}: fewer than {min} items"));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(item, s, root, &format!("{at}[{i}]"), errors);
            }
        }
    }
    if let Some(obj) = value.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                errors.push(format!("{at}: missing `{key}`"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, v) in obj {
            let path = format!("{at}.{key}");
            match (props.and_then(|p| p.get(key)), schema.get("additionalProperties")) {
                (Some(s), _) => validate(v, s, root, &path, errors),
                (None, Some(Value::Bool(false))) => errors.push(format!("{path}: not allowed")),
                (None, Some(s @ Value::Object(_))) => validate(v, s, root, &path, errors),
                (None, _) => {}
            }
        }
    }
}

fn schema_errors(report: &Value) -> Vec<String> {
    let s = schema();
    let mut errors = Vec::new();
    validate(report, &s, &s, "$", &mut errors);
    errors
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn sim2_csv(dir: &Path, seed: u64) -> PathBuf {
    let data = SimulationDesign::SIM2.sample(50, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let path = dir.join(format!("sim2_{seed}.csv"));
    write_csv(
        &path,
        "id,gumbel,exponential",
        (0..data.nrows()).map(|i| format!("r{i},{},{}", data[(i, 0)], data[(i, 1)])),
    );
    path
}

#[test]
fn validator_catches_schema_violations() {
    let good: Value = serde_json::from_str(
        &cmd_sim(Simulation::Sim2, 40, &RunConfig::default(), false).unwrap().report.to_json().unwrap(),
    )
    .unwrap();
    assert!(schema_errors(&good).is_empty());
    let mut bad = good.clone();
    bad["steps"][0]["p_value"] = Value::from(1.5);
    bad["metadata"]["extra"] = Value::from(1);
    bad.as_object_mut().unwrap().remove("verdict");
    bad["config"]["mode"] = Value::from("diagonal");
    assert_eq!(schema_errors(&bad).len(), 4, "{:?}", schema_errors(&bad));
}

#[test]
fn every_command_emits_schema_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = sim2_csv(dir.path(), 1);
    let outputs = [
        phipp(&["sim", "sim1", "--seed", "4", "--json"]),
        phipp(&["sim", "sim2", "--n", "80", "--divergence", "hellinger", "--json"]),
        phipp(&["test", "--input", input.to_str().unwrap(), "--mode", "independence", "--q-mode", "strict", "--json"]),
        phipp(&["realdata", "--grid-res", "10", "--out", dir.path().join("rd.json").to_str().unwrap(), "--json"]),
    ];
    for out in outputs {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        let errors = schema_errors(&report);
        assert!(errors.is_empty(), "{errors:#?}");
    }
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = sim2_csv(dir.path(), 2);
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    for out in [&first, &second] {
        let o = phipp(&[
            "test",
            "--input",
            input.to_str().unwrap(),
            "--seed",
            "17",
            "--grid",
            "--grid-res",
            "12",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let grid_a = std::fs::read(dir.path().join("a_grid_discovered.csv")).unwrap();
    let grid_b = std::fs::read(dir.path().join("b_grid_discovered.csv")).unwrap();
    assert_eq!(grid_a, grid_b);

    let s1 = phipp(&["sim", "sim1", "--seed", "5", "--json"]).stdout;
    let s2 = phipp(&["sim", "sim1", "--seed", "5", "--json"]).stdout;
    assert_eq!(s1, s2);
    assert_ne!(s1, phipp(&["sim", "sim1", "--seed", "6", "--json"]).stdout);
}

#[test]
fn written_grids_read_back_bit_exactly() {
    let cfg = RunConfig { divergence: phipp::PhiSpec::KullbackLeibler, grid_resolution: 15, ..RunConfig::default() };
    let out = cmd_realdata(&cfg).unwrap();
    assert_eq!(out.grids.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    for (name, grid) in &out.grids {
        let path = dir.path().join(format!("{name}.csv"));
        write_grid_path(grid, &path).unwrap();
        assert_eq!(&read_grid_path(&path).unwrap(), grid);
    }
}

#[test]
fn empty_csv_is_reported_at_row_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    let out = phipp(&["test", "--input", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 1"), "{stderr}");
}

#[test]
fn malformed_inputs_name_the_offending_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    write_csv(&path, "a,b", (0..30).map(|i| if i == 10 { "1.0,n/a".to_owned() } else { format!("{i},{}", i * 2) }));
    let err = format!("{:#}", cmd_test(&path, &RunConfig::default(), false).unwrap_err());
    assert!(err.contains("row 12, column 2 (b)"), "{err}");

    write_csv(&path, "a,b", (0..5).map(|i| format!("{i},{i}")));
    let err = format!("{:#}", cmd_test(&path, &RunConfig::default(), false).unwrap_err());
    assert!(err.contains("at least 20"), "{err}");

    let missing = phipp(&["test", "--input", dir.path().join("nope.csv").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot open"));
}

#[test]
fn simulated_independent_data_passes_the_independence_test_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { mode: phipp::PursuitMode::Independence, ..RunConfig::default() };
    let accepted = (0..100)
        .filter(|&s| {
            let input = sim2_csv(dir.path(), 100 + s);
            let cfg = RunConfig { seed: s, ..cfg.clone() };
            cmd_test(&input, &cfg, false).unwrap().report.verdict
        })
        .count();
    assert!(accepted >= 70, "{accepted}/100");
}

#[test]
fn sim2_defaults_conclude_independence() {
    let accepted = (0..100)
        .filter(|&s| {
            cmd_sim(
                Simulation::Sim2,
                50,
                &RunConfig { seed: s, mode: phipp::PursuitMode::Independence, ..RunConfig::default() },
                false,
            )
            .unwrap()
            .report
            .verdict
        })
        .count();
    assert!(accepted >= 70, "{accepted}/100");
}

#[test]
fn report_echoes_the_effective_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = phipp(&[
        "realdata",
        "--seed",
        "3",
        "--grid-res",
        "8",
        "--alpha",
        "0.95",
        "--json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["divergence"], "kl");
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["config"]["alpha"], 0.95);
    assert_eq!(report["metadata"]["rows"], 143);
    let q = report["metadata"]["q_alpha"].as_f64().unwrap();
    assert!((q - 1.6448536269514722).abs() < 1e-9);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(&path).unwrap());
    let order = ["command", "config", "steps", "verdict", "directions", "flat_copula", "factorization", "metadata"];
    let at: Vec<usize> = order.iter().map(|k| text.find(&format!("\n  \"{k}\":")).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{at:?}");
}
