use std::path::{Path, PathBuf};
use std::process::Command;

use approx_median::cli::run;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("approx-median").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn gen(dir: &Path, kind: &str, n: usize) -> String {
    let (code, text, _) = call(&["gen", "--kind", kind, "--inputs", &n.to_string()]);
    assert_eq!(code, 0);
    write(dir, &format!("{kind}{n}.net"), &text)
}

fn schema(name: &str) -> Value {
    let path = format!("{}/schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `required`, `type`, `minimum` and local `$ref`s.
fn conforms(value: &Value, schema: &Value, root: &Value) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return conforms(value, &root["$defs"][name], root);
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_u64() || value.is_i64(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            _ => true,
        };
        if !ok {
            return Err(format!("{value} is not {t}"));
        }
    }
    if let (Some(min), Some(v)) = (schema.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if v < min {
            return Err(format!("{v} < {min}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required {
            let key = key.as_str().unwrap();
            if value.get(key).is_none() {
                return Err(format!("missing key {key}"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (schema.get("properties").and_then(Value::as_object), value.as_object()) {
        for (key, sub) in props {
            if let Some(v) = obj.get(key) {
                conforms(v, sub, root).map_err(|e| format!("{key}: {e}"))?;
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for v in arr {
            conforms(v, items, root)?;
        }
    }
    Ok(())
}

fn assert_schema(text: &str, name: &str) {
    let value: Value = serde_json::from_str(text).unwrap();
    let s = schema(name);
    conforms(&value, &s, &s).unwrap_or_else(|e| panic!("{name}: {e}"));
}

#[test]
fn analyze_mom9_text_and_json() {
    let dir = TempDir::new().unwrap();
    let mom = gen(dir.path(), "mom", 9);
    let (code, text, _) = call(&["analyze", &mom, "--text"]);
    assert_eq!(code, 0);
    assert!(text.contains("Q   = 0.4286 (3/7)"), "{text}");
    assert!(text.contains("dL  = 1") && text.contains("dR  = 1"));
    assert!(text.contains("h0  = 0.5714 (4/7)"));
    let (code, json, _) = call(&["analyze", &mom, "--json"]);
    assert_eq!(code, 0);
    assert_schema(&json, "profile.schema.json");
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["Q"]["num"], "3");
    assert_eq!(v["exact"], false);
}

#[test]
fn analyze_exact_and_errors() {
    let (code, text, _) = call(&["analyze", &data("median9.net")]);
    assert_eq!(code, 0);
    assert!(text.contains("exact median"));
    assert!(text.contains("Q   = 0.0000"));

    let dir = TempDir::new().unwrap();
    let even = write(dir.path(), "even.net", "n 4\ncas 0 1\nout 4\n");
    let (code, _, err) = call(&["analyze", &even]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    let broken = write(dir.path(), "broken.net", "n 3\ncas 0 9\nout 3\n");
    assert_eq!(call(&["analyze", &broken]).0, 2);
    assert_eq!(call(&["analyze", "/nonexistent.net"]).0, 2);
    assert_eq!(call(&["no-such-command"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(call(&["verify", &gen(dir.path(), "median", 9)]).0, 0);
    let (code, text, _) = call(&["verify", &gen(dir.path(), "mom", 25)]);
    assert_eq!(code, 1);
    assert_eq!(text, "approximate dL=4 dR=4\n");
    assert_eq!(call(&["verify", &gen(dir.path(), "sorter", 4)]).0, 2);
}

#[test]
fn cost_report() {
    let (code, json, _) = call(&["cost", &data("median9.net")]);
    assert_eq!(code, 0);
    assert_schema(&json, "cost.schema.json");
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["n_A"].as_u64().unwrap() + v["n_P"].as_u64().unwrap(), 19);
    assert_eq!(call(&["cost", &data("median9.net")]).1, json);

    let dir = TempDir::new().unwrap();
    let id = write(dir.path(), "id.net", "n 1\nout 0\n");
    let (_, json, _) = call(&["cost", &id]);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["C"].as_f64(), Some(0.0));

    let tech = write(dir.path(), "tech.cfg", "a_mx=1\na_cmp=1\na_reg=0.5\n");
    let (code, json, _) = call(&["cost", &data("median9.net"), "--tech", &tech]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&json).unwrap();
    let (na, np, nr) = (v["n_A"].as_f64().unwrap(), v["n_P"].as_f64().unwrap(), v["n_R"].as_f64().unwrap());
    assert_eq!(v["C"].as_f64().unwrap(), 2.0 * na + np + na + np + 0.5 * nr);
    let bad = write(dir.path(), "bad.cfg", "a_mx=zero\n");
    assert_eq!(call(&["cost", &data("median9.net"), "--tech", &bad]).0, 2);
}

#[test]
fn gen_kinds() {
    let count = |text: &str| text.lines().filter(|l| l.starts_with("cas")).count();
    assert_eq!(count(&call(&["gen", "--kind", "sorter", "--inputs", "4"]).1), 5);
    assert_eq!(count(&call(&["gen", "--kind", "mom", "--inputs", "9"]).1), 12);
    assert_eq!(call(&["gen", "--kind", "median", "--inputs", "1"]).1, "n 1\nout 0\n");
    assert_eq!(call(&["gen", "--kind", "mom", "--inputs", "7"]).0, 2);
}

#[test]
fn oracle_modes_agree_with_analyze() {
    let dir = TempDir::new().unwrap();
    let mom9 = gen(dir.path(), "mom", 9);
    let analyzed = call(&["analyze", &mom9, "--json"]).1;
    assert_eq!(call(&["oracle", &mom9, "--mode", "perm", "--json"]).1, analyzed);
    assert_eq!(call(&["oracle", &mom9, "--mode", "binary", "--json"]).1, analyzed);
    let mom25 = gen(dir.path(), "mom", 25);
    let (code, _, err) = call(&["oracle", &mom25, "--mode", "perm"]);
    assert_eq!(code, 2);
    assert!(err.contains("n <= 10"), "{err}");
}

#[test]
fn imaging_commands() {
    let dir = TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    assert_eq!(call(&["scene", "--name", "blocks", "--size", "64", "-o", &p("x.pgm")]).0, 0);
    assert_eq!(call(&["scene", "--name", "nope", "-o", &p("y.pgm")]).0, 2);

    assert_eq!(call(&["noise", &p("x.pgm"), "--p", "0", "-o", &p("same.pgm")]).0, 0);
    assert_eq!(std::fs::read(p("x.pgm")).unwrap(), std::fs::read(p("same.pgm")).unwrap());
    assert_eq!(call(&["noise", &p("x.pgm"), "--p", "2", "-o", &p("bad.pgm")]).0, 2);

    assert_eq!(call(&["ssim", &p("x.pgm"), &p("x.pgm")]).1, "1.000000\n");

    call(&["noise", &p("x.pgm"), "--p", "0.05", "--rng-seed", "5", "-o", &p("noisy.pgm")]);
    let (code, _, err) = call(&["filter", &p("noisy.pgm"), "--network", &data("median9.net"), "-o", &p("clean.pgm")]);
    assert_eq!(code, 0, "{err}");
    let score = |a: &str, b: &str| call(&["ssim", &p(a), &p(b)]).1.trim().parse::<f64>().unwrap();
    assert!(score("x.pgm", "clean.pgm") > score("x.pgm", "noisy.pgm"));
    assert_eq!(call(&["filter", &p("noisy.pgm"), "--network", &data("median5.net"), "-o", &p("z.pgm")]).0, 2);

    let ascii = write(dir.path(), "ascii.pgm", "P2\n1 1\n255\n0\n");
    let (code, _, err) = call(&["ssim", &ascii, &ascii]);
    assert_eq!(code, 2);
    assert!(err.contains("unsupported"), "{err}");
}

#[test]
fn export_rtl_register_count() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m9.vhd");
    let (code, _, _) = call(&["export-rtl", &data("median9.net"), "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let rtl = std::fs::read_to_string(&out).unwrap();
    let report: Value = serde_json::from_str(&call(&["cost", &data("median9.net")]).1).unwrap();
    assert_eq!(rtl.matches("-- reg").count() as u64, report["n_R"].as_u64().unwrap());
    assert_eq!(call(&["export-rtl", &data("median9.net")]).1, rtl);
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.json" {
                let bytes = std::fs::read(&path).unwrap();
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn search_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let run_dir = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let seed_net = data("median9.net");
    let args = |out: &str| {
        vec![
            "search".to_string(), "--seed-net".into(), seed_net.clone(), "--target-cas".into(), "14".into(),
            "--budget".into(), "400".into(), "--rng-seed".into(), "7".into(), "-o".into(), out.to_string(),
        ]
    };
    for name in ["a", "b"] {
        let a = args(&run_dir(name));
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(call(&refs).0, 0);
    }
    let a = read_dir_sorted(&dir.path().join("a"));
    assert_eq!(a, read_dir_sorted(&dir.path().join("b")));
    assert!(a.iter().any(|(p, _)| p == Path::new("pareto.csv")));

    let manifest = std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    assert_schema(&manifest, "manifest.schema.json");
    let m: Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn search_with_zero_budget_keeps_seed() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let (code, _, err) = call(&[
        "search", "--inputs", "9", "--seed-net", &data("median9.net"), "--target-cas", "14",
        "--budget", "0", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let pareto = std::fs::read_to_string(out.join("pareto.csv")).unwrap();
    assert_eq!(pareto.lines().count(), 2, "{pareto}");
    assert!(pareto.lines().nth(1).unwrap().starts_with("19,"));
    let (code, _, _) = call(&["search", "--inputs", "7", "--seed-net", &data("median9.net"), "--target-cas", "14", "-o", out.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_approx-median");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["verify", &data("median9.net")]), 0);
    assert_eq!(status(&["verify", &data("median25.net")]), 0);
    assert_eq!(status(&["analyze", "/nonexistent"]), 2);
    let out = Command::new(bin).args(["analyze", &data("median5.net")]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("exact median"));
}
