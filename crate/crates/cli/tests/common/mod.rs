#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn nof1(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nof1"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn nof1")
}

/// Run and require success; returns stdout.
pub fn ok(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = nof1(args, dir);
    assert!(
        out.status.success(),
        "nof1 {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

pub fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"))
}

/// Panics with every violation if `v` does not satisfy the shipped schema `name`.
pub fn assert_schema(name: &str, v: &Value) {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(v) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{name} schema violations: {msgs:#?}");
}
