#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn load_schema(command: &str) -> Value {
    let p = manifest_dir().join("schemas").join(format!("{command}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

fn type_ok(ty: &str, v: &Value) -> bool {
    match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        _ => false,
    }
}

/// Checks `value` against the subset of JSON Schema the shipped schemas use:
/// `type`, `const`, `enum`, `minimum`, `required`, `properties`,
/// `additionalProperties: false` and `items`. Returns every mismatch.
pub fn validate(schema: &Value, value: &Value) -> Vec<String> {
    let mut errs = Vec::new();
    walk(schema, value, "$", &mut errs);
    errs
}

fn walk(schema: &Value, value: &Value, at: &str, errs: &mut Vec<String>) {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_ok(s, value),
            Value::Array(ts) => ts.iter().any(|s| type_ok(s.as_str().unwrap(), value)),
            _ => true,
        };
        if !ok {
            errs.push(format!("{at}: expected type {t}, got {value}"));
            return;
        }
    }
    if let Some(c) = schema.get("const") {
        if c != value {
            errs.push(format!("{at}: expected {c}, got {value}"));
        }
    }
    if let Some(Value::Array(opts)) = schema.get("enum") {
        if !opts.contains(value) {
            errs.push(format!("{at}: {value} not in enum"));
        }
    }
    if let (Some(m), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if x < m {
            errs.push(format!("{at}: {x} below minimum {m}"));
        }
    }
    if let Value::Object(obj) = value {
        if let Some(Value::Array(req)) = schema.get("required") {
            for r in req {
                if !obj.contains_key(r.as_str().unwrap()) {
                    errs.push(format!("{at}: missing `{}`", r.as_str().unwrap()));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => walk(s, v, &format!("{at}.{k}"), errs),
                None if closed => errs.push(format!("{at}: unexpected `{k}`")),
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(s)) = (value, schema.get("items")) {
        for (i, v) in items.iter().enumerate() {
            walk(s, v, &format!("{at}[{i}]"), errs);
        }
    }
}

pub fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}
