//! Flat JSON config files merged into argv; explicit flags win.

use std::fs;

use serde_json::{Map, Value};

/// Reads `--config <path>` (or `--config=<path>`) from argv and appends every
/// key not already given on the command line as `--key value`.
pub fn merge_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).cloned().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path} is not JSON: {e}"))?;
    let obj = config_object(value).ok_or_else(|| format!("config {path} must be a flat JSON object"))?;
    let mut out = args;
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || out.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => {
                out.push(flag);
                out.push(s);
            }
            Value::Number(n) => {
                out.push(flag);
                out.push(n.to_string());
            }
            _ => return Err(format!("config key {key}: nested values are not supported")),
        }
    }
    Ok(out)
}

/// Accepts either a flat object or a run manifest, whose `config` field is one.
fn config_object(value: Value) -> Option<Map<String, Value>> {
    let Value::Object(mut obj) = value else { return None };
    if let Some(Value::Object(inner)) = obj.remove("config") {
        if obj.contains_key("command") {
            return Some(inner);
        }
        obj.insert("config".into(), Value::Object(inner));
    }
    Some(obj)
}
