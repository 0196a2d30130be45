//! JSON writer with fixed float formatting.
//!
//! Every floating-point number is emitted with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly; map keys come out in
//! `serde_json`'s sorted order, so documents are byte-stable.

use serde_json::Value;
use std::fmt::Write as _;

pub fn to_pretty_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, value: &Value, level: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if n.is_f64() {
                let v = n.as_f64().unwrap();
                let _ = write!(out, "{v:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", Value::String(k.clone()));
                write_value(out, v, level + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// CSV cell for a float, same 17-significant-digit convention.
pub fn csv_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_exactly() {
        for &v in &[4.0 / 3.0, 1e-300, -0.1, 2.0f64.powi(61)] {
            let s = csv_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn renders_nested_documents() {
        let doc = json!({"b": [1, 2.5], "a": {"x": true, "y": null}});
        let s = to_pretty_string(&doc);
        assert!(s.contains("\"a\""));
        assert!(s.contains("2.5000000000000000e0"));
        let parsed: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed, doc);
    }
}
