//! Canonical JSON: sorted keys, integers verbatim, other numbers in C's
//! `%.6g` form, two-space indentation and a trailing newline.
//!
//! Writing a parsed canonical document reproduces it byte for byte.

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

/// `printf("%.6g", x)` for finite `x`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // Rounding to six significant digits decides the exponent, exactly as C
    // does.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Finite number as a JSON value, or an error naming `what`.
pub fn num(x: f64, what: &str) -> Result<Value> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| Error::Report(format!("{what} is not finite ({x})")))
}

pub fn nums(xs: &[f64], what: &str) -> Result<Value> {
    xs.iter().map(|&x| num(x, what)).collect::<Result<Vec<_>>>().map(Value::Array)
}

fn write_number(n: &Number, out: &mut String) -> Result<()> {
    if n.is_i64() || n.is_u64() {
        out.push_str(&n.to_string());
        return Ok(());
    }
    let x = n.as_f64().ok_or_else(|| Error::Report(format!("unrepresentable number {n}")))?;
    if !x.is_finite() {
        return Err(Error::Report(format!("non-finite number {x}")));
    }
    out.push_str(&format_g6(x));
    Ok(())
}

fn indent(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, depth: usize, out: &mut String) -> Result<()> {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => write_number(n, out)?,
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            // Flat numeric arrays stay on one line to keep curves readable.
            let flat = items.iter().all(|i| i.is_number());
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    indent(out, depth + 1);
                }
                write_value(item, depth + 1, out)?;
            }
            if !flat {
                indent(out, depth);
            }
            out.push(']');
        }
        Value::Object(map) => write_object(map, depth, out)?,
    }
    Ok(())
}

fn write_object(map: &Map<String, Value>, depth: usize, out: &mut String) -> Result<()> {
    if map.is_empty() {
        out.push_str("{}");
        return Ok(());
    }
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push('{');
    for (i, key) in keys.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        indent(out, depth + 1);
        out.push_str(&Value::String(key.clone()).to_string());
        out.push_str(": ");
        write_value(&map[key], depth + 1, out)?;
    }
    indent(out, depth);
    out.push('}');
    Ok(())
}

pub fn to_canonical_string(v: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(v, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matches_c_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333"),
            (2.0 / 3.0, "0.666667"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (0.000099999996, "0.0001"),
            (-2.5, "-2.5"),
            (1e-300, "1e-300"),
            (6.02214076e23, "6.02214e+23"),
            (100.0, "100"),
            (0.0, "0"),
            (-0.0, "-0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g6(x), want, "{x}");
        }
    }

    #[test]
    fn sorted_and_stable() {
        let v = json!({"b": [1.5, 2, 1e7], "a": {"z": null, "y": [true, {"q": 0.25}]}, "c": []});
        let s = to_canonical_string(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("[1.5, 2, 1e+07]"));
        let again = to_canonical_string(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(num(f64::NAN, "x").is_err());
        assert!(num(f64::INFINITY, "x").is_err());
        assert!(nums(&[1.0, f64::NEG_INFINITY], "x").is_err());
    }
}
