//! Rendering of JSON responses as text, JSON or CSV.

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Formats `x` with 10 significant digits, in plain notation when the
/// exponent lies in `[-5, 15)` and scientific notation otherwise.
pub fn sig10(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..15).contains(&exp) {
        let m = trim_fraction(mantissa);
        return format!("{sign}{m}e{exp}");
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{}{}", digits, "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => sig10(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "NA".to_owned(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

/// Scalar leaves keyed by dotted path, plus the columns formed by top-level
/// numeric arrays.
fn split(value: &Value) -> (Vec<(String, String)>, Vec<(String, Vec<String>)>) {
    fn walk(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
        for (k, v) in map {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Object(inner) => walk(&key, inner, out),
                Value::Array(_) => {}
                _ => out.push((key, scalar(v))),
            }
        }
    }
    let mut scalars = Vec::new();
    let mut columns = Vec::new();
    if let Value::Object(map) = value {
        walk("", map, &mut scalars);
        for (k, v) in map {
            if let Value::Array(items) = v {
                columns.push((k.clone(), items.iter().map(scalar).collect()));
            }
        }
    }
    (scalars, columns)
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
            s.push('\n');
            s
        }
        Format::Text => {
            let (scalars, columns) = split(value);
            let width = scalars.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut out = String::new();
            for (k, v) in &scalars {
                out.push_str(&format!("{k:<width$}  {v}\n"));
            }
            if !columns.is_empty() {
                if !scalars.is_empty() {
                    out.push('\n');
                }
                out.push_str(&table(&columns, "  ", true));
            }
            out
        }
        Format::Csv => {
            let (scalars, columns) = split(value);
            if columns.is_empty() {
                let header: Vec<&str> = scalars.iter().map(|(k, _)| k.as_str()).collect();
                let row: Vec<&str> = scalars.iter().map(|(_, v)| v.as_str()).collect();
                format!("{}\n{}\n", header.join(","), row.join(","))
            } else {
                table(&columns, ",", false)
            }
        }
    }
}

fn table(columns: &[(String, Vec<String>)], sep: &str, pad: bool) -> String {
    let rows = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let widths: Vec<usize> = columns
        .iter()
        .map(|(h, c)| {
            c.iter()
                .map(String::len)
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let cell = |s: &str, w: usize| {
        if pad {
            format!("{s:>w$}")
        } else {
            s.to_owned()
        }
    };
    let mut out = String::new();
    let header: Vec<String> = columns
        .iter()
        .zip(&widths)
        .map(|((h, _), &w)| cell(h, w))
        .collect();
    out.push_str(&header.join(sep));
    out.push('\n');
    for i in 0..rows {
        let row: Vec<String> = columns
            .iter()
            .zip(&widths)
            .map(|((_, c), &w)| cell(c.get(i).map(String::as_str).unwrap_or(""), w))
            .collect();
        out.push_str(&row.join(sep));
        out.push('\n');
    }
    out
}
