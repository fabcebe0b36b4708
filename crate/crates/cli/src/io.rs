//! Input files and report emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use linpat::bohr::BohrSpec;
use linpat::function::BoundedFunction;
use linpat::increment::Overrides;
use linpat::{Error, IntSet, Rational};
use num_complex::Complex64;
use serde_json::Value;

/// Lines with their numbers, comments and blanks dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

/// One integer per line. `#` starts a comment; duplicates are rejected.
pub fn parse_set(text: &str) -> Result<IntSet, Error> {
    let mut seen = std::collections::HashSet::new();
    let mut xs = Vec::new();
    for (line, s) in content_lines(text) {
        let x: i64 = s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected an integer, got {s:?}"),
        })?;
        if !seen.insert(x) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate element {x}"),
            });
        }
        xs.push(x);
    }
    Ok(IntSet::new(xs))
}

pub fn read_set_file(path: &Path) -> Result<IntSet, Error> {
    parse_set(&fs::read_to_string(path)?)
}

pub fn format_set(set: &IntSet) -> String {
    let mut out = String::with_capacity(8 * set.len());
    for x in set.iter() {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

/// `n re [im]` per line.
pub fn parse_function(text: &str) -> Result<BoundedFunction, Error> {
    let mut pairs = Vec::new();
    for (line, s) in content_lines(text) {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        if !(2..=3).contains(&parts.len()) {
            return Err(bad("expected `n re [im]`"));
        }
        let n: i64 = parts[0].parse().map_err(|_| bad("bad integer point"))?;
        let re: f64 = parts[1].parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = match parts.get(2) {
            Some(p) => p.parse().map_err(|_| bad("bad imaginary part"))?,
            None => 0.0,
        };
        pairs.push((n, Complex64::new(re, im)));
    }
    BoundedFunction::new(pairs)
}

pub fn read_function_file(path: &Path) -> Result<BoundedFunction, Error> {
    parse_function(&fs::read_to_string(path)?)
}

/// `{"theta": [[p, q], …], "eps": [p, q], "M": [p, q]}`.
pub fn read_spec_file(path: &Path) -> Result<BohrSpec, Error> {
    let spec: BohrSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_constants_file(path: &Path) -> Result<Overrides, Error> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    Overrides::from_json(&v)
}

/// `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<num_bigint::BigInt>()
            .map_err(|_| format!("not a rational: {s:?}"))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse(q)?;
            if q == num_bigint::BigInt::from(0) {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rational::new(parse(p)?, q))
        }
        None => Ok(Rational::from_integer(parse(s)?)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Serialize through `Value`, whose maps are ordered by key.
pub fn canonical_json<T: serde::Serialize>(x: &T) -> Result<String, Error> {
    Ok(serde_json::to_string(&serde_json::to_value(x)?)?)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// An object becomes one row; an array of objects one row each. Nested
/// values are written as compact JSON.
pub fn to_csv(v: &Value) -> Result<String, Error> {
    let rows: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Object(m) => vec![m],
        Value::Array(xs) => xs
            .iter()
            .map(|x| {
                x.as_object()
                    .ok_or_else(|| Error::Invalid("CSV rows must be objects".into()))
            })
            .collect::<Result<_, _>>()?,
        _ => return Err(Error::Invalid("CSV needs an object or an array of objects".into())),
    };
    let mut header: Vec<&String> = rows.iter().flat_map(|m| m.keys()).collect();
    header.sort();
    header.dedup();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header.iter().map(|h| h.as_str())).map_err(io)?;
    for m in rows {
        w.write_record(header.iter().map(|h| m.get(*h).map(cell).unwrap_or_default()))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(v: &Value, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string(v)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => to_csv(v),
    }
}

/// Write to `path`, or standard output when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_files() {
        assert_eq!(parse_set("1\n2\n3\n").unwrap().as_slice(), &[1, 2, 3]);
        assert_eq!(parse_set("# c\n\n5\n").unwrap().as_slice(), &[5]);
        match parse_set("1\n1\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_set("x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn function_files() {
        let f = parse_function("0 1\n2 0 -1 # i\n").unwrap();
        assert_eq!(f.support(), &[0, 2]);
        assert!(parse_function("0 2\n").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), linpat::rational::rat(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), linpat::rational::int(-4));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn csv_rows() {
        let v = serde_json::json!([{"b": 1, "a": [1, 2]}, {"a": "x"}]);
        assert_eq!(to_csv(&v).unwrap(), "a,b\n\"[1,2]\",1\nx,\n");
    }
}
