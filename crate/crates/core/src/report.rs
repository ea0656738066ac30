//! Deterministic JSON reports and CSV field dumps.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::funcspace::GridFunction;

pub const SCHEMA: &str = "weightlab-report/1";

/// Envelope shared by every command.
#[derive(Clone, Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: &'static str,
    pub command: &'a str,
    pub passed: Option<bool>,
    pub body: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, body: T) -> Self {
        Report { schema: SCHEMA, command, passed: None, body }
    }

    pub fn with_status(mut self, passed: bool) -> Self {
        self.passed = Some(passed);
        self
    }
}

/// Pretty printer that writes every float with 17 significant digits.
/// Non-finite floats become `null`.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

/// One row per cell: centre coordinates, value and domain flag.
pub fn write_field_csv(path: &Path, f: &GridFunction) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(io::Error::other)?;
    let geom = f.geom();
    let header: &[&str] = if geom.dim == 1 { &["x", "value", "in_domain"] } else { &["x", "y", "value", "in_domain"] };
    out.write_record(header).map_err(io::Error::other)?;
    for i in 0..geom.len() {
        let c = geom.center(i);
        let mut row: Vec<String> = c[..geom.dim].iter().map(|v| format!("{v:.16e}")).collect();
        row.push(format!("{:.16e}", f.value(i)));
        row.push(f.in_domain()[i].to_string());
        out.write_record(&row).map_err(io::Error::other)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: f64,
        n: usize,
        name: &'static str,
    }

    #[test]
    fn floats_use_seventeen_digits_and_infinity_is_null() {
        let s = to_json(&Report::new("t", Sample { a: 0.1, b: f64::INFINITY, n: 3, name: "x" })).unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"));
        assert!(s.contains("\"b\": null"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"schema\": \"weightlab-report/1\""));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["body"]["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn output_is_deterministic() {
        let make = || to_json(&Sample { a: 1.0 / 3.0, b: -2.5e-300, n: 0, name: "y" }).unwrap();
        assert_eq!(make(), make());
    }
}
