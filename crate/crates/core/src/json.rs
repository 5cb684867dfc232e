//! Pretty JSON with every float printed to nine decimal places, so that
//! identical runs produce byte-identical files.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

struct FixedDecimals<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDecimals<'_> {
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // values that round to zero print without a sign
        let value = if value.abs() < 5e-10 { 0.0 } else { value };
        write!(writer, "{value:.9}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as indented JSON with fixed nine-decimal floats and a
/// trailing newline. Key order is the struct field order.
pub fn to_canonical_string<S: Serialize + ?Sized>(value: &S) -> Result<String, serde_json::Error> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDecimals(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        b: f64,
        a: Vec<f32>,
        n: usize,
        nan: f64,
    }

    #[test]
    fn fixed_decimals_and_field_order() {
        let s = to_canonical_string(&Sample {
            b: 1.0 / 3.0,
            a: vec![0.5, -0.0],
            n: 7,
            nan: f64::NAN,
        })
        .unwrap();
        assert_eq!(
            s,
            "{\n  \"b\": 0.333333333,\n  \"a\": [\n    0.500000000,\n    0.000000000\n  ],\n  \"n\": 7,\n  \"nan\": null\n}\n"
        );
        let neg = to_canonical_string(&[-0.0f64, 2.0]).unwrap();
        assert!(neg.contains("  0.000000000") && neg.contains("2.000000000"));
    }
}
