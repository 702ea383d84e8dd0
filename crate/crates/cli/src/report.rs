//! JSON envelope shared by every subcommand.
//!
//! Floating-point numbers are written with 17 significant digits
//! (`{:.16e}`), which is enough for every `f64` to parse back bit-exactly.

use std::io;

use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// Version of the report layout documented in `docs/report-schema.json`.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub command: String,
    pub schema_version: String,
    pub artifact_version: String,
    pub seed: Option<u64>,
    pub inputs: Value,
    pub results: Value,
}

impl ReportEnvelope {
    pub fn new<I: Serialize, R: Serialize>(
        command: &str,
        seed: Option<u64>,
        inputs: &I,
        results: &R,
    ) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: serde_json::to_value(inputs)?,
            results: serde_json::to_value(results)?,
        })
    }

    pub fn render(&self) -> anyhow::Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits17::default());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf)?)
    }
}

/// Pretty printer that writes every `f64` with 17 significant digits.
#[derive(Default)]
pub struct SigDigits17 {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for SigDigits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_seventeen_digits_and_round_trip() {
        let xs = [0.75, 0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, f64::MIN_POSITIVE];
        let env = ReportEnvelope::new("t", Some(3), &json!({}), &json!({ "xs": xs })).unwrap();
        let text = env.render().unwrap();
        assert!(text.contains("7.5000000000000000e-1"));
        let back: ReportEnvelope = serde_json::from_str(&text).unwrap();
        let got: Vec<f64> = serde_json::from_value(back.results["xs"].clone()).unwrap();
        for (a, b) in xs.iter().zip(&got) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.seed, Some(3));
        assert_eq!(back.render().unwrap(), text);
    }
}
