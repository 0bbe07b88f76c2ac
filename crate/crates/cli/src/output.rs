use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use torus_equidist::solver::fmt17;

pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    pub parameters: Value,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Value, parameters: Value, seed: Option<u64>, timestamp: bool) -> Self {
        RunManifest {
            schema: SCHEMA,
            command: command.to_string(),
            inputs,
            parameters,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            timestamp: timestamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        }
    }
}

/// Pretty printer writing every float with 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt17(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
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

/// `{"manifest": ..., "result": ...}` followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, manifest: &RunManifest, result: &T) -> anyhow::Result<()> {
    let doc = serde_json::json!({ "manifest": manifest, "result": result });
    let mut ser = serde_json::Serializer::with_formatter(&mut w, Digits17(PrettyFormatter::with_indent(b"  ")));
    doc.serialize(&mut ser)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// CSV body preceded by the manifest as a `#` comment line.
pub fn write_csv_with_manifest<W: Write>(mut w: W, manifest: &RunManifest, body: &[u8]) -> anyhow::Result<()> {
    writeln!(w, "# {}", serde_json::to_string(manifest)?)?;
    w.write_all(body)?;
    Ok(())
}
