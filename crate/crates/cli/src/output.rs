use std::io::Write;
use std::path::Path;

use bessel_house::kernels::SeriesPolicy;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::CliError;

/// Metadata block written at the head of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub policy: SeriesPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Value>,
}

impl Meta {
    pub fn new<C: Serialize>(command: &'static str, config: &C, policy: SeriesPolicy) -> Meta {
        Meta {
            tool: "bessel-house",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            policy,
            checks: None,
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn objects(&self) -> impl Iterator<Item = Value> + '_ {
        self.rows.iter().map(|r| {
            let m: Map<String, Value> = self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), json!(v))).collect();
            Value::Object(m)
        })
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Renders a table with its metadata. CSV carries the metadata as a single
/// leading `#` line of JSON.
pub fn render_table(meta: &Meta, table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            write!(buf, "# {}\r\n", serde_json::to_string(meta).expect("meta serializes"))?;
            let mut w = csv_writer(&mut buf);
            w.write_record(&table.columns).map_err(csv_err)?;
            for r in &table.rows {
                w.write_record(r.iter().map(|v| fmt_float(*v))).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = json!({ "meta": meta, "rows": table.objects().collect::<Vec<_>>() });
            serde_json::to_writer_pretty(&mut buf, &doc).expect("values serialize");
            buf.push(b'\n');
        }
        Format::Jsonl => {
            writeln!(buf, "{}", json!({ "meta": meta }))?;
            for o in table.objects() {
                writeln!(buf, "{o}")?;
            }
        }
    }
    Ok(buf)
}

/// Renders path ensembles: CSV rows (path_id, t, value) or one path object per line.
pub fn render_paths(
    meta: &Meta,
    paths: &[bessel_house::sampler::SamplePath],
    format: Format,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            write!(buf, "# {}\r\n", serde_json::to_string(meta).expect("meta serializes"))?;
            let mut w = csv_writer(&mut buf);
            w.write_record(["path_id", "t", "value"]).map_err(csv_err)?;
            for (i, p) in paths.iter().enumerate() {
                for (t, v) in p.times.iter().zip(&p.values) {
                    w.write_record([i.to_string(), fmt_float(*t), fmt_float(*v)]).map_err(csv_err)?;
                }
            }
            w.flush()?;
        }
        Format::Json => {
            let items: Vec<Value> = paths.iter().enumerate().map(|(i, p)| path_object(i, p)).collect();
            serde_json::to_writer_pretty(&mut buf, &json!({ "meta": meta, "paths": items })).expect("values serialize");
            buf.push(b'\n');
        }
        Format::Jsonl => {
            writeln!(buf, "{}", json!({ "meta": meta }))?;
            for (i, p) in paths.iter().enumerate() {
                writeln!(buf, "{}", path_object(i, p))?;
            }
        }
    }
    Ok(buf)
}

fn path_object(i: usize, p: &bessel_house::sampler::SamplePath) -> Value {
    json!({ "path_id": i, "times": p.times, "values": p.values, "meta": p.meta })
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
