//! Event CSV, versioned JSON documents and trace CSV.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use pwaccel::accel_eval::TraceRow;
use pwaccel::scenario::LaneChangeEvent;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const EVENT_HEADER: [&str; 3] = ["v_l", "r_l", "ttc_l"];

/// A JSON document tagged with its schema version and content kind.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<(), CliError> {
    let doc = Envelope { schema_version: SCHEMA_VERSION, kind: kind.to_string(), body };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    create_parent(path)?;
    std::fs::write(path, text).map_err(|e| write_error(path, e))
}

/// Reads a document written by [`write_json`]; a bare body without the
/// envelope fields is accepted too.
pub fn read_json<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(obj) = value.as_object() {
        if let Some(v) = obj.get("schema_version") {
            if v.as_u64() != Some(SCHEMA_VERSION as u64) {
                return Err(CliError::Input(format!(
                    "{}: unsupported schema_version {v} (expected {SCHEMA_VERSION})",
                    path.display()
                )));
            }
        }
        if let Some(k) = obj.get("kind").and_then(|k| k.as_str()) {
            if obj.contains_key("schema_version") && k != kind {
                return Err(CliError::Input(format!("{}: expected a {kind} document, found {k}", path.display())));
            }
        }
    }
    let mut value = value;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("schema_version") {
            obj.remove("schema_version");
            obj.remove("kind");
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_events<R: Read>(reader: R) -> Result<Vec<LaneChangeEvent>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::Input(format!("line 1: {e}")))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CliError::Input("empty CSV: expected header v_l,r_l,ttc_l".into()));
    }
    let mut idx = [0usize; 3];
    for (slot, name) in EVENT_HEADER.iter().enumerate() {
        idx[slot] = headers.iter().position(|h| h == *name).ok_or_else(|| {
            CliError::Input(format!("line 1: header lacks column {name:?} (expected v_l,r_l,ttc_l)"))
        })?;
    }
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |slot: usize| -> Result<f64, CliError> {
            let raw = rec.get(idx[slot]).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                CliError::Input(format!("line {line}: {} = {raw:?} is not a number", EVENT_HEADER[slot]))
            })
        };
        let event = LaneChangeEvent { v_l: field(0)?, r_l: field(1)?, ttc_l: field(2)? };
        event.validate().map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        events.push(event);
    }
    Ok(events)
}

pub fn read_events(path: &Path) -> Result<Vec<LaneChangeEvent>, CliError> {
    let file = File::open(path).map_err(|e| read_error(path, e))?;
    parse_events(std::io::BufReader::new(file))
}

pub fn write_events(path: &Path, events: &[LaneChangeEvent]) -> Result<(), CliError> {
    create_parent(path)?;
    let file = File::create(path).map_err(|e| write_error(path, e))?;
    let mut w = BufWriter::new(file);
    let mut go = || -> std::io::Result<()> {
        writeln!(w, "{}", EVENT_HEADER.join(","))?;
        for e in events {
            writeln!(w, "{},{},{}", e.v_l, e.r_l, e.ttc_l)?;
        }
        w.flush()
    };
    go().map_err(|e| write_error(path, e))
}

/// `n,estimate,rel_half_width`, optionally prefixed by label columns.
pub fn write_trace(
    path: &Path,
    labels: &[&str],
    rows: &mut dyn Iterator<Item = (Vec<String>, TraceRow)>,
) -> Result<(), CliError> {
    create_parent(path)?;
    let file = File::create(path).map_err(|e| write_error(path, e))?;
    let mut w = BufWriter::new(file);
    let go = || -> std::io::Result<()> {
        let mut header: Vec<&str> = labels.to_vec();
        header.extend(["n", "estimate", "rel_half_width"]);
        writeln!(w, "{}", header.join(","))?;
        for (label, r) in rows {
            for l in &label {
                write!(w, "{l},")?;
            }
            writeln!(w, "{},{},{}", r.n, r.estimate, r.rel_half_width)?;
        }
        w.flush()
    };
    go().map_err(|e| write_error(path, e))
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| write_error(dir, e))
        }
        _ => Ok(()),
    }
}

fn read_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot read {}: {e}", path.display()))
}

fn write_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Internal(format!("cannot write {}: {e}", path.display()))
}
