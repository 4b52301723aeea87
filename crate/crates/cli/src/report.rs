//! Report assembly, input loading with digests, and output rendering.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use flipchip_core::datasets::{bundled_file, provenance};
use flipchip_core::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const BUNDLED_PREFIX: &str = "bundled:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// Fixed-width table, only for reproduce-paper.
    Table,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub source: String,
    pub sha256: String,
}

/// Text of one input together with its digest and provenance notes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub text: String,
    pub digest: InputDigest,
    pub provenance: Option<Value>,
}

/// Reads `source`, either a path or `bundled:<key>`.
pub fn load(name: &str, source: &str) -> Result<Loaded> {
    let (text, provenance) = match source.strip_prefix(BUNDLED_PREFIX) {
        Some(key) => {
            let file = bundled_file(key)?;
            let mut notes = Map::new();
            notes.insert("dataset".into(), Value::from(file.key));
            notes.insert("tables".into(), Value::from(file.aliases.to_vec()));
            notes.insert("notes".into(), provenance(file));
            (file.contents.to_string(), Some(Value::Object(notes)))
        }
        None => {
            let text = std::fs::read_to_string(Path::new(source))
                .map_err(|e| Error::Validation(format!("cannot read {name} input `{source}`: {e}")))?;
            (text, None)
        }
    };
    let digest =
        InputDigest { name: name.into(), source: source.into(), sha256: hex::encode(Sha256::digest(text.as_bytes())) };
    Ok(Loaded { text, digest, provenance })
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub parameters: Value,
    pub results: Value,
    pub provenance: Vec<Value>,
    /// Pre-rendered CSV body for tabular results; otherwise the results are
    /// flattened to `quantity,value` rows.
    #[serde(skip)]
    pub csv_body: Option<String>,
    #[serde(skip)]
    pub table: Option<String>,
}

impl Report {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            tool: "flipchip",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: Vec::new(),
            parameters,
            results: Value::Null,
            provenance: Vec::new(),
            csv_body: None,
            table: None,
        }
    }

    pub fn input(&mut self, loaded: &Loaded) {
        self.inputs.push(loaded.digest.clone());
        if let Some(p) = &loaded.provenance {
            self.provenance.push(p.clone());
        }
    }

    pub fn results<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.results = serde_json::to_value(value)?;
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => Ok(self.render_csv()),
            Format::Table => self
                .table
                .clone()
                .ok_or_else(|| Error::Validation(format!("table output is not available for {}", self.command))),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {} {}", self.tool, self.version);
        let _ = writeln!(out, "# command: {}", self.command);
        for i in &self.inputs {
            let _ = writeln!(out, "# input {}: {} sha256={}", i.name, i.source, i.sha256);
        }
        let mut params = Vec::new();
        flatten("", &self.parameters, &mut params);
        for (k, v) in params {
            let _ = writeln!(out, "# parameter {k}: {v}");
        }
        for p in &self.provenance {
            let _ = writeln!(out, "# provenance: {p}");
        }
        match &self.csv_body {
            Some(body) => out.push_str(body),
            None => {
                out.push_str("quantity,value\n");
                let mut rows = Vec::new();
                flatten("", &self.results, &mut rows);
                for (k, v) in rows {
                    let _ = writeln!(out, "{k},{}", csv_field(&v));
                }
            }
        }
        out
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dotted-path leaves of a JSON value in document order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        _ if prefix.is_empty() => {}
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Error::Validation(format!("cannot write `{}`: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
