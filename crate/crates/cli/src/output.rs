//! Output encodings: a pretty JSON document, JSON lines, or RFC-4180 CSV preceded by
//! `#` header lines.

use serde::Serialize;
use serde_json::Value;

use crate::{CliResult, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Header<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub method: String,
    pub truncation: usize,
    pub digest: String,
    pub config: &'a RunConfig,
}

impl<'a> Header<'a> {
    pub fn new(config: &'a RunConfig) -> Self {
        Header {
            tool: "gibbs",
            version: env!("CARGO_PKG_VERSION"),
            command: config.command.name(),
            seed: config.seed,
            method: config.method.to_string(),
            truncation: config.truncation,
            digest: config.digest(),
            config,
        }
    }
}

/// Rows of JSON scalars, rendered as CSV or as a `{columns, rows}` object.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Extra `# key: value` lines written after the header in CSV.
    #[serde(skip)]
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn json_document<T: Serialize>(header: &Header, result: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&serde_json::json!({ "header": header, "result": result }))?;
    out.push(b'\n');
    Ok(out)
}

pub fn json_lines<T: Serialize>(header: &Header, lines: &[T]) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec(&serde_json::json!({ "header": header }))?;
    out.push(b'\n');
    for l in lines {
        serde_json::to_writer(&mut out, l)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn csv_document(header: &Header, table: &Table) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let mut line = |k: &str, v: &str| out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    line("tool", &format!("{} {}", header.tool, header.version));
    line("command", header.command);
    line("seed", &header.seed.to_string());
    line("method", &header.method);
    line("truncation", &header.truncation.to_string());
    line("digest", &header.digest);
    for (k, v) in &table.notes {
        line(k, v);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r.iter().map(cell))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
