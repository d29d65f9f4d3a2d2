use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::args::Format;
use crate::CliError;

/// Environment variable naming the directory for relative and default output paths.
pub const OUT_DIR_ENV: &str = "MATERN_RF_OUT_DIR";

/// Rows with a fixed column order; JSON is the canonical form and CSV its projection.
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self { command, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(r).map(|(k, v)| (k.to_string(), v.clone())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("command".into(), Value::from(self.command));
        top.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json value");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Real numbers as JSON; non-finite values become null.
pub fn num(x: f64) -> Value {
    Value::from(x)
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes to `--output`, else to `default_name` in the output directory,
/// else to stdout. Returns the file written, if any.
pub fn emit(text: &str, output: Option<&Path>, default_name: Option<&str>) -> Result<Option<PathBuf>, CliError> {
    let target = output.map(resolve).or_else(|| default_name.map(|n| resolve(Path::new(n))));
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("--output: cannot create {}: {e}", parent.display())))?;
            }
            std::fs::write(&path, text)
                .map_err(|e| CliError::Io(format!("--output: cannot write {}: {e}", path.display())))?;
            Ok(Some(path))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            Ok(None)
        }
    }
}
