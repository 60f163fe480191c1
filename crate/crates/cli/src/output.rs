//! Tables and their CSV/JSON renderings, written atomically.
//!
//! CSV layout: `# key: value` metadata lines, then `# config:` followed by
//! the resolved TOML config with every line prefixed by `#   `, then a
//! header row and the data. Missing numbers are empty cells.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Optional trailing text column, e.g. per-row errors.
    pub text_column: Option<(String, Vec<String>)>,
    pub metadata: BTreeMap<String, String>,
    /// Resolved configs, rendered as TOML.
    pub configs: Vec<(String, String)>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        // Shortest representation that parses back to the same bits.
        format!("{x:?}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    for (k, v) in &table.metadata {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    for (name, text) in &table.configs {
        out.push_str(&format!("# {name}:\n"));
        for line in text.lines() {
            out.push_str(&format!("#   {line}\n"));
        }
    }
    let mut header: Vec<String> = table.columns.clone();
    if let Some((name, _)) = &table.text_column {
        header.push(name.clone());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|&x| cell(x)).collect();
        if let Some((_, texts)) = &table.text_column {
            cells.push(csv_text(&texts[i]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else {
        // JSON has no infinities.
        json!(if x > 0.0 { "inf" } else { "-inf" })
    }
}

pub fn render_json(table: &Table) -> String {
    let configs: serde_json::Map<String, Value> = table
        .configs
        .iter()
        .map(|(name, text)| {
            let parsed: Value = toml::from_str::<toml::Value>(text)
                .ok()
                .and_then(|v| serde_json::to_value(v).ok())
                .unwrap_or_else(|| Value::String(text.clone()));
            (name.clone(), parsed)
        })
        .collect();
    let mut columns: Vec<Value> = table.columns.iter().map(|c| json!(c)).collect();
    if let Some((name, _)) = &table.text_column {
        columns.push(json!(name));
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cells: Vec<Value> = row.iter().map(|&x| number(x)).collect();
            if let Some((_, texts)) = &table.text_column {
                cells.push(if texts[i].is_empty() { Value::Null } else { json!(texts[i]) });
            }
            Value::Array(cells)
        })
        .collect();
    let doc = json!({
        "metadata": table.metadata,
        "configs": configs,
        "columns": columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table),
        Format::Json => render_json(table),
    }
}

/// Writes next to `path` then renames over it, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "y"]);
        t.rows = vec![vec![1.0, 0.1 + 0.2], vec![2.0, f64::NAN]];
        t.text_column = Some(("error".into(), vec![String::new(), "bad, worse".into()]));
        t.meta("seed", 7);
        t.configs.push(("config".into(), "[run]\nseed = 7\n".into()));
        t
    }

    #[test]
    fn csv_layout() {
        let s = render_csv(&sample());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# seed: 7");
        assert_eq!(lines[1], "# config:");
        assert_eq!(lines[2], "#   [run]");
        assert_eq!(lines[4], "x,y,error");
        assert_eq!(lines[5], "1.0,0.30000000000000004,");
        assert_eq!(lines[6], "2.0,,\"bad, worse\"");
    }

    #[test]
    fn json_layout() {
        let v: Value = serde_json::from_str(&render_json(&sample())).unwrap();
        assert_eq!(v["metadata"]["seed"], "7");
        assert_eq!(v["configs"]["config"]["run"]["seed"], 7);
        assert_eq!(v["rows"][1][1], Value::Null);
        assert_eq!(v["columns"][2], "error");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        std::fs::write(&p, "old").unwrap();
        write_atomic(&p, "new").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "new");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("no/such/dir/out.csv");
        assert_eq!(write_atomic(&missing, "x").unwrap_err().exit_code(), 4);
    }
}
