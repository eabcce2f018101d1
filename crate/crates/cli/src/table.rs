use std::io::{self, Write};

use serde_json::{Map, Value};

pub const SCHEMA: &str = "bvent-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows with a fixed column set, plus trailing `key: value` notes.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<(String, Value)>,
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.notes.push((key.to_string(), value.into()));
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "# {SCHEMA}")?;
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
                for (k, v) in &self.notes {
                    writeln!(out, "# {k}: {}", csv_cell(v))?;
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                let notes: Map<String, Value> = self.notes.iter().cloned().collect();
                let doc = serde_json::json!({ "schema": SCHEMA, "columns": self.columns, "rows": rows, "notes": notes });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_has_schema_line_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![json!(1), json!("x,y")]);
        t.note("slope", 1.5);
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# bvent-v1\na,b\n1,\"x,y\"\n# slope: 1.5\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(&["a"]);
        t.push(vec![json!(2)]);
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["a"], 2);
        assert_eq!(v["schema"], SCHEMA);
    }
}
