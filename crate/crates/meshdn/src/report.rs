//! Metric tables written by `eval`, `equivariance` and `bench`.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};

/// Vertex and Chamfer columns are reported in units of 1e-4.
pub const DISTANCE_SCALE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A table of named rows with numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Serialize)]
struct JsonReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated: Option<u64>,
    rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

impl Table {
    /// `columns[0]` names the row label column.
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len() + 1, self.columns.len(), "row width");
        self.rows.push(Row {
            name: name.into(),
            values,
        });
    }

    /// Column means over the current rows, or `None` for an empty table.
    pub fn means(&self) -> Option<Vec<f64>> {
        if self.rows.is_empty() {
            return None;
        }
        let mut sum = vec![0.0; self.columns.len() - 1];
        for r in &self.rows {
            for (s, v) in sum.iter_mut().zip(&r.values) {
                *s += v;
            }
        }
        Some(sum.into_iter().map(|s| s / self.rows.len() as f64).collect())
    }

    pub fn render(&self, format: Format, timestamp: bool) -> String {
        let generated = timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        match format {
            Format::Csv => {
                let mut s = String::new();
                if let Some(t) = generated {
                    writeln!(s, "# generated {t}").unwrap();
                }
                writeln!(s, "{}", self.columns.join(",")).unwrap();
                for r in &self.rows {
                    s.push_str(&csv_field(&r.name));
                    for v in &r.values {
                        write!(s, ",{v}").unwrap();
                    }
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut m = serde_json::Map::new();
                        m.insert(self.columns[0].clone(), r.name.clone().into());
                        for (c, &v) in self.columns[1..].iter().zip(&r.values) {
                            let value = serde_json::Number::from_f64(v)
                                .map(serde_json::Value::Number)
                                .unwrap_or(serde_json::Value::Null);
                            m.insert(c.clone(), value);
                        }
                        m
                    })
                    .collect();
                let report = JsonReport { generated, rows };
                let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    pub fn write(&self, path: &Path, format: Format, timestamp: bool) -> Result<()> {
        std::fs::write(path, self.render(format, timestamp)).map_err(|e| Error::file(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(&["mesh", "a", "b"]);
        t.push("x.obj", vec![1.0, 0.5]);
        t.push("y,z.obj", vec![3.0, 1.5]);
        t
    }

    #[test]
    fn csv_layout() {
        let s = table().render(Format::Csv, false);
        assert_eq!(s, "mesh,a,b\nx.obj,1,0.5\n\"y,z.obj\",3,1.5\n");
        assert!(table().render(Format::Csv, true).starts_with("# generated "));
        assert_eq!(table().means(), Some(vec![2.0, 1.0]));
    }

    #[test]
    fn json_rows_are_keyed_by_column() {
        let v: serde_json::Value = serde_json::from_str(&table().render(Format::Json, false)).unwrap();
        assert_eq!(v["rows"][1]["mesh"], "y,z.obj");
        assert_eq!(v["rows"][0]["b"], 0.5);
        assert!(v.get("generated").is_none());
    }
}
