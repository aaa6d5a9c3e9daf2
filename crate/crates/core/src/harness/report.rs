//! CSV/JSON experiment reports with bit-stable formatting.

use crate::Result;
use std::io::Write;
use std::path::Path;

/// Fixed 17-significant-digit decimal formatting, so reruns of the same
/// `(config, seed)` produce byte-identical tables.
pub fn format_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// One CSV table of a report.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    pub fn new(name: &str, header: &str) -> Self {
        Table { name: name.into(), header: header.into(), rows: Vec::new() }
    }

    /// Append a row of float cells.
    pub fn push_floats(&mut self, cells: &[f64]) {
        self.rows
            .push(cells.iter().map(|&c| format_float(c)).collect::<Vec<_>>().join(","));
    }

    pub fn push_row(&mut self, row: String) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity((self.rows.len() + 1) * 64);
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// CSV tables plus a JSON metadata block.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub tables: Vec<Table>,
    pub meta: serde_json::Value,
}

impl ExperimentReport {
    pub fn new(meta: serde_json::Value) -> Self {
        ExperimentReport { tables: Vec::new(), meta }
    }

    pub fn push_table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn set_meta(&mut self, key: &str, value: serde_json::Value) {
        if let serde_json::Value::Object(map) = &mut self.meta {
            map.insert(key.into(), value);
        }
    }

    /// Write `<table>.csv` files and `meta.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            let mut f = std::fs::File::create(dir.join(format!("{}.csv", t.name)))?;
            f.write_all(t.to_csv().as_bytes())?;
        }
        let mut f = std::fs::File::create(dir.join("meta.json"))?;
        f.write_all(serde_json::to_string_pretty(&self.meta)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
