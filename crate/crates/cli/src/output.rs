//! Tables, CSV/JSON writers and the run manifest.
//!
//! CSV files start with `#` lines carrying the tool version, the git
//! description of the build and the resolved configuration as JSON. Column
//! names are stable; new columns are only ever appended.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{Format, Resolved};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GIT_DESCRIBE: &str = env!("QUORUM_GIT_DESCRIBE");

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key = value` notes written as header comments.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    /// Prefix every row with a leading column.
    pub fn prepend(&mut self, name: &str, value: Cell) {
        self.columns.insert(0, name.to_string());
        for r in &mut self.rows {
            r.insert(0, value.clone());
        }
    }

    /// Append the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: Table) {
        if self.columns.is_empty() {
            self.columns = other.columns;
        }
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }
}

pub fn manifest(cfg: &Resolved) -> serde_json::Value {
    json!({
        "tool": "quorum",
        "version": VERSION,
        "git_describe": GIT_DESCRIBE,
        "seed": cfg.seed,
        "config": cfg,
        // Values after defaults, in SI units.
        "resolved": {
            "env": cfg.env_params().ok(),
            "sim": cfg.sim_config().ok(),
        },
    })
}

fn io_err(path: Option<&Path>, e: impl std::fmt::Display) -> CliError {
    match path {
        Some(p) => CliError::Io(format!("{}: {e}", p.display())),
        None => CliError::Io(format!("stdout: {e}")),
    }
}

pub fn write_table<W: Write>(mut w: W, table: &Table, cfg: &Resolved, path: Option<&Path>) -> Result<(), CliError> {
    let m = manifest(cfg);
    match cfg.format {
        Format::Csv => {
            let mut head = String::new();
            head.push_str(&format!("# quorum {VERSION} (git {GIT_DESCRIBE})\n"));
            head.push_str(&format!("# config: {}\n", serde_json::to_string(&m["config"]).unwrap()));
            head.push_str(&format!("# resolved: {}\n", serde_json::to_string(&m["resolved"]).unwrap()));
            for (k, v) in &table.notes {
                head.push_str(&format!("# {k} = {v}\n"));
            }
            w.write_all(head.as_bytes()).map_err(|e| io_err(path, e))?;
            let mut wr = csv::Writer::from_writer(&mut w);
            wr.write_record(&table.columns).map_err(|e| io_err(path, e))?;
            for r in &table.rows {
                wr.write_record(r.iter().map(Cell::render)).map_err(|e| io_err(path, e))?;
            }
            wr.flush().map_err(|e| io_err(path, e))?;
        }
        Format::Json => {
            let notes: serde_json::Map<String, serde_json::Value> =
                table.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            let doc = json!({
                "manifest": m,
                "notes": notes,
                "columns": table.columns,
                "rows": table.rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| io_err(path, e))?;
            writeln!(w).map_err(|e| io_err(path, e))?;
        }
    }
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Write to the configured output (plus a manifest next to it) or stdout.
pub fn emit(table: &Table, cfg: &Resolved) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| io_err(Some(p), e))?;
            let mut w = std::io::BufWriter::new(f);
            write_table(&mut w, table, cfg, Some(p))?;
            w.flush().map_err(|e| io_err(Some(p), e))?;
            let mp = manifest_path(p);
            let text = serde_json::to_string_pretty(&manifest(cfg)).unwrap();
            std::fs::write(&mp, text + "\n").map_err(|e| io_err(Some(&mp), e))?;
        }
        None => {
            let mut buf = Vec::new();
            write_table(&mut buf, table, cfg, None)?;
            let out = std::io::stdout();
            let mut lock = out.lock();
            // A reader that closed early (`| head`) is not an error.
            match lock.write_all(&buf).and_then(|_| lock.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(io_err(None, e)),
                _ => {}
            }
        }
    }
    Ok(())
}
