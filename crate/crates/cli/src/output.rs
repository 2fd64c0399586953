//! File formats. Nothing here depends on wall-clock time or thread
//! scheduling, so identical inputs give byte-identical files.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use optomech::constants::CONSTANTS_VERSION;
use serde::Serialize;

use crate::sweep::{SweepResult, SweepRow};

pub const TOOL_NAME: &str = "optomech";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct OutputError {
    pub path: PathBuf,
    pub source: io::Error,
}

impl fmt::Display for OutputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for OutputError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata<C: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub constants_version: &'static str,
    pub config: C,
}

impl<C: Serialize> Metadata<C> {
    pub fn new(config: C) -> Self {
        Metadata {
            tool: TOOL_NAME,
            tool_version: TOOL_VERSION,
            constants_version: CONSTANTS_VERSION,
            config,
        }
    }

    /// `#`-prefixed prelude lines for text tables.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# tool: {} {}", self.tool, self.tool_version),
            format!("# constants: {}", self.constants_version),
            format!("# config: {}", serde_json::to_string(&self.config).expect("config serializes")),
        ]
    }
}

/// Seventeen significant digits in exponent form.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    fs::write(path, bytes).map_err(|source| OutputError {
        path: path.to_path_buf(),
        source,
    })
}

/// A table of optional numbers written as CSV with CRLF line ends and a
/// commented metadata prelude. Missing values are empty fields.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(Option<f64>),
    Flag(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Number(Some(v)) => format_number(*v),
            Cell::Number(None) => String::new(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn grid(&self) -> String {
        match self {
            Cell::Number(Some(v)) => format_number(*v),
            Cell::Number(None) => "?".into(),
            Cell::Flag(b) => u8::from(*b).to_string(),
            Cell::Text(s) => format!("\"{s}\""),
        }
    }
}

impl Table {
    pub fn to_csv<C: Serialize>(&self, meta: &Metadata<C>) -> Vec<u8> {
        let mut out = Vec::new();
        for line in meta.comment_lines() {
            out.extend_from_slice(line.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(&mut out);
            w.write_record(&self.columns).expect("in-memory write");
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        out
    }

    pub fn write_csv<C: Serialize>(&self, path: &Path, meta: &Metadata<C>) -> Result<(), OutputError> {
        write_file(path, &self.to_csv(meta))
    }
}

fn sweep_table(result: &SweepResult) -> Table {
    let cfg = &result.config;
    let mut columns = vec![cfg.x.name.as_str().to_string(), cfg.y.name.as_str().to_string()];
    columns.extend(cfg.outputs.iter().map(|o| o.as_str().to_string()));
    columns.push("stable".into());
    let row = |r: &SweepRow| {
        let mut cells = vec![Cell::Number(Some(r.x)), Cell::Number(Some(r.y))];
        cells.extend(cfg.outputs.iter().map(|o| Cell::Number(o.value(&r.record))));
        cells.push(Cell::Flag(r.record.stable));
        cells
    };
    Table {
        columns,
        rows: result.rows.iter().map(row).collect(),
    }
}

/// Long-format CSV of a sweep: x, y, requested outputs, stability flag.
pub fn sweep_csv(result: &SweepResult) -> Vec<u8> {
    sweep_table(result).to_csv(&Metadata::new(&result.config))
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    metadata: Metadata<&'a crate::sweep::SweepConfig>,
    columns: Vec<String>,
    rows: &'a [SweepRow],
}

/// JSON document with metadata and every field of every row.
pub fn sweep_json(result: &SweepResult) -> Vec<u8> {
    let doc = SweepDocument {
        metadata: Metadata::new(&result.config),
        columns: sweep_table(result).columns,
        rows: &result.rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("sweep serializes");
    s.push('\n');
    s.into_bytes()
}

/// Whitespace-separated grid for gnuplot: one block per x value separated
/// by blank lines, `?` for missing values.
pub fn sweep_grid(result: &SweepResult) -> Vec<u8> {
    let table = sweep_table(result);
    let mut s = String::new();
    for line in Metadata::new(&result.config).comment_lines() {
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("# missing values are marked \"?\" (set datafile missing \"?\")\n");
    s.push_str(&format!("# {}\n", table.columns.join(" ")));
    let ny = result.config.y.count;
    for (i, row) in table.rows.iter().enumerate() {
        if i > 0 && i % ny == 0 {
            s.push('\n');
        }
        let cells: Vec<String> = row.iter().map(Cell::grid).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s.into_bytes()
}

/// Write `<stem>.csv`, `<stem>.json` and `<stem>.dat` into `dir`.
pub fn emit_figure_data(result: &SweepResult, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = [
        (format!("{stem}.csv"), sweep_csv(result)),
        (format!("{stem}.json"), sweep_json(result)),
        (format!("{stem}.dat"), sweep_grid(result)),
    ];
    let mut paths = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Write any serializable value as pretty JSON with metadata.
pub fn write_json<C: Serialize, T: Serialize>(path: &Path, meta: &Metadata<C>, body: &T) -> Result<(), OutputError> {
    #[derive(Serialize)]
    struct Doc<'a, C: Serialize, T: Serialize> {
        metadata: &'a Metadata<C>,
        result: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Doc { metadata: meta, result: body }).expect("document serializes");
    s.push('\n');
    write_file(path, s.as_bytes())
}
