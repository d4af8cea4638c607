//! Artifact writers. Every file starts with (or embeds) the config hash and
//! the crate version; nothing run-dependent such as timings or worker counts
//! is written, so identical configs give identical bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    config_hash: String,
    files: Vec<String>,
    summary: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path, config_hash: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            files: Vec::new(),
            summary: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn stamp(&self) -> String {
        format!("amolab {VERSION} config_hash={}", self.config_hash)
    }

    fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(self.dir.join(name))?);
        writeln!(file, "# {}", self.stamp())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        self.record(name);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            version: &'a str,
            config_hash: &'a str,
            data: &'a T,
        }
        let env = Envelope {
            version: VERSION,
            config_hash: &self.config_hash,
            data: value,
        };
        let mut text = serde_json::to_string_pretty(&env).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.record(name);
        Ok(())
    }

    /// A gnuplot script plotting columns `x:y` of a CSV written earlier.
    pub fn gnuplot(&mut self, name: &str, csv_name: &str, x: usize, ys: &[(usize, &str)], logscale_y: bool) -> std::io::Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.stamp());
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set datafile commentschars '#'");
        let _ = writeln!(s, "set key autotitle columnhead");
        if logscale_y {
            let _ = writeln!(s, "set logscale y");
        }
        let plots: Vec<String> = ys
            .iter()
            .map(|(col, title)| format!("'{csv_name}' using {x}:{col} with linespoints title '{title}'"))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        std::fs::write(self.dir.join(name), s)?;
        self.record(name);
        Ok(())
    }

    pub fn say(&mut self, line: impl Into<String>) {
        let line = line.into();
        println!("{line}");
        self.summary.push(line);
    }

    /// Writes `summary.txt` and `manifest.json`.
    pub fn finish<T: Serialize>(mut self, command: &str, details: &T) -> std::io::Result<Vec<String>> {
        let mut text = format!("# {}\n", self.stamp());
        for l in &self.summary {
            text.push_str(l);
            text.push('\n');
        }
        std::fs::write(self.dir.join("summary.txt"), text)?;
        self.record("summary.txt");

        #[derive(Serialize)]
        struct Manifest<'a, T> {
            command: &'a str,
            files: Vec<String>,
            details: &'a T,
        }
        let mut files = self.files.clone();
        files.sort();
        let manifest = Manifest { command, files, details };
        self.json("manifest.json", &manifest)?;
        Ok(self.files)
    }
}
