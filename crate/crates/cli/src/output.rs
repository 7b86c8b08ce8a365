use std::fs;
use std::path::{Path, PathBuf};

use disktomo::FourierSeries;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: i64,
    pub re: f64,
    pub im: f64,
}

pub fn mode_rows(s: &FourierSeries) -> Vec<ModeRow> {
    (0..=s.degree() as i64)
        .map(|n| {
            let c = s.coeff(n);
            ModeRow { mode: n, re: c.re, im: c.im }
        })
        .collect()
}

/// Real series from non-negative mode rows.
pub fn series_from_rows(rows: &[ModeRow]) -> Result<FourierSeries, CliError> {
    let degree = rows.iter().map(|r| r.mode).max().unwrap_or(0);
    if rows.iter().any(|r| r.mode < 0) {
        return Err(CliError::Config("mode column must be non-negative".into()));
    }
    let mut s = FourierSeries::zeros(degree as usize);
    for r in rows {
        let c = num_complex::Complex64::new(r.re, r.im);
        s.set(r.mode, c);
        if r.mode != 0 {
            s.set(-r.mode, c.conj());
        }
    }
    Ok(s)
}

pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("serializable output");
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// Writes `manifest.json` with the command, its configuration and the
    /// files produced.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            command: &'a str,
            version: &'a str,
            config: &'a C,
            outputs: &'a [String],
        }
        let files = std::mem::take(&mut self.files);
        self.json(
            "manifest.json",
            &Manifest {
                command,
                version: env!("CARGO_PKG_VERSION"),
                config,
                outputs: &files,
            },
        )
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

pub fn read_mode_csv(path: &Path) -> Result<FourierSeries, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rows = r
        .deserialize()
        .collect::<Result<Vec<ModeRow>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no rows", path.display())));
    }
    series_from_rows(&rows)
}
