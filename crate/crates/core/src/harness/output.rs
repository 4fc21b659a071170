//! CSV and key-value writers.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! parses back to the identical `f64`.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::GridState;
use crate::error::{Error, Result};

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes a numeric table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

/// One row per cell: `x,q` plus `exact` when an exact profile is given.
pub fn write_snapshot_csv(path: &Path, state: &GridState, exact: Option<&[f64]>) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..state.n_cells())
        .map(|j| {
            let mut row = vec![state.cell_center(j), state.q[j]];
            if let Some(e) = exact {
                row.push(e[j]);
            }
            row
        })
        .collect();
    let header: &[&str] = if exact.is_some() {
        &["x", "q", "exact"]
    } else {
        &["x", "q"]
    };
    write_csv(path, header, &rows)
}

/// Reads a numeric CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parameter(format!("{}: empty CSV", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|cell| {
                    cell.parse::<f64>().map_err(|_| {
                        Error::Parameter(format!(
                            "{}: row {}: bad number `{cell}`",
                            path.display(),
                            i + 2
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Accumulates `key = value` lines.
#[derive(Debug, Default, Clone)]
pub struct KvWriter {
    text: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, line: &str) -> &mut Self {
        self.text.push_str("# ");
        self.text.push_str(line);
        self.text.push('\n');
        self
    }

    pub fn raw(&mut self, block: &str) -> &mut Self {
        self.text.push_str(block);
        if !block.ends_with('\n') {
            self.text.push('\n');
        }
        self
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.text.push_str(&format!("{key} = {value}\n"));
        self
    }

    /// Float in the round-trip format; `none` for infinite rates.
    pub fn put_f64(&mut self, key: &str, value: f64) -> &mut Self {
        if value.is_infinite() {
            self.put(key, "none")
        } else {
            self.put(key, format_value(value))
        }
    }

    pub fn finish(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.text)
    }
}

/// Files written by a command, in write order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileLog {
    pub files: Vec<PathBuf>,
}

impl FileLog {
    pub fn csv(&mut self, path: PathBuf, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        write_csv(&path, header, rows)?;
        self.files.push(path);
        Ok(())
    }

    pub fn snapshot(
        &mut self,
        path: PathBuf,
        state: &GridState,
        exact: Option<&[f64]>,
    ) -> Result<()> {
        write_snapshot_csv(&path, state, exact)?;
        self.files.push(path);
        Ok(())
    }

    pub fn kv(&mut self, path: PathBuf, kv: &KvWriter) -> Result<()> {
        kv.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            0.5 + 1e-7,
            f64::MIN_POSITIVE,
            0.0,
            1.0 - f64::EPSILON,
        ] {
            assert_eq!(
                format_value(v).parse::<f64>().unwrap().to_bits(),
                v.to_bits()
            );
        }
    }

    #[test]
    fn kv_formats() {
        let mut kv = KvWriter::new();
        kv.comment("note")
            .put("a.b", 3)
            .put_f64("rate", f64::INFINITY);
        assert_eq!(kv.finish(), "# note\na.b = 3\nrate = none\n");
    }
}
