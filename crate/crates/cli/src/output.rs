use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes result files into one directory, each opening with the same
/// `#` metadata header.
pub struct Output {
    dir: PathBuf,
    header: String,
    plot: bool,
}

impl Output {
    pub fn new(dir: &Path, command: &str, config_hash: &str, plot: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header: format!(
                "# hybridpop {command} {}\n# config_sha256: {config_hash}\n",
                env!("CARGO_PKG_VERSION")
            ),
            plot,
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        out.write_all(self.header.as_bytes())?;
        Ok(out)
    }

    pub fn csv(&self, name: &str, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut out = self.create(&format!("{name}.csv"))?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r.iter().map(|v| num(*v)))?;
        }
        w.flush()?;
        if self.plot {
            self.dat(name, comments, columns, rows)?;
        }
        Ok(())
    }

    /// Whitespace columns for gnuplot; a blank line whenever the first
    /// column changes so `splot` sees one scan per spatial node.
    fn dat(&self, name: &str, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut out = self.create(&format!("{name}.dat"))?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "# {}", columns.join(" "))?;
        let blocks = columns.len() == 3;
        for (i, r) in rows.iter().enumerate() {
            if blocks && i > 0 && rows[i - 1][0] != r[0] {
                writeln!(out)?;
            }
            let line: Vec<String> = r.iter().map(|v| num(*v)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    /// `key: value` report.
    pub fn text(&self, name: &str, entries: &[(&str, String)]) -> Result<()> {
        let mut out = self.create(name)?;
        for (k, v) in entries {
            writeln!(out, "{k}: {v}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV whose cells are already formatted.
    pub fn records(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let out = self.create(&format!("{name}.csv"))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
