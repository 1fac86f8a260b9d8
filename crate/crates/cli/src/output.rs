use std::fs;
use std::path::{Path, PathBuf};

use cqed_core::{Error, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Output directory of one run. Every file it writes carries `hash`, the
/// digest of (subcommand, resolved config, code version).
pub struct RunDir {
    pub dir: PathBuf,
    pub hash: String,
    pub command: String,
    gnuplot: bool,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

impl RunDir {
    pub fn create(dir: &Path, command: &str, resolved_config: &str, gnuplot: bool) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        // a report left by an earlier failed run would misdescribe this one
        let stale = dir.join("error.json");
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| io_err(&stale, e))?;
        }
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        h.update(resolved_config.as_bytes());
        h.update([0]);
        h.update(CODE_VERSION.as_bytes());
        let run = RunDir {
            dir: dir.to_path_buf(),
            hash: hex::encode(h.finalize()),
            command: command.to_string(),
            gnuplot,
        };
        run.write_text(
            "config.resolved.toml",
            &format!("# provenance {} ({CODE_VERSION}, {command})\n{resolved_config}", run.hash),
        )?;
        Ok(run)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn provenance(&self) -> Value {
        json!({ "hash": self.hash, "code_version": CODE_VERSION, "command": self.command })
    }

    /// Writes `body` with a `provenance` member added.
    pub fn write_json(&self, name: &str, mut body: Value) -> Result<PathBuf> {
        if let Value::Object(map) = &mut body {
            map.insert("provenance".into(), self.provenance());
        } else {
            body = json!({ "provenance": self.provenance(), "data": body });
        }
        let text = serde_json::to_string_pretty(&body).expect("plain data");
        self.write_text(name, &(text + "\n"))
    }

    /// CSV with a leading `#` provenance line, which gnuplot and most readers skip.
    pub fn write_csv(&self, name: &str, header: &[String], records: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for r in records {
            w.write_record(r).map_err(|e| io_err(&path, e))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| io_err(&path, e))?).expect("utf-8 records");
        self.write_text(name, &format!("# provenance {}\n{body}", self.hash))
    }

    /// Histogram CSVs come preformatted from the core crate.
    pub fn write_csv_text(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write_text(name, &format!("# provenance {}\n{body}", self.hash))
    }

    /// Plot script for `csv` (columns are 1-based) when `--emit-gnuplot` is on.
    pub fn gnuplot(&self, csv: &str, plot: &Plot) -> Result<()> {
        if !self.gnuplot {
            return Ok(());
        }
        let stem = csv.trim_end_matches(".csv");
        let mut s = String::new();
        s.push_str(&format!("# provenance {}\n", self.hash));
        s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
        s.push_str(&format!("set terminal pngcairo size 900,600\nset output '{stem}.png'\n"));
        s.push_str(&format!("set xlabel '{}'\n", plot.xlabel));
        if let Some(y) = &plot.ylabel {
            s.push_str(&format!("set ylabel '{y}'\n"));
        }
        if plot.logx {
            s.push_str("set logscale x\n");
        }
        if let Some(map) = plot.heatmap {
            s.push_str(&format!(
                "set size ratio -1\nset view map\nset palette rgb 33,13,10\nsplot '{csv}' using 1:2:3 with points pt 5 ps {map} palette notitle\n"
            ));
        } else {
            let parts: Vec<String> = plot
                .ycols
                .iter()
                .map(|c| format!("'{csv}' using {}:{c} with linespoints", plot.xcol))
                .collect();
            s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        }
        self.write_text(&format!("{stem}.gp"), &s)?;
        Ok(())
    }

    pub fn write_error(&self, err: &Error) -> Result<PathBuf> {
        self.write_json("error.json", json!({ "error": err.record(), "detail": error_detail(err) }))
    }
}

/// Data an error carries beyond its message.
pub fn error_detail(err: &Error) -> Value {
    match err {
        Error::BudgetExceeded { last_cutoff, trace } => json!({ "last_cutoff": last_cutoff, "trace": trace }),
        Error::NoConvergence { iterations, residual, energy, .. } => {
            json!({ "iterations": iterations, "residual": residual, "energy": energy })
        }
        Error::DimensionOverflow { dim, budget } => json!({ "dim": dim.to_string(), "budget": budget.to_string() }),
        _ => Value::Null,
    }
}

pub struct Plot {
    pub xlabel: String,
    pub ylabel: Option<String>,
    pub xcol: usize,
    pub ycols: Vec<usize>,
    pub logx: bool,
    /// Point size of a colour map over columns 1:2:3.
    pub heatmap: Option<f64>,
}

impl Plot {
    pub fn lines(xlabel: &str, ycols: Vec<usize>) -> Self {
        Plot {
            xlabel: xlabel.into(),
            ylabel: None,
            xcol: 1,
            ycols,
            logx: false,
            heatmap: None,
        }
    }
}
