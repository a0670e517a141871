//! Output directories and CSV files.
//!
//! Floats are written as `{:.16e}` (17 significant digits, enough to
//! round-trip any f64), so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::label::StateLabel;
use crate::propagator::TrajectoryRecord;
use crate::spectral::ComputationalBasis;

/// Marker left in a directory whose run did not complete.
pub const FAILED_MARKER: &str = "FAILED";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Accumulates a CSV document in memory; written in one go.
#[derive(Clone, Debug)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { columns: header.len(), text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text)?;
        Ok(())
    }
}

/// `tau, P00, P01, P10, P11, leakage, norm` for every recorded sample.
pub fn trajectory_csv(traj: &TrajectoryRecord, basis: &ComputationalBasis) -> Csv {
    let mut csv = Csv::new(&["tau", "P00", "P01", "P10", "P11", "leakage", "norm"]);
    for k in 0..traj.len() {
        let p = traj.computational_populations(k, basis);
        let mut cells = vec![fmt_f64(traj.tau[k])];
        cells.extend(p.iter().map(|&v| fmt_f64(v)));
        cells.push(fmt_f64(traj.leakage(k, basis)));
        cells.push(fmt_f64(traj.norm[k]));
        csv.row(&cells);
    }
    csv
}

pub fn trajectory_file_name(init: StateLabel) -> String {
    format!("trajectory_{init}.csv")
}

/// `<root>/<subcommand>-<label>/`.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Creates (or reuses) the directory and clears any stale failure
    /// marker.
    pub fn create(root: &Path, subcommand: &str, label: &str) -> Result<Self> {
        if label_is_bad(label) {
            return Err(Error::Schema { path: "--label".into(), message: format!("unusable label {label:?}") });
        }
        Self::at(root.join(format!("{subcommand}-{label}")))
    }

    pub fn at(path: PathBuf) -> Result<Self> {
        fs::create_dir_all(&path)?;
        let marker = path.join(FAILED_MARKER);
        if marker.exists() {
            fs::remove_file(marker)?;
        }
        Ok(RunDir { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_csv(&self, name: &str, csv: &Csv) -> Result<()> {
        csv.write(&self.file(name))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.file(name), text)?;
        Ok(())
    }

    pub fn write_config(&self, cfg: &RunConfig) -> Result<()> {
        self.write_text(RESOLVED_CONFIG, &(cfg.to_json() + "\n"))
    }

    /// Leaves a `FAILED` file holding the error message.
    pub fn mark_failed(&self, err: &Error) {
        let _ = fs::write(self.file(FAILED_MARKER), format!("{err}\n"));
    }

    pub fn failed(&self) -> bool {
        self.file(FAILED_MARKER).exists()
    }
}

fn label_is_bad(name: &str) -> bool {
    name.is_empty() || name == "." || name == ".." || name.contains(['/', '\\'])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&["1".into(), "2".into()]);
        assert_eq!(c.as_str(), "a,b\n1,2\n");
    }

    #[test]
    fn marker_cleared_on_reuse() {
        let tmp = tempfile::tempdir().unwrap();
        let d = RunDir::create(tmp.path(), "spectrum", "x").unwrap();
        d.mark_failed(&Error::Validation("boom".into()));
        assert!(d.failed());
        let d = RunDir::create(tmp.path(), "spectrum", "x").unwrap();
        assert!(!d.failed());
        assert!(RunDir::create(tmp.path(), "spectrum", "../x").is_err());
    }
}
