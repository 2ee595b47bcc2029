use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::RunError;

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Debug formatting is the shortest string that round-trips.
            Self::F(v) => format!("{v:?}"),
            Self::I(v) => v.to_string(),
            Self::S(s) => s.clone(),
            Self::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::I(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::S(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::B(v)
    }
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::output::Cell::from($v)),*] };
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    seed: u64,
    params: &'a crate::config::Params,
    files: &'a [FileEntry],
}

/// Writes experiment artifacts and records them for the manifest.
pub struct Sink {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Sink {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_owned(), files: Vec::new() })
    }

    fn record(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes)?;
        log::info!("wrote {}", path.display());
        self.files.push(FileEntry {
            path: name.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Headers follow the `name[unit]` convention.
    pub fn csv(&mut self, name: &str, headers: &[&str], rows: &[Vec<Cell>]) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(headers)?;
        for (k, r) in rows.iter().enumerate() {
            if r.len() != headers.len() {
                return Err(RunError::Output(format!("{name}: row {k} has {} cells for {} columns", r.len(), headers.len())));
            }
            w.write_record(r.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Output(e.to_string()))?;
        self.record(name, bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.record(name, bytes)
    }

    /// Writes `manifest.json` listing every artifact with its digest.
    pub fn finish(self, cfg: &ExperimentConfig) -> Result<PathBuf, RunError> {
        let manifest = Manifest {
            experiment: cfg.experiment.name(),
            seed: cfg.seed,
            params: &cfg.params,
            files: &self.files,
        };
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes)?;
        Ok(path)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(Cell::F(v).render().parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn grids() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let l = logspace(1.0, 100.0, 3);
        assert!((l[1] - 10.0).abs() < 1e-12);
        let x = [1.0, 2.0, 4.0];
        let (s, _) = loglog_fit(&x, &x.map(|v| 3.0 * v * v)).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn manifest_lists_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = Sink::create(dir.path()).unwrap();
        sink.csv("a.csv", &["x[1]"], &[row![1.5]]).unwrap();
        assert_eq!(sink.files[0].bytes, 9);
        assert_eq!(sink.files[0].sha256.len(), 64);
        assert!(sink.csv("b.csv", &["x", "y"], &[row![1.0]]).is_err());
    }
}
