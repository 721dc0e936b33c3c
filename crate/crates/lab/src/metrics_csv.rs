//! Per-epoch metric CSVs: `epoch,test_accuracy,label_precision,mean_train_loss,wall_clock_s`.

use std::fs::File;
use std::path::{Path, PathBuf};

use pumpout_core::metrics::EpochMetrics;

use crate::error::{LabError, Result};

pub const HEADER: [&str; 5] = ["epoch", "test_accuracy", "label_precision", "mean_train_loss", "wall_clock_s"];

/// Appends one flushed row per epoch, so an interrupted run leaves a valid prefix.
pub struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| LabError::io(path, e))?;
        let mut w = Self { path: path.to_path_buf(), inner: csv::Writer::from_writer(file) };
        w.write_record(HEADER.iter().map(|s| s.to_string()).collect())?;
        Ok(w)
    }

    fn write_record(&mut self, fields: Vec<String>) -> Result<()> {
        let path = &self.path;
        self.inner
            .write_record(&fields)
            .map_err(|e| LabError::format(path, e.to_string()))?;
        self.inner.flush().map_err(|e| LabError::io(path, e))
    }

    pub fn write(&mut self, m: &EpochMetrics, wall_clock_s: f64) -> Result<()> {
        self.write_record(vec![
            m.epoch.to_string(),
            opt(m.test_accuracy),
            opt(m.label_precision),
            m.mean_train_loss.to_string(),
            format!("{wall_clock_s:.3}"),
        ])
    }
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub test_accuracy: Option<f64>,
    pub label_precision: Option<f64>,
    pub mean_train_loss: f64,
    pub wall_clock_s: f64,
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    parse_metrics(file, path)
}

pub fn parse_metrics(reader: impl std::io::Read, path: &Path) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(LabError::format(path, "line 1: empty file, expected a header row")),
        Some(r) => r.map_err(|e| LabError::format(path, format!("line 1: {e}")))?,
    };
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(LabError::format(path, format!("line 1: expected header {}", HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| LabError::format(path, format!("line {line}: {e}")))?;
        if record.len() != HEADER.len() {
            return Err(LabError::format(path, format!("line {line}: expected 5 fields, found {}", record.len())));
        }
        let num = |idx: usize| -> Result<Option<f64>> {
            let field = record[idx].trim();
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse::<f64>()
                .map(Some)
                .map_err(|_| LabError::format(path, format!("line {line}: bad {} value {field:?}", HEADER[idx])))
        };
        let epoch = record[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| LabError::format(path, format!("line {line}: bad epoch {:?}", &record[0])))?;
        rows.push(MetricsRow {
            epoch,
            test_accuracy: num(1)?,
            label_precision: num(2)?,
            mean_train_loss: num(3)?
                .ok_or_else(|| LabError::format(path, format!("line {line}: missing mean_train_loss")))?,
            wall_clock_s: num(4)?.unwrap_or(0.0),
        });
    }
    if rows.is_empty() {
        return Err(LabError::format(path, "line 2: no data rows"));
    }
    Ok(rows)
}
