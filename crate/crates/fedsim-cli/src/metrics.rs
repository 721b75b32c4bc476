//! Metrics CSV and summary emission.
//!
//! One CSV row per round with the header
//! `round,initial_acc,personalize_acc,weight_divergence,down_params,up_params,lr`;
//! absent accuracies are empty cells, never zeros. Floats are printed with
//! 17 significant digits so a re-parse reproduces the records exactly.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::experiment::{ExperimentSummary, RoundRecord};

pub const CSV_HEADER: [&str; 7] = [
    "round",
    "initial_acc",
    "personalize_acc",
    "weight_divergence",
    "down_params",
    "up_params",
    "lr",
];

/// 17-significant-digit rendering; round-trips any finite `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_optional(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Streaming CSV writer; rows are flushed as they are written so partial
/// metrics survive an aborted run.
pub struct MetricsWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer
            .write_record(CSV_HEADER)
            .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        let mut w = MetricsWriter {
            path: path.to_path_buf(),
            writer,
        };
        w.flush()?;
        Ok(w)
    }

    pub fn write_record(&mut self, record: &RoundRecord) -> Result<()> {
        self.writer
            .write_record([
                record.round.to_string(),
                format_optional(record.initial_accuracy),
                format_optional(record.personalize_accuracy),
                format_float(record.weight_divergence),
                record.down_params.to_string(),
                record.up_params.to_string(),
                format_float(record.lr),
            ])
            .map_err(|e| CliError::io(&self.path, std::io::Error::other(e)))?;
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| CliError::io(&self.path, e))
    }
}

/// Writes `metrics.csv` and `summary.txt` under `out_dir`, returning both
/// paths.
pub fn emit_metrics(
    records: &[RoundRecord],
    summary: &ExperimentSummary,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let csv_path = out_dir.join("metrics.csv");
    let mut writer = MetricsWriter::create(&csv_path)?;
    for record in records {
        writer.write_record(record)?;
    }
    let summary_path = out_dir.join("summary.txt");
    write_summary(summary, &summary_path)?;
    Ok((csv_path, summary_path))
}

/// Key-value summary file; optional statistics are omitted when absent.
pub fn write_summary(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!(
        "final_initial_accuracy = {}\n",
        format_float(summary.final_initial_accuracy)
    ));
    text.push_str(&format!(
        "final_personalize_accuracy = {}\n",
        format_float(summary.final_personalize_accuracy)
    ));
    if let Some(target) = summary.target_accuracy {
        text.push_str(&format!("target_accuracy = {}\n", format_float(target)));
    }
    if let Some(rounds) = summary.rounds_to_target {
        text.push_str(&format!("rounds_to_target = {rounds}\n"));
    }
    text.push_str(&format!(
        "total_params_transferred = {}\n",
        summary.total_params_transferred
    ));
    if let Some(ratio) = summary.extra_cost_ratio_vs_fedavg {
        text.push_str(&format!(
            "extra_cost_ratio_vs_fedavg = {}\n",
            format_float(ratio)
        ));
    }
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

/// Parses a metrics CSV back into records.
pub fn parse_metrics_csv(path: &Path) -> Result<Vec<RoundRecord>> {
    let malformed = |line: usize, message: String| CliError::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| malformed(0, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| malformed(0, e.to_string()))?
        .clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(malformed(1, format!("unexpected header {headers:?}")));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        if row.len() != CSV_HEADER.len() {
            return Err(malformed(line, format!("{} fields", row.len())));
        }
        let field = |idx: usize| row.get(idx).unwrap_or_default();
        let parse_f64 = |idx: usize| -> Result<f64> {
            field(idx)
                .parse()
                .map_err(|e| malformed(line, format!("field {}: {e}", CSV_HEADER[idx])))
        };
        let parse_u64 = |idx: usize| -> Result<u64> {
            field(idx)
                .parse()
                .map_err(|e| malformed(line, format!("field {}: {e}", CSV_HEADER[idx])))
        };
        let parse_optional = |idx: usize| -> Result<Option<f64>> {
            let raw = field(idx);
            if raw.is_empty() {
                Ok(None)
            } else {
                raw.parse()
                    .map(Some)
                    .map_err(|e| malformed(line, format!("field {}: {e}", CSV_HEADER[idx])))
            }
        };

        records.push(RoundRecord {
            round: field(0)
                .parse()
                .map_err(|e| malformed(line, format!("field round: {e}")))?,
            initial_accuracy: parse_optional(1)?,
            personalize_accuracy: parse_optional(2)?,
            weight_divergence: parse_f64(3)?,
            down_params: parse_u64(4)?,
            up_params: parse_u64(5)?,
            lr: parse_f64(6)?,
        });
    }
    Ok(records)
}
