//! Run artifacts: telemetry CSV, report JSON, summary table, comparison
//! JSON and heatmap CSV. Column sets are fixed; rows are strictly
//! time-ordered; identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use steergame::metrics::EpisodeReport;
use steergame::sim::TelemetrySample;

use crate::CliError;

pub const TELEMETRY_HEADER: [&str; 16] = [
    "time_s",
    "record",
    "name",
    "agent",
    "rtt_ms",
    "jitter_ms",
    "loss",
    "capacity_mbps",
    "offered_mbps",
    "delivered_mbps",
    "alloc_ntn",
    "blended_rtt_ms",
    "blended_jitter_ms",
    "blended_loss",
    "violated",
    "potential",
];

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("io: {e}"))
}

/// One row per tick per link, followed by one row per tick per slice.
/// Timestamps carry 3 decimals; all other numeric cells 6.
pub fn write_telemetry_csv(path: &Path, samples: &[TelemetrySample]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(TELEMETRY_HEADER).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    for sample in samples {
        let time = format!("{:.3}", sample.time_s);
        for (name, link) in [("ntn", &sample.ntn), ("fib", &sample.fib)] {
            w.write_record([
                time.as_str(),
                "link",
                name,
                "",
                &fmt(link.rtt_ms),
                &fmt(link.jitter_ms),
                &fmt(link.loss),
                &fmt(link.capacity_mbps),
                &fmt(link.tx_mbps),
                &fmt(link.rx_mbps),
                "",
                "",
                "",
                "",
                "",
                &fmt(sample.potential),
            ])
            .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        }
        for slice in &sample.slices {
            w.write_record([
                time.as_str(),
                "slice",
                slice.class.name(),
                &slice.agent.to_string(),
                "",
                "",
                "",
                "",
                &fmt(slice.offered_mbps),
                &fmt(slice.delivered_mbps),
                &fmt(slice.alloc),
                &fmt(slice.blended_rtt_ms),
                &fmt(slice.blended_jitter_ms),
                &fmt(slice.blended_loss),
                if slice.violated { "1" } else { "0" },
                "",
            ])
            .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Envelope written as report.json.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub controller: String,
    pub seed: u64,
    pub duration_s: f64,
    pub report: EpisodeReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".to_string())
}

/// Plain-text summary table, one row per controller.
pub fn summary_table(rows: &[(String, &EpisodeReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>10} {:>9} {:>18} {:>9}\n",
        "Algorithm", "RTT (ms)", "Loss (%)", "Throughput (Mbps)", "Fairness"
    ));
    for (name, report) in rows {
        out.push_str(&format!(
            "{:<16} {:>10} {:>9} {:>18} {:>9}\n",
            name,
            opt(report.effective_rtt_ms),
            opt(report.loss_pct),
            format!("{:.3}", report.throughput_mbps),
            opt(report.fairness),
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes()).map_err(io_err)
}

/// Per-controller aggregate over paired seeds.
#[derive(Debug, Clone, Serialize)]
pub struct ControllerSummary {
    pub mean_effective_rtt_ms: Option<f64>,
    pub mean_loss_pct: Option<f64>,
    pub mean_throughput_mbps: f64,
    pub mean_fairness: Option<f64>,
    pub mean_violation_rates_pct: BTreeMap<String, f64>,
    pub per_seed: Vec<ReportDocument>,
}

impl ControllerSummary {
    pub fn from_reports(reports: Vec<ReportDocument>) -> Self {
        let n = reports.len().max(1) as f64;
        let mean_of = |f: &dyn Fn(&EpisodeReport) -> Option<f64>| {
            let values: Vec<f64> = reports.iter().filter_map(|r| f(&r.report)).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let mut rates: BTreeMap<String, f64> = BTreeMap::new();
        for doc in &reports {
            for (class, rate) in &doc.report.per_slice_violation_rates_pct {
                *rates.entry(class.clone()).or_insert(0.0) += rate / n;
            }
        }
        ControllerSummary {
            mean_effective_rtt_ms: mean_of(&|r| r.effective_rtt_ms),
            mean_loss_pct: mean_of(&|r| r.loss_pct),
            mean_throughput_mbps: reports.iter().map(|r| r.report.throughput_mbps).sum::<f64>()
                / n,
            mean_fairness: mean_of(&|r| r.fairness),
            mean_violation_rates_pct: rates,
            per_seed: reports,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonDocument {
    pub schema_version: u32,
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub controllers: BTreeMap<String, ControllerSummary>,
}

pub const HEATMAP_HEADER: [&str; 3] = ["controller", "class", "violation_rate_pct"];

/// Long-form heatmap: one row per (controller, class) cell with the
/// seed-averaged violation rate.
pub fn write_heatmap_csv(path: &Path, comparison: &ComparisonDocument) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(HEATMAP_HEADER).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    for (controller, summary) in &comparison.controllers {
        for (class, rate) in &summary.mean_violation_rates_pct {
            w.write_record([controller.as_str(), class.as_str(), &fmt(*rate)])
                .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
