use std::path::{Path, PathBuf};

use crate::aggregator::{BillStatement, LoadReport};
use crate::attacks::AttackRecord;
use crate::error::{Error, Result};
use crate::metrics::MetricBundle;

pub const LOAD_HEADER: [&str; 5] = ["instant", "masked_sum", "reported_noise", "recovered_load", "masters_missing"];
pub const BILLS_HEADER: [&str; 7] = ["meter_id", "period", "masked_total", "base", "surcharge", "correction", "total"];
pub const ATTACKS_HEADER: [&str; 5] = ["attack", "param", "meter_id", "metric", "value"];

/// Everything `write_reports` serializes.
#[derive(Debug, Clone, Copy)]
pub struct ReportSet<'a> {
    pub seed: u64,
    pub loads: &'a [LoadReport],
    pub bills: &'a [BillStatement],
    pub attacks: &'a [AttackRecord],
    pub metrics: &'a MetricBundle,
}

/// Writes `load.csv`, `bills.csv`, `attacks.csv` and `metrics.json` into `out_dir`.
///
/// Each CSV starts with a `# seed=<seed>` comment line.
pub fn write_reports(reports: &ReportSet<'_>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seed = Some(reports.seed);

    let load_path = dir.join("load.csv");
    let mut w = csv_writer(&load_path, seed)?;
    w.write_record(LOAD_HEADER)?;
    for l in reports.loads {
        w.write_record([
            l.instant.to_string(),
            l.masked_sum.to_string(),
            l.reported_noise_sum.to_string(),
            l.recovered_load.to_string(),
            l.masters_missing.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&load_path, e))?;

    let bills_path = dir.join("bills.csv");
    let mut w = csv_writer(&bills_path, seed)?;
    w.write_record(BILLS_HEADER)?;
    for b in reports.bills {
        w.write_record([
            b.meter_id.to_string(),
            b.period.to_string(),
            b.masked_total.to_string(),
            b.base_bill.to_string(),
            b.surcharge_bill.to_string(),
            b.error_correction_applied.to_string(),
            b.total_bill.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&bills_path, e))?;

    let attacks_path = dir.join("attacks.csv");
    write_attacks(&attacks_path, reports.attacks, seed)?;

    let metrics_path = dir.join("metrics.json");
    let json = serde_json::to_string_pretty(reports.metrics)?;
    std::fs::write(&metrics_path, json + "\n").map_err(|e| Error::io(&metrics_path, e))?;

    Ok(vec![load_path, bills_path, attacks_path, metrics_path])
}

/// Writes attack rows in the `attacks.csv` schema.
pub fn write_attacks(path: &Path, attacks: &[AttackRecord], seed: Option<u64>) -> Result<()> {
    let mut w = csv_writer(path, seed)?;
    w.write_record(ATTACKS_HEADER)?;
    for a in attacks {
        w.write_record([
            a.attack.clone(),
            a.param.clone(),
            a.meter_id.map(|m| m.to_string()).unwrap_or_default(),
            a.metric.clone(),
            a.value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_writer(path: &Path, seed: Option<u64>) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    let mut out = super::create(path)?;
    super::seed_comment(&mut out, path, seed)?;
    Ok(csv::Writer::from_writer(out))
}
