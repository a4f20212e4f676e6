//! On-disk transcript used by the attack commands.
//!
//! A transcript directory holds `config.toml`, `params.json`, `trace.csv`
//! (ground truth), `masked.csv`, `masters.csv` (`instant,masters,reports`,
//! lists joined by `;`, an empty report meaning dropped) and `shares.csv`
//! (`instant,from_meter,to_master,share`; rows with `from_meter == to_master`
//! are the share a master kept for itself).

use std::path::Path;

use super::{load_matrix, load_trace, write_matrix, write_trace, EnergyTrace};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::noise::PrivacyParams;
use crate::sim::{SimTranscript, TranscriptParts};

/// A transcript read back from disk together with its ground truth.
#[derive(Debug, Clone)]
pub struct StoredTranscript {
    pub transcript: SimTranscript,
    pub truth: EnergyTrace,
}

pub fn write_transcript(dir: impl AsRef<Path>, transcript: &SimTranscript, truth: &EnergyTrace) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seed = Some(transcript.config.seed);
    let cfg_path = dir.join("config.toml");
    std::fs::write(&cfg_path, transcript.config.to_toml_string()).map_err(|e| Error::io(&cfg_path, e))?;
    let params_path = dir.join("params.json");
    std::fs::write(&params_path, serde_json::to_string_pretty(&transcript.params)? + "\n")
        .map_err(|e| Error::io(&params_path, e))?;
    write_trace(dir.join("trace.csv"), truth, seed)?;
    write_matrix(dir.join("masked.csv"), transcript.n_meters(), transcript.n_instants(), transcript.masked(), seed)?;

    let masters_path = dir.join("masters.csv");
    let mut out = super::create(&masters_path)?;
    super::seed_comment(&mut out, &masters_path, seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instant", "masters", "reports"])?;
    for t in 0..transcript.n_instants() {
        let masters: Vec<String> = transcript.masters_at(t).iter().map(usize::to_string).collect();
        let reports: Vec<String> =
            transcript.reports_at(t).iter().map(|r| r.map(|v| v.to_string()).unwrap_or_default()).collect();
        w.write_record([t.to_string(), masters.join(";"), reports.join(";")])?;
    }
    w.flush().map_err(|e| Error::io(&masters_path, e))?;

    if let Some(shares) = transcript.shares() {
        let shares_path = dir.join("shares.csv");
        let mut out = super::create(&shares_path)?;
        super::seed_comment(&mut out, &shares_path, seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instant", "from_meter", "to_master", "share"])?;
        let (n, m) = (transcript.n_meters(), transcript.m_masters());
        for t in 0..transcript.n_instants() {
            let masters = transcript.masters_at(t);
            for i in 0..n {
                for (k, master) in masters.iter().enumerate() {
                    let share = shares[t * n * m + i * m + k];
                    w.write_record([t.to_string(), i.to_string(), master.to_string(), share.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&shares_path, e))?;
    }
    Ok(())
}

pub fn load_transcript(dir: impl AsRef<Path>) -> Result<StoredTranscript> {
    let dir = dir.as_ref();
    let config = SimConfig::from_file(dir.join("config.toml"))?;
    let params_path = dir.join("params.json");
    let params: PrivacyParams =
        serde_json::from_str(&std::fs::read_to_string(&params_path).map_err(|e| Error::io(&params_path, e))?)?;
    let truth = load_trace(dir.join("trace.csv"))?;
    let (n, t_len, masked) = load_matrix(dir.join("masked.csv"), true)?;
    if n != config.n_meters || t_len != config.total_instants() || truth.n_meters() != n || truth.n_instants() != t_len {
        return Err(Error::DimensionMismatch(format!("{}: transcript files disagree with config", dir.display())));
    }
    let m = config.m_masters;

    let mut masters = Vec::with_capacity(t_len * m);
    let mut reports = Vec::with_capacity(t_len * m);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(dir.join("masters.csv"))?;
    for (t, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::MalformedTrace(format!("masters.csv row {t}"));
        let ids: Vec<usize> = rec.get(1).ok_or_else(bad)?.split(';').map(|s| s.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let reps: Vec<Option<f64>> = rec
            .get(2)
            .ok_or_else(bad)?
            .split(';')
            .map(|s| if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|_| bad()) })
            .collect::<Result<_>>()?;
        if ids.len() != m || reps.len() != m {
            return Err(bad());
        }
        masters.extend(ids);
        reports.extend(reps);
    }
    if masters.len() != t_len * m {
        return Err(Error::MalformedTrace("masters.csv does not cover every instant".into()));
    }

    let shares_path = dir.join("shares.csv");
    let shares = if shares_path.exists() {
        let mut shares = vec![f64::NAN; t_len * n * m];
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&shares_path)?;
        for rec in rdr.deserialize::<(usize, usize, usize, f64)>() {
            let (t, i, to, share) = rec?;
            let k = masters
                .get(t * m..(t + 1) * m)
                .and_then(|ms| ms.iter().position(|&x| x == to))
                .filter(|_| i < n)
                .ok_or_else(|| Error::MalformedTrace(format!("share ({t},{i},{to}) does not match masters.csv")))?;
            shares[t * n * m + i * m + k] = share;
        }
        if shares.iter().any(|s| s.is_nan()) {
            return Err(Error::MalformedTrace("shares.csv is incomplete".into()));
        }
        Some(shares)
    } else {
        None
    };

    let transcript = SimTranscript::from_parts(TranscriptParts {
        config,
        params,
        n_meters: n,
        n_instants: t_len,
        masked,
        masters,
        shares,
        reports,
        loads: Vec::new(),
        bills: Vec::new(),
    });
    Ok(StoredTranscript { transcript, truth })
}
