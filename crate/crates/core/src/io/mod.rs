//! Trace ingestion, synthetic household traces and report files.

mod report;
mod synth;
mod trace;
mod transcript;

pub use report::{write_attacks, write_reports, ReportSet, ATTACKS_HEADER, BILLS_HEADER, LOAD_HEADER};
pub use synth::{synth_trace, Peak, SynthDistribution, SynthProfileSpec, SLOTS_PER_DAY};
pub use trace::{load_matrix, load_trace, write_matrix, write_trace, EnergyTrace, GRANULARITY_MINUTES};
pub use transcript::{load_transcript, write_transcript, StoredTranscript};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn seed_comment<W: Write>(w: &mut W, path: &Path, seed: Option<u64>) -> Result<()> {
    if let Some(seed) = seed {
        writeln!(w, "# seed={seed}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
