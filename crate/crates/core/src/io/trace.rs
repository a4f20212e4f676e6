use std::path::Path;

use crate::error::{Error, Result};

/// Width of one reading slot.
pub const GRANULARITY_MINUTES: u32 = 10;

/// `N × T` matrix of non-negative kWh readings, one row per meter.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    n_meters: usize,
    n_instants: usize,
    values: Vec<f64>,
}

impl EnergyTrace {
    /// Builds a trace from row-major values, rejecting negative or non-finite readings.
    pub fn new(n_meters: usize, n_instants: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_meters * n_instants {
            return Err(Error::MalformedTrace(format!(
                "{} values for a {n_meters}x{n_instants} trace",
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidReading {
                meter: (idx / n_instants.max(1)).to_string(),
                instant: idx % n_instants.max(1),
                value: values[idx].to_string(),
            });
        }
        Ok(Self { n_meters, n_instants, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_instants = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_instants) {
            return Err(Error::MalformedTrace("ragged rows".into()));
        }
        let n_meters = rows.len();
        Self::new(n_meters, n_instants, rows.into_iter().flatten().collect())
    }

    pub fn n_meters(&self) -> usize {
        self.n_meters
    }

    pub fn n_instants(&self) -> usize {
        self.n_instants
    }

    pub fn granularity_minutes(&self) -> u32 {
        GRANULARITY_MINUTES
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meter(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_instants..(i + 1) * self.n_instants]
    }

    pub fn at(&self, meter: usize, instant: usize) -> f64 {
        self.values[meter * self.n_instants + instant]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_instants.max(1)).take(self.n_meters)
    }

    /// Column sum at `instant`.
    pub fn instant_total(&self, instant: usize) -> f64 {
        (0..self.n_meters).map(|i| self.at(i, instant)).sum()
    }

    /// Keeps the first `n_instants` readings of every meter.
    pub fn truncated(&self, n_instants: usize) -> Self {
        let n = n_instants.min(self.n_instants);
        let values = self.rows().flat_map(|r| r[..n].iter().copied()).collect();
        Self { n_meters: self.n_meters, n_instants: n, values }
    }
}

/// Reads a trace CSV (`meter_id,t0,t1,...`), validating rectangularity and non-negativity.
pub fn load_trace(path: impl AsRef<Path>) -> Result<EnergyTrace> {
    let (n_meters, n_instants, values) = load_matrix(path, false)?;
    EnergyTrace::new(n_meters, n_instants, values)
}

/// Reads any matrix in the trace layout. Negative entries are accepted when
/// `allow_negative` is set (masked readings), rejected otherwise.
pub fn load_matrix(path: impl AsRef<Path>, allow_negative: bool) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("meter_id") {
        return Err(Error::MalformedTrace(format!(
            "{}: header must start with `meter_id`",
            path.display()
        )));
    }
    let n_instants = headers.len() - 1;
    let mut values = Vec::new();
    let mut n_meters = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != n_instants + 1 {
            return Err(Error::MalformedTrace(format!(
                "{}: row {} has {} readings, header declares {n_instants}",
                path.display(),
                n_meters + 1,
                record.len().saturating_sub(1)
            )));
        }
        let id = &record[0];
        for (t, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::InvalidReading {
                meter: id.to_string(),
                instant: t,
                value: field.to_string(),
            })?;
            if !v.is_finite() || (!allow_negative && v < 0.0) {
                return Err(Error::InvalidReading { meter: id.to_string(), instant: t, value: field.to_string() });
            }
            values.push(v);
        }
        n_meters += 1;
    }
    Ok((n_meters, n_instants, values))
}

pub fn write_trace(path: impl AsRef<Path>, trace: &EnergyTrace, seed: Option<u64>) -> Result<()> {
    write_matrix(path, trace.n_meters(), trace.n_instants(), trace.values(), seed)
}

/// Writes a row-major matrix in the trace layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix(
    path: impl AsRef<Path>,
    n_meters: usize,
    n_instants: usize,
    values: &[f64],
    seed: Option<u64>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = super::create(path)?;
    super::seed_comment(&mut out, path, seed)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(n_instants + 1);
    header.push("meter_id".to_string());
    header.extend((0..n_instants).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(n_instants + 1);
    for i in 0..n_meters {
        row.clear();
        row.push(i.to_string());
        row.extend(values[i * n_instants..(i + 1) * n_instants].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_small_trace() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "meter_id,t0,t1,t2\n0,0,1,2\n1,3,4,5\n").unwrap();
        let t = load_trace(&p).unwrap();
        assert_eq!((t.n_meters(), t.n_instants()), (2, 3));
        assert_eq!(t.meter(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn rejects_negative_reading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "meter_id,t0,t1\n0,1,-1\n").unwrap();
        let err = load_trace(&p).unwrap_err();
        assert!(matches!(err, Error::InvalidReading { .. }), "{err}");
        assert!(err.to_string().contains("invalid reading"));
    }

    #[test]
    fn rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "meter_id,t0,t1\n0,1,2\n1,3\n").unwrap();
        let err = load_trace(&p).unwrap_err();
        assert!(err.to_string().contains("malformed trace"), "{err}");
    }

    #[test]
    fn skips_seed_comment() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = EnergyTrace::new(1, 2, vec![0.5, 0.25]).unwrap();
        write_trace(&p, &t, Some(9)).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("# seed=9\n"));
        assert_eq!(load_trace(&p).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn write_then_load_is_identity(
            n in 1usize..5,
            t in 1usize..6,
            seed_vals in proptest::collection::vec(0.0f64..1e4, 30),
        ) {
            let values: Vec<f64> = (0..n * t).map(|k| seed_vals[k % seed_vals.len()] / (k as f64 + 1.0)).collect();
            let trace = EnergyTrace::new(n, t, values).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.csv");
            write_trace(&p, &trace, None).unwrap();
            prop_assert_eq!(load_trace(&p).unwrap(), trace);
        }
    }
}
