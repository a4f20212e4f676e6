//! Adversary toolkit: negative-noise removal, moving-average filtering with a
//! best-fit window search, and the master-collusion attack.

use std::collections::BTreeSet;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::io::EnergyTrace;
use crate::meter::MeterId;
use crate::metrics::pearson_corr;
use crate::rng::{Purpose, SeedTree};
use crate::sim::{InstantObserver, InstantView, SimTranscript};

/// Clamps every reading to be non-negative: consumption can never be below zero,
/// so a negative masked value is known to be mostly noise.
pub fn remove_negative_noise(profile: &[f64]) -> Vec<f64> {
    profile.iter().map(|v| v.max(0.0)).collect()
}

/// Divisor of the moving-window sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowDivisor {
    /// Arithmetic mean: divide by the window length `2P + 1`.
    #[default]
    WindowLength,
    /// Divide by `P`, as the filter is sometimes written. Only rescales the
    /// interior, which leaves Pearson scores unchanged.
    HalfWidth,
}

/// Smoothed profile produced by the filtering attack.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterProfile {
    pub meter_id: MeterId,
    pub p: usize,
    pub values: Vec<f64>,
}

/// Centred moving average of half-width `p` over a masked profile.
///
/// The first and last `p` entries are copied unchanged. `p = 0` is the identity.
pub fn filtering_attack(meter_id: MeterId, masked: &[f64], p: usize, divisor: WindowDivisor) -> Result<FilterProfile> {
    let len = masked.len();
    let window = 2 * p + 1;
    if window > len {
        return Err(Error::WindowExceedsProfile { window, len });
    }
    if p == 0 {
        return Ok(FilterProfile { meter_id, p, values: masked.to_vec() });
    }
    let denom = match divisor {
        WindowDivisor::WindowLength => window as f64,
        WindowDivisor::HalfWidth => p as f64,
    };
    let mut values = masked.to_vec();
    let mut sum: f64 = masked[..window].iter().sum();
    for j in p..len - p {
        if j > p {
            sum += masked[j + p] - masked[j - p - 1];
        }
        values[j] = sum / denom;
    }
    Ok(FilterProfile { meter_id, p, values })
}

/// Outcome of a window-size search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestFit {
    pub p: usize,
    pub correlation: f64,
}

/// Finds the window half-width whose filtered profile correlates best with
/// `original`. Ties go to the smaller `P`. Windows whose filtered profile is
/// constant are skipped.
pub fn best_fit_p(
    masked: &[f64],
    original: &[f64],
    p_range: impl IntoIterator<Item = usize>,
) -> Result<BestFit> {
    let mut best: Option<BestFit> = None;
    let mut tried = false;
    for p in p_range {
        tried = true;
        let filtered = filtering_attack(0, masked, p, WindowDivisor::WindowLength)?;
        let r = match pearson_corr(&filtered.values, original) {
            Ok(r) => r,
            Err(Error::DegenerateSeries(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|b| r > b.correlation) {
            best = Some(BestFit { p, correlation: r });
        }
    }
    if !tried {
        return Err(Error::InvalidWindow(0));
    }
    best.ok_or(Error::DegenerateSeries("every filtered profile is constant"))
}

/// Probability that a uniformly drawn set of `m` masters out of `n` meters is
/// entirely inside a malicious set of size `c`: `C(c, m) / C(n, m)`.
pub fn analytic_leak(n: usize, c: usize, m: usize) -> f64 {
    if c < m || m == 0 || n == 0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    (0..m).map(|j| (c - j) as f64 / (n - j) as f64).product()
}

/// Leak accounting over honest meters only.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct LeakStats {
    pub reconstructed_points: u64,
    pub honest_points_total: u64,
    pub leak_fraction: f64,
    /// Instants at which every master was malicious.
    pub leaked_instants: u64,
}

impl LeakStats {
    /// With no honest meters there are no points to count; the fraction then
    /// falls back to the share of fully colluding instants.
    fn finish(reconstructed_points: u64, honest_points_total: u64, leaked_instants: u64, instants: u64) -> Self {
        let leak_fraction = if honest_points_total == 0 {
            if instants == 0 { 0.0 } else { leaked_instants as f64 / instants as f64 }
        } else {
            reconstructed_points as f64 / honest_points_total as f64
        };
        Self { reconstructed_points, honest_points_total, leak_fraction, leaked_instants }
    }
}

/// The set of meters colluding with the adversary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaliciousSet {
    mask: Vec<bool>,
    count: usize,
}

impl MaliciousSet {
    pub fn from_ids(n_meters: usize, ids: impl IntoIterator<Item = MeterId>) -> Result<Self> {
        let ids: BTreeSet<MeterId> = ids.into_iter().collect();
        if let Some(&bad) = ids.iter().find(|&&i| i >= n_meters) {
            return Err(Error::DimensionMismatch(format!("malicious meter {bad} outside 0..{n_meters}")));
        }
        let mut mask = vec![false; n_meters];
        for &i in &ids {
            mask[i] = true;
        }
        Ok(Self { mask, count: ids.len() })
    }

    /// A uniformly random set of `c` colluders derived from `seed`.
    pub fn random(n_meters: usize, c: usize, seed: u64) -> Result<Self> {
        if c > n_meters {
            return Err(Error::DimensionMismatch(format!("{c} colluders among {n_meters} meters")));
        }
        let mut rng = SeedTree::new(seed).stream(Purpose::Collusion, c as u64);
        Self::from_ids(n_meters, index::sample(&mut rng, n_meters, c))
    }

    pub fn contains(&self, id: MeterId) -> bool {
        self.mask.get(id).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn n_meters(&self) -> usize {
        self.mask.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = MeterId> + '_ {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }

    fn covers(&self, masters: &[MeterId]) -> bool {
        masters.iter().all(|&k| self.contains(k))
    }
}

/// A collusion attack against a recorded run.
#[derive(Debug, Clone, Copy)]
pub struct CollusionScenario<'a> {
    pub malicious: &'a MaliciousSet,
    pub transcript: &'a SimTranscript,
}

/// Result of [`collusion_attack`].
#[derive(Debug, Clone, PartialEq)]
pub struct CollusionOutcome {
    pub stats: LeakStats,
    /// `(meter, instant, reconstructed reading)` for every leaked honest point.
    pub reconstructed: Vec<(MeterId, usize, f64)>,
}

/// Replays the adversary over a transcript that recorded the noise shares.
///
/// At every instant whose masters all collude, the adversary holds every share
/// each honest meter sent, so it recovers `x = X − Σ shares` exactly.
pub fn collusion_attack(scenario: CollusionScenario<'_>) -> Result<CollusionOutcome> {
    let tr = scenario.transcript;
    let mal = scenario.malicious;
    if mal.n_meters() != tr.n_meters() {
        return Err(Error::DimensionMismatch(format!(
            "malicious set over {} meters, transcript has {}",
            mal.n_meters(),
            tr.n_meters()
        )));
    }
    let shares = tr.shares().ok_or_else(|| {
        Error::DimensionMismatch("transcript was recorded without noise shares".into())
    })?;
    let (n, m, t_len) = (tr.n_meters(), tr.m_masters(), tr.n_instants());
    let mut reconstructed = Vec::new();
    let mut leaked_instants = 0;
    for t in 0..t_len {
        if !mal.covers(tr.masters_at(t)) {
            continue;
        }
        leaked_instants += 1;
        let row = &shares[t * n * m..(t + 1) * n * m];
        for i in (0..n).filter(|&i| !mal.contains(i)) {
            let net: f64 = row[i * m..(i + 1) * m].iter().sum();
            reconstructed.push((i, t, tr.masked_at(i, t) - net));
        }
    }
    let honest = ((n - mal.len()) * t_len) as u64;
    Ok(CollusionOutcome {
        stats: LeakStats::finish(reconstructed.len() as u64, honest, leaked_instants, t_len as u64),
        reconstructed,
    })
}

/// The same adversary run online, without keeping the shares in memory.
#[derive(Debug)]
pub struct CollusionObserver<'a> {
    malicious: &'a MaliciousSet,
    truth: Option<&'a EnergyTrace>,
    reconstructed: u64,
    leaked_instants: u64,
    instants: u64,
    max_error: f64,
}

impl<'a> CollusionObserver<'a> {
    pub fn new(malicious: &'a MaliciousSet) -> Self {
        Self { malicious, truth: None, reconstructed: 0, leaked_instants: 0, instants: 0, max_error: 0.0 }
    }

    /// Also checks every reconstructed point against the ground truth.
    pub fn verified(malicious: &'a MaliciousSet, truth: &'a EnergyTrace) -> Self {
        Self { truth: Some(truth), ..Self::new(malicious) }
    }

    pub fn stats(&self) -> LeakStats {
        let honest = (self.malicious.n_meters() - self.malicious.len()) as u64 * self.instants;
        LeakStats::finish(self.reconstructed, honest, self.leaked_instants, self.instants)
    }

    /// Largest `|reconstructed − true|` seen; 0 without ground truth.
    pub fn max_reconstruction_error(&self) -> f64 {
        self.max_error
    }
}

impl InstantObserver for CollusionObserver<'_> {
    fn observe(&mut self, view: &InstantView<'_>) {
        self.instants += 1;
        if !self.malicious.covers(view.masters) {
            return;
        }
        self.leaked_instants += 1;
        let m = view.masters.len();
        for (i, masked) in view.masked.iter().enumerate() {
            if self.malicious.contains(i) {
                continue;
            }
            let net: f64 = view.shares[i * m..(i + 1) * m].iter().sum();
            let x = masked - net;
            if let Some(truth) = self.truth {
                self.max_error = self.max_error.max((x - truth.at(i, view.instant)).abs());
            }
            self.reconstructed += 1;
        }
    }
}

/// One row of `attacks.csv`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AttackRecord {
    pub attack: String,
    pub param: String,
    pub meter_id: Option<MeterId>,
    pub metric: String,
    pub value: f64,
}

impl AttackRecord {
    pub fn new(attack: &str, param: impl ToString, meter_id: Option<MeterId>, metric: &str, value: f64) -> Self {
        Self { attack: attack.into(), param: param.to_string(), meter_id, metric: metric.into(), value }
    }
}
