//! Discrete-time driver for the protocol.
//!
//! Each instant runs as a barrier round: masters are drawn, every meter
//! steps and emits its shares, then each master reports its share sum (or is
//! dropped), and only then does the aggregator recover the load. Billing and
//! error settlement run at the end of every billing period.

use rand::seq::index;
use rand::Rng;

use crate::aggregator::{aggregate_load, compute_bill, BillStatement, ErrorReport, ErrorSettlement, LoadReport};
use crate::attacks::{CollusionObserver, MaliciousSet};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::io::{EnergyTrace, SLOTS_PER_DAY};
use crate::meter::{MeterId, MeterState, NoiseShareMessage};
use crate::metrics::{mae, pearson_corr, MetricBundle, RunMetrics};
use crate::noise::{compute_sensitivity, PrivacyParams};
use crate::rng::{Purpose, SeedTree};

/// Draws `m` distinct masters uniformly from `0..n`, returned in ascending order.
pub fn select_masters<R: Rng + ?Sized>(n_meters: usize, m_masters: usize, rng: &mut R) -> Result<Vec<MeterId>> {
    if m_masters > n_meters {
        return Err(Error::TooManyMasters { m: m_masters, n: n_meters });
    }
    if m_masters == 0 {
        return Err(Error::NoMasters);
    }
    let mut ids = index::sample(rng, n_meters, m_masters).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Everything observable at the end of one instant's barrier.
#[derive(Debug, Clone, Copy)]
pub struct InstantView<'a> {
    pub instant: usize,
    pub masters: &'a [MeterId],
    /// Masked reading of every meter at this instant.
    pub masked: &'a [f64],
    /// `shares[i * m + k]` is meter `i`'s share for `masters[k]`.
    pub shares: &'a [f64],
    /// Report of each master, `None` when dropped.
    pub reports: &'a [Option<f64>],
    pub load: &'a LoadReport,
}

/// Hook called once per instant after the barrier.
pub trait InstantObserver {
    fn observe(&mut self, view: &InstantView<'_>);
}

impl InstantObserver for () {
    fn observe(&mut self, _: &InstantView<'_>) {}
}

impl<A: InstantObserver, B: InstantObserver> InstantObserver for (A, B) {
    fn observe(&mut self, view: &InstantView<'_>) {
        self.0.observe(view);
        self.1.observe(view);
    }
}

/// What a run keeps in its transcript beyond masked readings, loads and bills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Keep every noise share (`T × N × m` values).
    pub record_shares: bool,
    /// Keep the drawn and net noise of every meter and instant.
    pub record_noise: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { record_shares: true, record_noise: true }
    }
}

impl SimOptions {
    pub fn lean() -> Self {
        Self { record_shares: false, record_noise: false }
    }
}

/// The adversary-visible record of a run plus the meters' private noise logs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTranscript {
    pub config: SimConfig,
    pub params: PrivacyParams,
    n_meters: usize,
    n_instants: usize,
    m_masters: usize,
    masked: Vec<f64>,
    masters: Vec<MeterId>,
    shares: Option<Vec<f64>>,
    drawn_noise: Option<Vec<f64>>,
    net_noise: Option<Vec<f64>>,
    reports: Vec<Option<f64>>,
    pub loads: Vec<LoadReport>,
    pub bills: Vec<BillStatement>,
    pub error_reports: Vec<ErrorReport>,
}

impl SimTranscript {
    pub fn n_meters(&self) -> usize {
        self.n_meters
    }

    pub fn n_instants(&self) -> usize {
        self.n_instants
    }

    pub fn m_masters(&self) -> usize {
        self.m_masters
    }

    /// Masked trace, meter-major (`N × T`).
    pub fn masked(&self) -> &[f64] {
        &self.masked
    }

    pub fn masked_profile(&self, meter: MeterId) -> &[f64] {
        &self.masked[meter * self.n_instants..(meter + 1) * self.n_instants]
    }

    pub fn masked_at(&self, meter: MeterId, instant: usize) -> f64 {
        self.masked[meter * self.n_instants + instant]
    }

    pub fn masters_at(&self, instant: usize) -> &[MeterId] {
        &self.masters[instant * self.m_masters..(instant + 1) * self.m_masters]
    }

    /// All shares, instant-major: `[t][meter][k]`.
    pub fn shares(&self) -> Option<&[f64]> {
        self.shares.as_deref()
    }

    /// Drawn noise `n_t`, meter-major.
    pub fn drawn_noise(&self) -> Option<&[f64]> {
        self.drawn_noise.as_deref()
    }

    /// Net noise `n_t − nc_{t−1}`, meter-major.
    pub fn net_noise(&self) -> Option<&[f64]> {
        self.net_noise.as_deref()
    }

    pub fn reports_at(&self, instant: usize) -> &[Option<f64>] {
        &self.reports[instant * self.m_masters..(instant + 1) * self.m_masters]
    }

    /// Share messages that crossed the network at `instant`. A master's share
    /// to itself never leaves the meter and is not listed.
    pub fn messages_at(&self, instant: usize) -> Vec<NoiseShareMessage> {
        let Some(shares) = &self.shares else { return Vec::new() };
        let (n, m) = (self.n_meters, self.m_masters);
        let masters = self.masters_at(instant);
        let row = &shares[instant * n * m..(instant + 1) * n * m];
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            for (k, &to_master) in masters.iter().enumerate() {
                if to_master != i {
                    out.push(NoiseShareMessage { from_meter: i, to_master, instant, share: row[i * m + k] });
                }
            }
        }
        out
    }

    /// Share a master kept for itself at `instant`.
    pub fn own_share(&self, instant: usize, k: usize) -> Option<f64> {
        let shares = self.shares.as_ref()?;
        let (n, m) = (self.n_meters, self.m_masters);
        let master = self.masters_at(instant)[k];
        Some(shares[instant * n * m + master * m + k])
    }

    pub(crate) fn from_parts(parts: TranscriptParts) -> Self {
        let TranscriptParts { config, params, n_meters, n_instants, masked, masters, shares, reports, loads, bills } = parts;
        Self {
            m_masters: config.m_masters,
            config,
            params,
            n_meters,
            n_instants,
            masked,
            masters,
            shares,
            drawn_noise: None,
            net_noise: None,
            reports,
            loads,
            bills,
            error_reports: Vec::new(),
        }
    }
}

pub(crate) struct TranscriptParts {
    pub config: SimConfig,
    pub params: PrivacyParams,
    pub n_meters: usize,
    pub n_instants: usize,
    pub masked: Vec<f64>,
    pub masters: Vec<MeterId>,
    pub shares: Option<Vec<f64>>,
    pub reports: Vec<Option<f64>>,
    pub loads: Vec<LoadReport>,
    pub bills: Vec<BillStatement>,
}

/// Privacy parameters a config implies for a trace.
pub fn privacy_params(config: &SimConfig, trace: &EnergyTrace) -> Result<PrivacyParams> {
    if config.noiseless {
        return PrivacyParams::noiseless(config.n_meters);
    }
    let sensitivity = match config.sensitivity {
        Some(s) => s,
        None => compute_sensitivity(trace)?,
    };
    PrivacyParams::new(config.epsilon, sensitivity, config.n_meters)
}

pub fn run_simulation(config: &SimConfig, trace: &EnergyTrace) -> Result<SimTranscript> {
    run_simulation_with(config, trace, SimOptions::default(), &mut ())
}

/// Runs one simulation, feeding every instant to `observer`.
pub fn run_simulation_with<O: InstantObserver + ?Sized>(
    config: &SimConfig,
    trace: &EnergyTrace,
    options: SimOptions,
    observer: &mut O,
) -> Result<SimTranscript> {
    config.validate()?;
    let (n, m) = (config.n_meters, config.m_masters);
    let t_len = config.total_instants();
    if trace.n_meters() != n || trace.n_instants() != t_len {
        return Err(Error::DimensionMismatch(format!(
            "trace is {}x{}, config needs {n}x{t_len} ({} billing periods of {} instants)",
            trace.n_meters(),
            trace.n_instants(),
            config.n_periods,
            config.instants_per_billing_period
        )));
    }
    let params = privacy_params(config, trace)?;
    let sampler = params.sampler();
    let tree = SeedTree::new(config.seed);
    let mut meters: Vec<MeterState> = (0..n).map(|i| MeterState::new(i, config.period_model())).collect();
    let mut meter_rngs: Vec<_> = (0..n).map(|i| tree.stream(Purpose::MeterNoise, i as u64)).collect();
    let mut selection_rng = tree.stream(Purpose::MasterSelection, 0);
    let mut drop_rng = tree.stream(Purpose::MasterDrop, 0);

    let mut masked = vec![0.0; n * t_len];
    let mut drawn_log = options.record_noise.then(|| vec![0.0; n * t_len]);
    let mut net_log = options.record_noise.then(|| vec![0.0; n * t_len]);
    let mut share_log = options.record_shares.then(|| Vec::with_capacity(n * m * t_len));
    let mut master_log = Vec::with_capacity(m * t_len);
    let mut report_log = Vec::with_capacity(m * t_len);
    let mut loads = Vec::with_capacity(t_len);
    let mut bills = Vec::with_capacity(n * config.n_periods);
    let mut error_reports = Vec::with_capacity(n * config.n_periods);
    let mut settlement = ErrorSettlement::new();

    let mut column = vec![0.0; n];
    let mut instant_shares = vec![0.0; n * m];
    let mut buf = Vec::with_capacity(m);
    let mut reports = vec![None; m];

    for t in 0..t_len {
        let masters = select_masters(n, m, &mut selection_rng)?;
        for i in 0..n {
            let (reading, step) =
                meters[i].step_into(trace.at(i, t), &masters, sampler.as_ref(), params.scale(), &mut meter_rngs[i], &mut buf)?;
            column[i] = reading.value;
            masked[i * t_len + t] = reading.value;
            instant_shares[i * m..(i + 1) * m].copy_from_slice(&buf);
            if let (Some(d), Some(nl)) = (drawn_log.as_mut(), net_log.as_mut()) {
                d[i * t_len + t] = step.drawn;
                nl[i * t_len + t] = step.net;
            }
        }
        // Barrier: all shares of instant t exist; masters may now aggregate.
        for (k, report) in reports.iter_mut().enumerate() {
            let sum: f64 = (0..n).map(|i| instant_shares[i * m + k]).sum();
            let dropped = drop_rng.random::<f64>() < config.master_drop_probability;
            *report = (!dropped).then_some(sum);
        }
        let load = aggregate_load(t, &column, &reports)?;
        observer.observe(&InstantView {
            instant: t,
            masters: &masters,
            masked: &column,
            shares: &instant_shares,
            reports: &reports,
            load: &load,
        });
        loads.push(load);
        master_log.extend_from_slice(&masters);
        report_log.extend_from_slice(&reports);
        if let Some(log) = share_log.as_mut() {
            log.extend_from_slice(&instant_shares);
        }

        if (t + 1) % config.instants_per_billing_period == 0 {
            let period = t / config.instants_per_billing_period;
            let start = period * config.instants_per_billing_period;
            for (i, meter) in meters.iter_mut().enumerate() {
                let readings = &masked[i * t_len + start..i * t_len + t + 1];
                let bill = compute_bill(
                    i,
                    period,
                    readings,
                    config.instants_per_billing_period,
                    &config.tariff,
                    settlement.take(i),
                )?;
                meter.close_billing_period();
                let error_kwh = meter.report_billing_error(bill.surcharge_units);
                let report = ErrorReport { meter_id: i, period, error_kwh, surcharge_units: bill.surcharge_units };
                settlement.submit(report, &config.tariff)?;
                error_reports.push(report);
                bills.push(bill);
            }
        }
    }

    Ok(SimTranscript {
        config: config.clone(),
        params,
        n_meters: n,
        n_instants: t_len,
        m_masters: m,
        masked,
        masters: master_log,
        shares: share_log,
        drawn_noise: drawn_log,
        net_noise: net_log,
        reports: report_log,
        loads,
        bills,
        error_reports,
    })
}

/// Seed of run `r` of an experiment.
pub fn run_seed(base_seed: u64, run: usize) -> u64 {
    SeedTree::new(base_seed).child(Purpose::Run, run as u64).seed()
}

/// Utility and privacy metrics of one run against the ground truth.
pub fn run_metrics(transcript: &SimTranscript, trace: &EnergyTrace, leak_fraction: f64) -> Result<RunMetrics> {
    let n = transcript.n_meters();
    let cfg = &transcript.config;
    let bill_len = cfg.instants_per_billing_period;
    let mut energy = Vec::with_capacity(n);
    let mut bill = Vec::with_capacity(n);
    let mut corr = Vec::with_capacity(n);
    let day = if transcript.n_instants() >= 2 * SLOTS_PER_DAY { 1 } else { 0 };
    for i in 0..n {
        let truth = trace.meter(i);
        let masked = transcript.masked_profile(i);
        let true_total: f64 = truth.iter().sum();
        if true_total > 0.0 {
            energy.push(mae(true_total, masked.iter().sum())?);
        }
        let true_bill: f64 = truth.chunks(bill_len).map(|c| cfg.tariff.price(c.iter().sum())).sum();
        let billed: f64 = transcript.bills.iter().filter(|b| b.meter_id == i).map(|b| b.total_bill).sum();
        if true_bill > 0.0 {
            bill.push(mae(true_bill, billed)?);
        }
        let span = day * SLOTS_PER_DAY..((day + 1) * SLOTS_PER_DAY).min(truth.len());
        if let Ok(r) = pearson_corr(&masked[span.clone()], &truth[span]) {
            corr.push(r);
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(RunMetrics {
        mae_energy: mean(&energy),
        mae_bill: mean(&bill),
        corr_masked_vs_original: mean(&corr),
        leak_fraction,
    })
}

/// Result of a multi-run experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub bundle: MetricBundle,
    pub runs: Vec<RunMetrics>,
}

/// Runs `config.runs` independent simulations and averages their metrics.
///
/// Each run uses seed [`run_seed`]`(config.seed, r)`. Shares are not stored;
/// the collusion adversary (with `config.malicious_count` colluders drawn per
/// run) observes them online.
pub fn run_experiment(config: &SimConfig, trace: &EnergyTrace) -> Result<ExperimentResult> {
    config.validate()?;
    let mut runs = Vec::with_capacity(config.runs);
    for r in 0..config.runs {
        let cfg = SimConfig { seed: run_seed(config.seed, r), ..config.clone() };
        runs.push(single_run_metrics(&cfg, trace)?);
    }
    Ok(ExperimentResult { bundle: MetricBundle::average(config.seed, &runs), runs })
}

/// Metrics of one run with the config's own seed.
pub fn single_run_metrics(config: &SimConfig, trace: &EnergyTrace) -> Result<RunMetrics> {
    let malicious = MaliciousSet::random(config.n_meters, config.malicious_count, config.seed)?;
    let mut adversary = CollusionObserver::new(&malicious);
    let transcript = run_simulation_with(config, trace, SimOptions::lean(), &mut adversary)?;
    run_metrics(&transcript, trace, adversary.stats().leak_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::master_collect;
    use crate::rng::SimRng;

    fn small_trace(n: usize, t: usize) -> EnergyTrace {
        let values = (0..n * t).map(|k| ((k * 7919) % 97) as f64 / 50.0).collect();
        EnergyTrace::new(n, t, values).unwrap()
    }

    fn small_config(n: usize, m: usize, bill: usize, periods: usize) -> SimConfig {
        SimConfig {
            n_meters: n,
            m_masters: m,
            instants_per_period: 6,
            n_periods: periods,
            instants_per_billing_period: bill,
            seed: 99,
            ..SimConfig::default()
        }
    }

    fn rng() -> SimRng {
        SeedTree::new(3).stream(Purpose::Test, 0)
    }

    #[test]
    fn select_all_meters() {
        assert_eq!(select_masters(5, 5, &mut rng()).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn select_distinct() {
        let mut r = rng();
        for _ in 0..1000 {
            let s = select_masters(200, 4, &mut r).unwrap();
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn select_too_many() {
        assert!(matches!(select_masters(3, 4, &mut rng()), Err(Error::TooManyMasters { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = small_config(4, 1, 12, 1);
        assert!(matches!(run_simulation(&cfg, &small_trace(4, 13)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(run_simulation(&cfg, &small_trace(5, 12)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn noiseless_run_is_exact() {
        let cfg = SimConfig { noiseless: true, ..small_config(6, 2, 36, 2) };
        let trace = small_trace(6, 72);
        let tr = run_simulation(&cfg, &trace).unwrap();
        assert_eq!(tr.masked(), trace.values());
        for b in &tr.bills {
            let start = b.period * 36;
            let truth = cfg.tariff.price(trace.meter(b.meter_id)[start..start + 36].iter().sum());
            assert_eq!(b.total_bill, truth);
        }
    }

    #[test]
    fn reports_equal_master_collect_over_messages() {
        let cfg = small_config(8, 3, 24, 1);
        let tr = run_simulation(&cfg, &small_trace(8, 24)).unwrap();
        for t in 0..24 {
            let msgs = tr.messages_at(t);
            for (k, &master) in tr.masters_at(t).iter().enumerate() {
                let own = tr.own_share(t, k).unwrap();
                let r = master_collect(master, t, &msgs, own);
                let reported = tr.reports_at(t)[k].unwrap();
                assert!((r.noise_sum - reported).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn load_identity_small() {
        let cfg = small_config(10, 2, 60, 2);
        let trace = small_trace(10, 120);
        let tr = run_simulation(&cfg, &trace).unwrap();
        for l in &tr.loads {
            assert!((l.recovered_load - trace.instant_total(l.instant)).abs() < 1e-9);
            assert_eq!(l.masters_missing, 0);
        }
    }

    #[test]
    fn all_dropped_counts_missing() {
        let cfg = SimConfig { master_drop_probability: 1.0, ..small_config(10, 3, 12, 1) };
        let tr = run_simulation(&cfg, &small_trace(10, 12)).unwrap();
        assert!(tr.loads.iter().all(|l| l.masters_missing == 3 && l.reported_noise_sum == 0.0));
    }

    #[test]
    fn same_seed_same_transcript() {
        let cfg = small_config(7, 2, 30, 1);
        let trace = small_trace(7, 30);
        assert_eq!(run_simulation(&cfg, &trace).unwrap(), run_simulation(&cfg, &trace).unwrap());
        let other = SimConfig { seed: 100, ..cfg.clone() };
        assert_ne!(run_simulation(&cfg, &trace).unwrap().masked(), run_simulation(&other, &trace).unwrap().masked());
    }

    #[test]
    fn single_run_experiment_matches_run() {
        let cfg = SimConfig { malicious_count: 3, ..small_config(10, 1, 288, 1) };
        let trace = small_trace(10, 288);
        let exp = run_experiment(&cfg, &trace).unwrap();
        let direct = single_run_metrics(&SimConfig { seed: run_seed(cfg.seed, 0), ..cfg.clone() }, &trace).unwrap();
        assert_eq!(exp.runs, vec![direct]);
        assert_eq!(exp.bundle.mae_energy, direct.mae_energy);
        assert_eq!(exp.bundle.leak_fraction, direct.leak_fraction);
    }
}
