use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dpnct_core::attacks::{
    analytic_leak, best_fit_p, collusion_attack, remove_negative_noise, AttackRecord, CollusionObserver,
    CollusionScenario, MaliciousSet,
};
use dpnct_core::io::{
    load_trace, load_transcript, synth_trace, write_attacks, write_reports, write_trace, write_transcript,
    ReportSet, SynthDistribution, SLOTS_PER_DAY,
};
use dpnct_core::metrics::{pearson_corr, MetricBundle};
use dpnct_core::sim::{run_experiment, run_simulation, run_simulation_with, SimOptions};
use dpnct_core::{EnergyTrace, SimConfig};

use crate::ensure_exists;

pub fn gen_data(meters: usize, days: usize, seed: u64, out: &Path) -> Result<()> {
    if meters == 0 || days == 0 {
        bail!("--meters and --days must be at least 1");
    }
    let trace = synth_trace(meters, days, &SynthDistribution::default(), seed);
    write_trace(out, &trace, Some(seed))?;
    eprintln!("wrote {meters}x{} trace to {}", trace.n_instants(), out.display());
    Ok(())
}

fn load_config(path: &Path) -> Result<SimConfig> {
    ensure_exists(path, "--config")?;
    SimConfig::from_file(path).with_context(|| format!("loading {}", path.display()))
}

pub fn simulate(config: &Path, trace: &Path, out_dir: &Path, with_transcript: bool) -> Result<()> {
    let cfg = load_config(config)?;
    ensure_exists(trace, "--trace")?;
    let truth = load_trace(trace).with_context(|| format!("loading {}", trace.display()))?;
    let transcript = run_simulation(&cfg, &truth)?;

    let mut attacks = Vec::new();
    if cfg.malicious_count > 0 {
        let malicious = MaliciousSet::random(cfg.n_meters, cfg.malicious_count, cfg.seed)?;
        let outcome = collusion_attack(CollusionScenario { malicious: &malicious, transcript: &transcript })?;
        let c = cfg.malicious_count;
        attacks.push(AttackRecord::new("collusion", c, None, "leak_fraction", outcome.stats.leak_fraction));
        attacks.push(AttackRecord::new("collusion", c, None, "analytic_leak", analytic_leak(cfg.n_meters, c, cfg.m_masters)));
    }
    let metrics = run_experiment(&cfg, &truth)?.bundle;
    write_reports(
        &ReportSet { seed: cfg.seed, loads: &transcript.loads, bills: &transcript.bills, attacks: &attacks, metrics: &metrics },
        out_dir,
    )?;
    if with_transcript {
        write_transcript(out_dir.join("transcript"), &transcript, &truth)?;
    }
    eprintln!("wrote reports to {}", out_dir.display());
    Ok(())
}

fn open_transcript(path: &Path) -> Result<dpnct_core::io::StoredTranscript> {
    ensure_exists(path, "--transcript")?;
    load_transcript(path).with_context(|| format!("loading transcript {}", path.display()))
}

fn emit(out: Option<&Path>, rows: &[AttackRecord], seed: u64) -> Result<()> {
    match out {
        Some(path) => write_attacks(path, rows, Some(seed))?,
        None => {
            let mut s = format!("# seed={seed}\nattack,param,meter_id,metric,value\n");
            for r in rows {
                let meter = r.meter_id.map(|m| m.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{},{}", r.attack, r.param, meter, r.metric, r.value)?;
            }
            print!("{s}");
        }
    }
    Ok(())
}

pub fn attack_filtering(
    transcript: &Path,
    p_range: std::ops::RangeInclusive<usize>,
    meters: &[usize],
    clamp: bool,
    out: Option<&Path>,
) -> Result<()> {
    let stored = open_transcript(transcript)?;
    let tr = &stored.transcript;
    let ids: Vec<usize> = if meters.is_empty() { (0..tr.n_meters()).collect() } else { meters.to_vec() };
    let attack = if clamp { "clamp+filtering" } else { "filtering" };
    let mut rows = Vec::new();
    for &i in &ids {
        if i >= tr.n_meters() {
            bail!("--meters: meter {i} outside 0..{}", tr.n_meters());
        }
        let original = stored.truth.meter(i);
        let masked = if clamp { remove_negative_noise(tr.masked_profile(i)) } else { tr.masked_profile(i).to_vec() };
        let unfiltered = pearson_corr(&masked, original)?;
        let best = best_fit_p(&masked, original, p_range.clone())?;
        rows.push(AttackRecord::new(attack, "-", Some(i), "masked_correlation", unfiltered));
        rows.push(AttackRecord::new(attack, best.p, Some(i), "best_fit_correlation", best.correlation));
        rows.push(AttackRecord::new(attack, best.p, Some(i), "best_fit_p", best.p as f64));
    }
    emit(out, &rows, tr.config.seed)
}

pub fn attack_collusion(
    transcript: &Path,
    malicious_count: usize,
    sweep_masters: Option<Vec<usize>>,
    out: Option<&Path>,
) -> Result<()> {
    let stored = open_transcript(transcript)?;
    let tr = &stored.transcript;
    let n = tr.n_meters();
    if malicious_count > n {
        bail!("--malicious-count {malicious_count} exceeds the {n} meters in the transcript");
    }
    let malicious = MaliciousSet::random(n, malicious_count, tr.config.seed)?;
    let mut rows = Vec::new();
    match sweep_masters {
        None => {
            let outcome = collusion_attack(CollusionScenario { malicious: &malicious, transcript: tr })
                .context("the transcript has no shares.csv")?;
            let max_err = outcome
                .reconstructed
                .iter()
                .map(|&(i, t, x)| (x - stored.truth.at(i, t)).abs())
                .fold(0.0_f64, f64::max);
            let m = tr.m_masters();
            rows.push(AttackRecord::new("collusion", m, None, "leak_fraction", outcome.stats.leak_fraction));
            rows.push(AttackRecord::new("collusion", m, None, "analytic_leak", analytic_leak(n, malicious_count, m)));
            rows.push(AttackRecord::new("collusion", m, None, "reconstructed_points", outcome.stats.reconstructed_points as f64));
            rows.push(AttackRecord::new("collusion", m, None, "max_reconstruction_error", max_err));
        }
        Some(ms) => {
            for m in ms {
                if m > n {
                    bail!("--sweep-masters: {m} masters exceed {n} meters");
                }
                let cfg = SimConfig { m_masters: m, ..tr.config.clone() };
                let mut adversary = CollusionObserver::new(&malicious);
                run_simulation_with(&cfg, &stored.truth, SimOptions::lean(), &mut adversary)?;
                rows.push(AttackRecord::new("collusion", m, None, "leak_fraction", adversary.stats().leak_fraction));
                rows.push(AttackRecord::new("collusion", m, None, "analytic_leak", analytic_leak(n, malicious_count, m)));
            }
        }
    }
    emit(out, &rows, tr.config.seed)
}

fn trace_for(cfg: &SimConfig, trace: Option<&EnergyTrace>) -> EnergyTrace {
    match trace {
        Some(t) => t.clone(),
        None => {
            let days = cfg.total_instants().div_ceil(SLOTS_PER_DAY);
            synth_trace(cfg.n_meters, days, &SynthDistribution::default(), cfg.seed).truncated(cfg.total_instants())
        }
    }
}

pub fn sweep(config: &Path, vary: &str, values: &[String], trace: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let base = load_config(config)?;
    let trace = match trace {
        Some(p) => {
            ensure_exists(p, "--trace")?;
            Some(load_trace(p).with_context(|| format!("loading {}", p.display()))?)
        }
        None => None,
    };
    let mut csv = format!(
        "# seed={}\nparam,value,leak_fraction,analytic_leak,mae_energy,mae_bill,corr_masked_vs_original\n",
        base.seed
    );
    for value in values {
        let mut cfg = base.clone();
        cfg.set(vary, value)?;
        cfg.validate()?;
        let t = trace_for(&cfg, trace.as_ref());
        let b = run_experiment(&cfg, &t)?.bundle;
        let analytic = analytic_leak(cfg.n_meters, cfg.malicious_count, cfg.m_masters);
        writeln!(
            csv,
            "{vary},{value},{},{analytic},{},{},{}",
            b.leak_fraction, b.mae_energy, b.mae_bill, b.corr_masked_vs_original
        )?;
    }
    match out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn report(in_dir: &Path) -> Result<()> {
    let path = in_dir.join("metrics.json");
    ensure_exists(&path, "--in-dir")?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let b: MetricBundle = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    println!("seed {}  runs {}", b.seed, b.runs);
    let line = |name: &str, mean: f64, per_run: &[f64]| {
        println!("{name:<26} {mean:>12.6}  ± {:.6}", MetricBundle::std_dev(per_run));
    };
    line("relative MAE (energy)", b.mae_energy, &b.per_run.mae_energy);
    line("relative MAE (bill)", b.mae_bill, &b.per_run.mae_bill);
    line("corr(masked, original)", b.corr_masked_vs_original, &b.per_run.corr_masked_vs_original);
    line("leak fraction", b.leak_fraction, &b.per_run.leak_fraction);
    Ok(())
}
