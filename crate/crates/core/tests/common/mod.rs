#![allow(dead_code)]

use dpnct_core::io::{synth_trace, SynthDistribution, SLOTS_PER_DAY};
use dpnct_core::{EnergyTrace, SimConfig};

pub fn trace(n_meters: usize, n_instants: usize, seed: u64) -> EnergyTrace {
    synth_trace(n_meters, n_instants.div_ceil(SLOTS_PER_DAY), &SynthDistribution::default(), seed).truncated(n_instants)
}

/// One billing period of `period_len * n_periods` instants.
pub fn config(n_meters: usize, m_masters: usize, period_len: usize, n_instants: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_meters,
        m_masters,
        instants_per_period: period_len,
        instants_per_billing_period: n_instants,
        n_periods: 1,
        seed,
        ..SimConfig::default()
    }
}
