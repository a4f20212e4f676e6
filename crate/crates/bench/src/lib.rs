//! Fixtures shared by the criterion benches.

use dpnct_core::io::{synth_trace, SynthDistribution};
use dpnct_core::{EnergyTrace, SimConfig};

/// `n_meters` synthetic households over `days` days.
pub fn trace(n_meters: usize, days: usize) -> EnergyTrace {
    synth_trace(n_meters, days, &SynthDistribution::default(), 17)
}

/// A one-billing-period config matching `trace(n_meters, days)`.
pub fn config(n_meters: usize, days: usize, m_masters: usize) -> SimConfig {
    SimConfig {
        n_meters,
        m_masters,
        instants_per_billing_period: days * 144,
        seed: 17,
        ..SimConfig::default()
    }
}
