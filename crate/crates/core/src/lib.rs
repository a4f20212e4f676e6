//! Differentially private smart-meter aggregation with self-cancelling,
//! master-split noise, and the attacks used to evaluate it.
//!
//! Meters add divisible Laplace noise to every reading and cancel it one
//! period later; the net noise of each instant is split into additive shares
//! sent to `m` randomly chosen master meters, whose reports let the
//! aggregator recover the exact area load. Bills stay accurate up to the
//! noise still in flight at the end of a billing period.
//!
//! The crate is organised by role:
//!
//! * [`noise`]: gamma-difference noise, sensitivity, additive splitting.
//! * [`meter`]: per-meter masking, cancellation queues and billing-error reports.
//! * [`aggregator`]: load recovery, billing and error settlement.
//! * [`sim`]: master selection, barrier rounds, multi-run experiments.
//! * [`attacks`]: negative-noise removal, filtering, collusion.
//! * [`metrics`]: relative MAE and Pearson correlation.
//! * [`io`]: trace CSVs, synthetic traces, report files, transcripts.

pub mod aggregator;
pub mod attacks;
pub mod config;
pub mod error;
pub mod io;
pub mod meter;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod sim;
pub mod stats;

pub use aggregator::{BillStatement, LoadReport, Tariff};
pub use attacks::{analytic_leak, AttackRecord, LeakStats, MaliciousSet};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use io::EnergyTrace;
pub use meter::{MeterId, MeterState, PeriodModel};
pub use metrics::{MetricBundle, RunMetrics};
pub use noise::{NoiseSample, PrivacyParams};
pub use rng::{Purpose, SeedTree, SimRng};
pub use sim::{run_experiment, run_simulation, SimOptions, SimTranscript};
