//! Smart-meter side of the protocol.
//!
//! A meter masks every reading with fresh noise and, one cancellation period
//! later, subtracts the same noise values again in FIFO order. The net noise
//! of each instant is split into one additive share per master meter.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::{self, MeterNoise, PrivacyParams};

pub type MeterId = usize;

/// Length of the noise-cancellation window at 10-minute granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodModel {
    Hourly,
    Daily,
    Weekly,
}

impl PeriodModel {
    pub const ALL: [PeriodModel; 3] = [PeriodModel::Hourly, PeriodModel::Daily, PeriodModel::Weekly];

    pub fn instants(self) -> usize {
        match self {
            PeriodModel::Hourly => 6,
            PeriodModel::Daily => 144,
            PeriodModel::Weekly => 1008,
        }
    }

    pub fn from_instants(n: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.instants() == n)
    }

    pub fn name(self) -> &'static str {
        match self {
            PeriodModel::Hourly => "hourly",
            PeriodModel::Daily => "daily",
            PeriodModel::Weekly => "weekly",
        }
    }
}

/// A perturbed reading as seen by the aggregator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedReading {
    pub meter_id: MeterId,
    pub instant: usize,
    pub value: f64,
}

/// One additive share of a meter's net noise, addressed to one master.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseShareMessage {
    pub from_meter: MeterId,
    pub to_master: MeterId,
    pub instant: usize,
    pub share: f64,
}

/// The noise sum a master reports to the aggregator for one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedNoiseReport {
    pub master_id: MeterId,
    pub instant: usize,
    pub noise_sum: f64,
}

/// Noise bookkeeping of a single masking step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepNoise {
    /// Fresh noise `n_t`.
    pub drawn: f64,
    /// Noise from the previous period cancelled at this instant.
    pub cancelled: f64,
    /// `drawn − cancelled`, the amount actually embedded in the masked reading.
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeterState {
    meter_id: MeterId,
    queue_current: VecDeque<f64>,
    queue_previous: VecDeque<f64>,
    period_model: PeriodModel,
    instant: usize,
    billing_residual: f64,
    residual_noise_last_period: f64,
    reported_error_prev_bill: f64,
}

impl MeterState {
    pub fn new(meter_id: MeterId, period_model: PeriodModel) -> Self {
        let cap = period_model.instants();
        Self {
            meter_id,
            queue_current: VecDeque::with_capacity(cap),
            queue_previous: VecDeque::with_capacity(cap),
            period_model,
            instant: 0,
            billing_residual: 0.0,
            residual_noise_last_period: 0.0,
            reported_error_prev_bill: 0.0,
        }
    }

    pub fn meter_id(&self) -> MeterId {
        self.meter_id
    }

    pub fn period_model(&self) -> PeriodModel {
        self.period_model
    }

    /// Number of instants this meter has processed.
    pub fn instant(&self) -> usize {
        self.instant
    }

    pub fn queue_current(&self) -> &VecDeque<f64> {
        &self.queue_current
    }

    pub fn queue_previous(&self) -> &VecDeque<f64> {
        &self.queue_previous
    }

    /// Net noise embedded in the readings of the billing period in progress.
    pub fn billing_residual(&self) -> f64 {
        self.billing_residual
    }

    /// Net noise of the last closed billing period.
    pub fn residual_noise_last_period(&self) -> f64 {
        self.residual_noise_last_period
    }

    pub fn reported_error_prev_bill(&self) -> f64 {
        self.reported_error_prev_bill
    }

    /// Masks `x_t` with an already drawn noise value and advances the queues.
    ///
    /// This is the deterministic core of [`MeterState::meter_step`].
    pub fn mask_with(&mut self, x_t: f64, drawn: f64) -> Result<(MaskedReading, StepNoise)> {
        if x_t.is_nan() || x_t < 0.0 {
            return Err(Error::NegativeConsumption { meter: self.meter_id, instant: self.instant, value: x_t });
        }
        self.queue_current.push_back(drawn);
        let cancelled = self.queue_previous.pop_front().unwrap_or(0.0);
        let net = drawn - cancelled;
        let reading = MaskedReading { meter_id: self.meter_id, instant: self.instant, value: x_t + net };
        self.billing_residual += net;
        self.instant += 1;
        if self.instant % self.period_model.instants() == 0 {
            debug_assert!(self.queue_previous.is_empty());
            std::mem::swap(&mut self.queue_previous, &mut self.queue_current);
            self.queue_current.clear();
        }
        Ok((reading, StepNoise { drawn, cancelled, net }))
    }

    /// One protocol step: draw noise, mask the reading, split the net noise
    /// into one share per master.
    pub fn meter_step<R: Rng + ?Sized>(
        &mut self,
        x_t: f64,
        masters: &[MeterId],
        params: &PrivacyParams,
        rng: &mut R,
    ) -> Result<(MaskedReading, Vec<NoiseShareMessage>)> {
        let mut shares = Vec::with_capacity(masters.len());
        let (reading, _) = self.step_into(x_t, masters, params.sampler().as_ref(), params.scale(), rng, &mut shares)?;
        let messages = masters
            .iter()
            .zip(shares)
            .map(|(&to_master, share)| NoiseShareMessage {
                from_meter: self.meter_id,
                to_master,
                instant: reading.instant,
                share,
            })
            .collect();
        Ok((reading, messages))
    }

    /// Allocation-free step used by the simulator. `shares[k]` is the share for `masters[k]`.
    pub fn step_into<R: Rng + ?Sized>(
        &mut self,
        x_t: f64,
        masters: &[MeterId],
        sampler: Option<&MeterNoise>,
        share_scale: f64,
        rng: &mut R,
        shares: &mut Vec<f64>,
    ) -> Result<(MaskedReading, StepNoise)> {
        if masters.is_empty() {
            return Err(Error::NoMasters);
        }
        debug_assert!(
            masters.iter().enumerate().all(|(k, a)| masters[k + 1..].iter().all(|b| a != b)),
            "masters must be distinct"
        );
        if x_t.is_nan() || x_t < 0.0 {
            return Err(Error::NegativeConsumption { meter: self.meter_id, instant: self.instant, value: x_t });
        }
        let drawn = sampler.map_or(0.0, |s| s.sample(rng));
        let (reading, step) = self.mask_with(x_t, drawn)?;
        noise::split_noise_into(step.net, masters.len(), share_scale, rng, shares)?;
        Ok((reading, step))
    }

    /// Moves the running billing residual into `residual_noise_last_period`.
    pub fn close_billing_period(&mut self) -> f64 {
        self.residual_noise_last_period = std::mem::take(&mut self.billing_residual);
        self.residual_noise_last_period
    }

    /// Error (kWh) the meter reports after receiving its bill.
    ///
    /// Without a surcharge nothing is reported. Otherwise the whole residual is
    /// reported when the surcharge covers it, else the surcharge units, carrying
    /// the residual's sign.
    pub fn report_billing_error(&mut self, surcharge_units: f64) -> f64 {
        let residual = self.residual_noise_last_period;
        let error = if surcharge_units <= 0.0 {
            0.0
        } else if surcharge_units >= residual.abs() {
            residual
        } else {
            surcharge_units.copysign(residual)
        };
        self.reported_error_prev_bill = error;
        error
    }
}

/// Sums the shares addressed to `master_id` at `instant`, plus the master's own share.
pub fn master_collect(
    master_id: MeterId,
    instant: usize,
    shares: &[NoiseShareMessage],
    own_share: f64,
) -> AggregatedNoiseReport {
    let received: f64 = shares
        .iter()
        .filter(|s| s.to_master == master_id && s.instant == instant)
        .map(|s| s.share)
        .sum();
    AggregatedNoiseReport { master_id, instant, noise_sum: received + own_share }
}
