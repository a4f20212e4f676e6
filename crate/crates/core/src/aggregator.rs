//! The untrusted aggregator: area load recovery and surcharge-aware billing.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::meter::MeterId;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tariff {
    pub unit_price: f64,
    pub surcharge_price: f64,
    /// kWh per billing period billed at `unit_price`; the excess is billed at `surcharge_price`.
    pub max_allowed_units: f64,
}

impl Default for Tariff {
    fn default() -> Self {
        Self { unit_price: 10.0, surcharge_price: 20.0, max_allowed_units: 5500.0 }
    }
}

impl Tariff {
    pub fn new(unit_price: f64, surcharge_price: f64, max_allowed_units: f64) -> Result<Self> {
        let t = Self { unit_price, surcharge_price, max_allowed_units };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::InvalidConfig { key: key.into(), reason: reason.into() });
        if !(self.unit_price > 0.0 && self.unit_price.is_finite()) {
            return bad("tariff.unit_price", "must be positive");
        }
        if !(self.surcharge_price > 0.0 && self.surcharge_price.is_finite()) {
            return bad("tariff.surcharge_price", "must be positive");
        }
        if !(self.max_allowed_units > 0.0 && self.max_allowed_units.is_finite()) {
            return bad("tariff.max_allowed_units", "must be positive");
        }
        if self.surcharge_price < self.unit_price {
            return bad("tariff.surcharge_price", "must not be below unit_price");
        }
        Ok(())
    }

    /// Bill for `kwh` before any error correction. Negative totals bill as zero.
    pub fn price(&self, kwh: f64) -> f64 {
        if kwh >= self.max_allowed_units {
            self.max_allowed_units * self.unit_price + (kwh - self.max_allowed_units) * self.surcharge_price
        } else {
            kwh.max(0.0) * self.unit_price
        }
    }

    /// Currency value of an error of `error_kwh` on a bill with `surcharge_units`
    /// of surcharge: the part inside the surcharge band at the surcharge price,
    /// the rest at the unit price. Keeps the sign of the error.
    pub fn price_error(&self, error_kwh: f64, surcharge_units: f64) -> f64 {
        let magnitude = error_kwh.abs();
        let in_band = magnitude.min(surcharge_units.max(0.0));
        let value = in_band * self.surcharge_price + (magnitude - in_band) * self.unit_price;
        value.copysign(error_kwh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BillStatement {
    pub meter_id: MeterId,
    pub period: usize,
    /// Sum of the masked readings over the billing period.
    pub masked_total: f64,
    pub base_bill: f64,
    pub surcharge_bill: f64,
    pub error_correction_applied: f64,
    pub total_bill: f64,
    pub surcharge_units: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LoadReport {
    pub instant: usize,
    pub masked_sum: f64,
    pub reported_noise_sum: f64,
    pub recovered_load: f64,
    pub masters_missing: usize,
}

/// Recovers the area load at one instant: `Σ X − Σ reported noise`.
///
/// `reports[k]` is `None` when master `k` did not deliver its report.
pub fn aggregate_load(instant: usize, masked: &[f64], reports: &[Option<f64>]) -> Result<LoadReport> {
    if masked.is_empty() {
        return Err(Error::DimensionMismatch(format!("no masked readings at instant {instant}")));
    }
    let masked_sum: f64 = masked.iter().sum();
    let reported_noise_sum: f64 = reports.iter().flatten().sum();
    let masters_missing = reports.iter().filter(|r| r.is_none()).count();
    Ok(LoadReport {
        instant,
        masked_sum,
        reported_noise_sum,
        recovered_load: masked_sum - reported_noise_sum,
        masters_missing,
    })
}

/// Bills one meter for one complete billing period of `period_len` masked readings.
///
/// `prev_error` is the currency correction settled for this meter after the
/// previous period; it is subtracted whether or not a surcharge applies.
pub fn compute_bill(
    meter_id: MeterId,
    period: usize,
    readings: &[f64],
    period_len: usize,
    tariff: &Tariff,
    prev_error: f64,
) -> Result<BillStatement> {
    if readings.len() != period_len || period_len == 0 {
        return Err(Error::PartialBillingPeriod { expected: period_len, got: readings.len() });
    }
    let masked_total: f64 = readings.iter().sum();
    let (base_bill, surcharge_bill, surcharge_units) = if masked_total >= tariff.max_allowed_units {
        let units = masked_total - tariff.max_allowed_units;
        (tariff.max_allowed_units * tariff.unit_price, units * tariff.surcharge_price, units)
    } else {
        (masked_total.max(0.0) * tariff.unit_price, 0.0, 0.0)
    };
    Ok(BillStatement {
        meter_id,
        period,
        masked_total,
        base_bill,
        surcharge_bill,
        error_correction_applied: prev_error,
        total_bill: base_bill + surcharge_bill - prev_error,
        surcharge_units,
    })
}

/// A meter's billing-error notification for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub meter_id: MeterId,
    pub period: usize,
    pub error_kwh: f64,
    /// Surcharge units of the bill the error refers to.
    pub surcharge_units: f64,
}

/// Collects error reports and turns them into currency corrections for the next bill.
#[derive(Debug, Clone, Default)]
pub struct ErrorSettlement {
    seen: HashSet<(MeterId, usize)>,
    pending: BTreeMap<MeterId, f64>,
}

impl ErrorSettlement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn submit(&mut self, report: ErrorReport, tariff: &Tariff) -> Result<()> {
        if !self.seen.insert((report.meter_id, report.period)) {
            return Err(Error::DuplicateErrorReport { meter: report.meter_id, period: report.period });
        }
        let correction = tariff.price_error(report.error_kwh, report.surcharge_units);
        *self.pending.entry(report.meter_id).or_insert(0.0) += correction;
        Ok(())
    }

    /// Correction owed to `meter_id` on its next bill; clears it.
    pub fn take(&mut self, meter_id: MeterId) -> f64 {
        self.pending.remove(&meter_id).unwrap_or(0.0)
    }

    pub fn pending(&self) -> &BTreeMap<MeterId, f64> {
        &self.pending
    }
}

/// Settles one batch of reports into per-meter corrections.
pub fn settle_error(reports: &[ErrorReport], tariff: &Tariff) -> Result<BTreeMap<MeterId, f64>> {
    let mut s = ErrorSettlement::new();
    for r in reports {
        s.submit(*r, tariff)?;
    }
    Ok(s.pending)
}
