//! Simulation configuration.
//!
//! Config files are TOML. A flat `key = value` file is valid TOML, so both
//! flat and structured documents parse through the same path; the tariff may
//! be given as a `[tariff]` table or as dotted `tariff.unit_price = ...` keys.

use std::path::Path;

use crate::aggregator::Tariff;
use crate::error::{Error, Result};
use crate::meter::PeriodModel;

/// Instants in a 30-day month at 10-minute granularity.
pub const MONTH_INSTANTS: usize = 4320;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_meters: usize,
    pub m_masters: usize,
    /// Noise-cancellation window: 6, 144 or 1008 instants.
    pub instants_per_period: usize,
    /// Number of billing periods simulated.
    pub n_periods: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub tariff: Tariff,
    pub seed: u64,
    #[serde(default)]
    pub master_drop_probability: f64,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default = "month")]
    pub instants_per_billing_period: usize,
    #[serde(default)]
    pub malicious_count: usize,
    /// Disables noise entirely (scale 0).
    #[serde(default)]
    pub noiseless: bool,
    /// Overrides the point-wise sensitivity computed from the trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
}

fn one() -> usize {
    1
}

fn month() -> usize {
    MONTH_INSTANTS
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_meters: 200,
            m_masters: 1,
            instants_per_period: PeriodModel::Hourly.instants(),
            n_periods: 1,
            epsilon: 1.0,
            tariff: Tariff::default(),
            seed: 0,
            master_drop_probability: 0.0,
            runs: 1,
            instants_per_billing_period: MONTH_INSTANTS,
            malicious_count: 0,
            noiseless: false,
            sensitivity: None,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".into());
            Error::InvalidConfig { key, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::InvalidConfig { key: key.into(), reason });
        if self.n_meters == 0 {
            return bad("n_meters", "must be at least 1".into());
        }
        if self.m_masters == 0 || self.m_masters > self.n_meters {
            return bad("m_masters", format!("must be in 1..={}, got {}", self.n_meters, self.m_masters));
        }
        if PeriodModel::from_instants(self.instants_per_period).is_none() {
            return bad(
                "instants_per_period",
                format!("must be 6, 144 or 1008, got {}", self.instants_per_period),
            );
        }
        if self.n_periods == 0 {
            return bad("n_periods", "must be at least 1".into());
        }
        if self.instants_per_billing_period == 0 {
            return bad("instants_per_billing_period", "must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.master_drop_probability) {
            return bad(
                "master_drop_probability",
                format!("must be in [0, 1], got {}", self.master_drop_probability),
            );
        }
        if self.runs == 0 {
            return bad("runs", "must be at least 1".into());
        }
        if self.malicious_count > self.n_meters {
            return bad("malicious_count", format!("exceeds n_meters ({})", self.n_meters));
        }
        if let Some(s) = self.sensitivity {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sensitivity", format!("must be non-negative, got {s}"));
            }
        }
        self.tariff.validate()
    }

    pub fn period_model(&self) -> PeriodModel {
        PeriodModel::from_instants(self.instants_per_period).expect("validated")
    }

    pub fn total_instants(&self) -> usize {
        self.n_periods * self.instants_per_billing_period
    }

    /// Sets a parameter by its config key (hyphens accepted for underscores).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let invalid = |reason: String| Error::InvalidConfig { key: key.clone(), reason };
        let int = |v: &str| v.parse::<usize>().map_err(|e| invalid(format!("`{v}`: {e}")));
        let float = |v: &str| v.parse::<f64>().map_err(|e| invalid(format!("`{v}`: {e}")));
        match key.as_str() {
            "n_meters" => self.n_meters = int(value)?,
            "m_masters" | "masters" => self.m_masters = int(value)?,
            "instants_per_period" => self.instants_per_period = int(value)?,
            "n_periods" => self.n_periods = int(value)?,
            "epsilon" => self.epsilon = float(value)?,
            "seed" => self.seed = value.parse().map_err(|e| invalid(format!("`{value}`: {e}")))?,
            "master_drop_probability" => self.master_drop_probability = float(value)?,
            "runs" => self.runs = int(value)?,
            "instants_per_billing_period" => self.instants_per_billing_period = int(value)?,
            "malicious_count" => self.malicious_count = int(value)?,
            "sensitivity" => self.sensitivity = Some(float(value)?),
            "tariff.unit_price" | "unit_price" => self.tariff.unit_price = float(value)?,
            "tariff.surcharge_price" | "surcharge_price" => self.tariff.surcharge_price = float(value)?,
            "tariff.max_allowed_units" | "max_allowed_units" => self.tariff.max_allowed_units = float(value)?,
            _ => return Err(invalid("unknown parameter".into())),
        }
        Ok(())
    }
}
