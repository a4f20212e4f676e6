//! Per-meter divisible Laplace noise.
//!
//! Each of `N` meters draws the difference of two independent
//! `Gamma(1/N, λ)` variables. A single draw is far narrower than the
//! `Laplace(0, λ)` the aggregate needs, but the sum over all `N` meters is
//! `Gamma(1, λ) − Gamma(1, λ)`, which is exactly `Laplace(0, λ)`.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Gamma;

use crate::error::{Error, Result};
use crate::io::EnergyTrace;

/// Privacy budget, sensitivity and the resulting Laplace scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    sensitivity: f64,
    scale: f64,
    n_meters: usize,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, sensitivity: f64, n_meters: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sensitivity must be non-negative, got {sensitivity}"
            )));
        }
        if n_meters == 0 {
            return Err(Error::InvalidParams("at least one meter required".into()));
        }
        Ok(Self { epsilon, sensitivity, scale: sensitivity / epsilon, n_meters })
    }

    /// Parameters of the degenerate noiseless mode (scale 0).
    pub fn noiseless(n_meters: usize) -> Result<Self> {
        Self::new(1.0, 0.0, n_meters)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// Laplace scale `λ = sensitivity / ε` of the aggregate noise.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_meters(&self) -> usize {
        self.n_meters
    }

    /// Builds the gamma half of the per-meter sampler, or `None` in noiseless mode.
    pub fn sampler(&self) -> Option<MeterNoise> {
        MeterNoise::new(self)
    }
}

/// A signed noise value in kWh.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct NoiseSample(f64);

impl NoiseSample {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParams(format!("noise must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<NoiseSample> for f64 {
    fn from(n: NoiseSample) -> f64 {
        n.0
    }
}

/// Point-wise sensitivity: the largest absolute reading of any meter at any instant.
pub fn compute_sensitivity(trace: &EnergyTrace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(trace.values().iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Pre-built per-meter sampler; avoids re-validating the gamma parameters on every draw.
#[derive(Debug, Clone, Copy)]
pub struct MeterNoise {
    gamma: Gamma<f64>,
}

impl MeterNoise {
    fn new(params: &PrivacyParams) -> Option<Self> {
        if params.scale == 0.0 {
            return None;
        }
        let gamma = Gamma::new(1.0 / params.n_meters as f64, params.scale)
            .expect("shape and scale validated by PrivacyParams");
        Some(Self { gamma })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng) - self.gamma.sample(rng)
    }
}

/// Draws one meter's noise for one instant: `G(1/N, λ) − G'(1/N, λ)`.
pub fn sample_meter_noise<R: Rng + ?Sized>(params: &PrivacyParams, rng: &mut R) -> NoiseSample {
    match params.sampler() {
        Some(s) => NoiseSample(s.sample(rng)),
        None => NoiseSample(0.0),
    }
}

/// Inverse-CDF draw from `Laplace(0, scale)`.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = Open01.sample(rng);
    let u = u - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Splits `noise` into `m` additive shares.
///
/// The first `m − 1` shares are independent `Laplace(0, share_scale)` blinds;
/// the last one closes the sum, so any `m − 1` shares are independent of `noise`.
pub fn split_noise<R: Rng + ?Sized>(
    noise: NoiseSample,
    m: usize,
    share_scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut shares = Vec::with_capacity(m);
    split_noise_into(noise.value(), m, share_scale, rng, &mut shares)?;
    Ok(shares)
}

/// Allocation-free form of [`split_noise`]; overwrites `out`.
pub fn split_noise_into<R: Rng + ?Sized>(
    noise: f64,
    m: usize,
    share_scale: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    if m == 0 {
        return Err(Error::NoMasters);
    }
    out.clear();
    let mut blinded = 0.0;
    for _ in 1..m {
        let s = sample_laplace(share_scale, rng);
        blinded += s;
        out.push(s);
    }
    out.push(noise - blinded);
    Ok(())
}
