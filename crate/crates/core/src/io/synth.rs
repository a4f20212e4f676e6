//! Synthetic household load traces.
//!
//! Each household gets its own [`SynthProfileSpec`] drawn from a
//! [`SynthDistribution`]: a standby base load, a morning and an evening
//! bump, a weekend multiplier, multiplicative jitter and short appliance
//! bursts. Households differ in size by a log-normal factor, so the
//! dataset-wide maximum reading sits well above a typical household's
//! daily variation, as in metered data.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Uniform};

use super::EnergyTrace;
use crate::rng::{Purpose, SeedTree};

pub const SLOTS_PER_DAY: usize = 144;

/// A Gaussian bump on the daily curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Peak {
    /// Extra kWh per slot at the centre of the bump.
    pub amplitude: f64,
    pub hour: f64,
    pub width_hours: f64,
}

/// Shape parameters of one synthetic household.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthProfileSpec {
    pub base_load: f64,
    pub morning_peak: Peak,
    pub evening_peak: Peak,
    /// Multiplier applied on Saturdays and Sundays (days 5 and 6 of each week).
    pub weekend_factor: f64,
    /// Relative half-width of the uniform multiplicative jitter, in `[0, 1)`.
    pub jitter: f64,
    /// Expected appliance bursts per day.
    pub burst_rate: f64,
    /// kWh per slot drawn by a burst.
    pub burst_energy: f64,
    pub seed: u64,
}

impl SynthProfileSpec {
    /// Deterministic part of the reading for slot `slot` (0..144) of day `day`.
    pub fn shape(&self, day: usize, slot: usize) -> f64 {
        let hour = (slot as f64 + 0.5) / 6.0;
        let bump = |p: &Peak| {
            let mut d = (hour - p.hour).abs();
            d = d.min(24.0 - d);
            p.amplitude * (-0.5 * (d / p.width_hours).powi(2)).exp()
        };
        let level = self.base_load + bump(&self.morning_peak) + bump(&self.evening_peak);
        if day % 7 >= 5 {
            level * self.weekend_factor
        } else {
            level
        }
    }

    /// Emits `n_days * 144` readings.
    pub fn generate(&self, n_days: usize) -> Vec<f64> {
        let mut rng = SeedTree::new(self.seed).stream(Purpose::Synthetic, 0);
        let n = n_days * SLOTS_PER_DAY;
        let mut out = Vec::with_capacity(n);
        for day in 0..n_days {
            for slot in 0..SLOTS_PER_DAY {
                let mut v = self.shape(day, slot);
                if self.jitter > 0.0 {
                    v *= 1.0 + self.jitter * rng.random_range(-1.0..1.0);
                }
                out.push(v.max(0.0));
            }
        }
        if self.burst_rate > 0.0 && self.burst_energy > 0.0 {
            let p_start = self.burst_rate / SLOTS_PER_DAY as f64;
            for t in 0..n {
                if rng.random::<f64>() < p_start {
                    let len = rng.random_range(1..=3);
                    for v in out.iter_mut().skip(t).take(len) {
                        *v += self.burst_energy;
                    }
                }
            }
        }
        out
    }
}

/// Population from which household specs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthDistribution {
    /// σ of the log-normal household size factor.
    pub size_sigma: f64,
    pub base_load: f64,
    pub morning_amplitude: f64,
    pub evening_amplitude: f64,
    pub jitter_max: f64,
    pub burst_rate_max: f64,
    pub burst_energy: f64,
}

impl Default for SynthDistribution {
    fn default() -> Self {
        Self {
            size_sigma: 0.5,
            base_load: 0.04,
            morning_amplitude: 0.08,
            evening_amplitude: 0.18,
            jitter_max: 0.4,
            burst_rate_max: 4.0,
            burst_energy: 0.3,
        }
    }
}

impl SynthDistribution {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SynthProfileSpec {
        let size = LogNormal::new(0.0, self.size_sigma).expect("valid sigma").sample(rng);
        let spread = Uniform::new(0.5, 1.5).expect("valid range");
        SynthProfileSpec {
            base_load: self.base_load * size,
            morning_peak: Peak {
                amplitude: self.morning_amplitude * size * spread.sample(rng),
                hour: rng.random_range(6.5..8.5),
                width_hours: 1.0,
            },
            evening_peak: Peak {
                amplitude: self.evening_amplitude * size * spread.sample(rng),
                hour: rng.random_range(17.5..20.5),
                width_hours: 1.5,
            },
            weekend_factor: rng.random_range(1.0..1.3),
            jitter: rng.random_range(0.1..self.jitter_max.max(0.1 + f64::EPSILON)),
            burst_rate: rng.random_range(0.0..=self.burst_rate_max),
            burst_energy: self.burst_energy * size * rng.random_range(0.5..=2.0),
            seed: rng.random(),
        }
    }
}

/// Generates `n_meters` households over `n_days` days (144 slots per day).
pub fn synth_trace(n_meters: usize, n_days: usize, dist: &SynthDistribution, seed: u64) -> EnergyTrace {
    let tree = SeedTree::new(seed);
    let mut values = Vec::with_capacity(n_meters * n_days * SLOTS_PER_DAY);
    for i in 0..n_meters {
        let spec = dist.draw(&mut tree.stream(Purpose::Synthetic, i as u64));
        values.extend(spec.generate(n_days));
    }
    EnergyTrace::new(n_meters, n_days * SLOTS_PER_DAY, values).expect("generator emits non-negative readings")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_of_data_has_4320_slots() {
        let t = synth_trace(200, 30, &SynthDistribution::default(), 1);
        assert_eq!(t.n_meters(), 200);
        assert_eq!(t.n_instants(), 4320);
    }

    #[test]
    fn deterministic_in_seed() {
        let d = SynthDistribution::default();
        assert_eq!(synth_trace(3, 2, &d, 5), synth_trace(3, 2, &d, 5));
        assert_ne!(synth_trace(3, 2, &d, 5), synth_trace(3, 2, &d, 6));
    }

    #[test]
    fn no_jitter_repeats_same_weekday() {
        let mut spec = SynthDistribution::default().draw(&mut SeedTree::new(3).stream(Purpose::Test, 0));
        spec.jitter = 0.0;
        spec.burst_rate = 0.0;
        let v = spec.generate(21);
        for day in [0usize, 3, 5, 6] {
            let a = &v[day * SLOTS_PER_DAY..(day + 1) * SLOTS_PER_DAY];
            let b = &v[(day + 7) * SLOTS_PER_DAY..(day + 8) * SLOTS_PER_DAY];
            let c = &v[(day + 14) * SLOTS_PER_DAY..(day + 15) * SLOTS_PER_DAY];
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn mean_daily_curve_has_two_peaks() {
        let t = synth_trace(200, 7, &SynthDistribution::default(), 8);
        let mut curve = vec![0.0; SLOTS_PER_DAY];
        for row in t.rows() {
            for (k, v) in row.iter().enumerate() {
                curve[k % SLOTS_PER_DAY] += v;
            }
        }
        // Hour-level smoothing removes slot-scale jitter before peak detection.
        let hourly: Vec<f64> = curve.chunks(6).map(|c| c.iter().sum()).collect();
        let maxima = (0..24)
            .filter(|&h| {
                let prev = hourly[(h + 23) % 24];
                let next = hourly[(h + 1) % 24];
                hourly[h] > prev && hourly[h] > next
            })
            .count();
        assert_eq!(maxima, 2, "hourly curve {hourly:?}");
    }
}
