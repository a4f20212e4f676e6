//! Privacy and utility metrics.

use crate::error::{Error, Result};

/// Relative error of a period total: `|original − masked| / original`.
///
/// Reported as relative-MAE; it is a relative error on totals, not a mean over points.
pub fn mae(original_total: f64, masked_total: f64) -> Result<f64> {
    if original_total == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    Ok((original_total - masked_total).abs() / original_total)
}

/// Pearson product-moment correlation of two equal-length series.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("series lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::DegenerateSeries("fewer than two points"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Metrics of a single simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct RunMetrics {
    /// Mean over meters of the relative error of total energy.
    pub mae_energy: f64,
    /// Mean over meters of the relative error of the cumulative bill.
    pub mae_bill: f64,
    /// Mean over meters of the masked-vs-original correlation of one daily profile.
    pub corr_masked_vs_original: f64,
    pub leak_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct PerRunValues {
    pub mae_energy: Vec<f64>,
    pub mae_bill: Vec<f64>,
    pub corr_masked_vs_original: Vec<f64>,
    pub leak_fraction: Vec<f64>,
}

/// Run-averaged metrics with the per-run values kept for dispersion reporting.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct MetricBundle {
    pub seed: u64,
    pub runs: usize,
    pub mae_energy: f64,
    pub mae_bill: f64,
    pub corr_masked_vs_original: f64,
    pub leak_fraction: f64,
    pub per_run: PerRunValues,
}

impl MetricBundle {
    /// Arithmetic mean of every metric over `runs`.
    pub fn average(seed: u64, runs: &[RunMetrics]) -> Self {
        let mean = |f: fn(&RunMetrics) -> f64| {
            if runs.is_empty() {
                0.0
            } else {
                runs.iter().map(f).sum::<f64>() / runs.len() as f64
            }
        };
        MetricBundle {
            seed,
            runs: runs.len(),
            mae_energy: mean(|r| r.mae_energy),
            mae_bill: mean(|r| r.mae_bill),
            corr_masked_vs_original: mean(|r| r.corr_masked_vs_original),
            leak_fraction: mean(|r| r.leak_fraction),
            per_run: PerRunValues {
                mae_energy: runs.iter().map(|r| r.mae_energy).collect(),
                mae_bill: runs.iter().map(|r| r.mae_bill).collect(),
                corr_masked_vs_original: runs.iter().map(|r| r.corr_masked_vs_original).collect(),
                leak_fraction: runs.iter().map(|r| r.leak_fraction).collect(),
            },
        }
    }

    /// Sample standard deviation of a per-run series.
    pub fn std_dev(values: &[f64]) -> f64 {
        if values.len() < 2 {
            return 0.0;
        }
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_laplace;
    use crate::rng::{Purpose, SeedTree};
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(100.0, 100.0).unwrap(), 0.0);
        assert!((mae(100.0, 95.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(matches!(mae(0.0, 1.0), Err(Error::UndefinedRelativeError)));
    }

    #[test]
    fn pearson_identity_and_negation() {
        let a = [1.0, 3.0, 2.0, 5.0, 4.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson_corr(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_corr(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate() {
        let err = pearson_corr(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("degenerate series"));
        assert!(pearson_corr(&[1.0], &[1.0]).is_err());
        assert!(pearson_corr(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn independent_streams_are_uncorrelated() {
        let tree = SeedTree::new(77);
        let mut ra = tree.stream(Purpose::Test, 1);
        let mut rb = tree.stream(Purpose::Test, 2);
        let a: Vec<f64> = (0..4320).map(|_| sample_laplace(1.0, &mut ra)).collect();
        let b: Vec<f64> = (0..4320).map(|_| sample_laplace(1.0, &mut rb)).collect();
        // 3σ bound for r under independence is 3/sqrt(4320) ≈ 0.046.
        assert!(pearson_corr(&a, &b).unwrap().abs() < 0.05);
    }

    #[test]
    fn average_of_single_run_is_that_run() {
        let r = RunMetrics { mae_energy: 0.1, mae_bill: 0.2, corr_masked_vs_original: 0.3, leak_fraction: 0.4 };
        let b = MetricBundle::average(1, &[r]);
        assert_eq!(b.mae_energy, 0.1);
        assert_eq!(b.leak_fraction, 0.4);
        assert_eq!(b.per_run.mae_bill, vec![0.2]);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant(
            a in proptest::collection::vec(-100.0f64..100.0, 3..50),
            alpha in 0.01f64..100.0,
            beta in -100.0f64..100.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + (i as f64).sin()).collect();
            let scaled: Vec<f64> = a.iter().map(|v| alpha * v + beta).collect();
            if let (Ok(r1), Ok(r2)) = (pearson_corr(&a, &b), pearson_corr(&scaled, &b)) {
                prop_assert!((r1 - r2).abs() < 1e-12, "{} vs {}", r1, r2);
            }
        }

        #[test]
        fn mae_homogeneous(x in 0.1f64..1e4, xm in -1e4f64..1e4, k in 0.01f64..100.0) {
            let a = mae(x, xm).unwrap();
            let b = mae(k * x, k * xm).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
