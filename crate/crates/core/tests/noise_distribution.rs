use dpnct_core::noise::{sample_laplace, sample_meter_noise, split_noise, NoiseSample, PrivacyParams};
use dpnct_core::stats::{ks_test, laplace_cdf};
use dpnct_core::{Purpose, SeedTree};
use proptest::prelude::*;

#[test]
fn single_meter_noise_is_laplace() {
    let params = PrivacyParams::new(1.0, 1.0, 1).unwrap();
    let mut rng = SeedTree::new(1).stream(Purpose::Test, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_meter_noise(&params, &mut rng).value()).collect();
    let (d, p) = ks_test(&draws, |x| laplace_cdf(x, 1.0));
    assert!(p > 0.01, "D={d} p={p}");
}

#[test]
fn sum_over_200_meters_is_laplace() {
    let params = PrivacyParams::new(0.5, 1.0, 200).unwrap();
    let lambda = params.scale();
    let mut rng = SeedTree::new(2).stream(Purpose::Test, 0);
    let sums: Vec<f64> = (0..10_000)
        .map(|_| (0..200).map(|_| sample_meter_noise(&params, &mut rng).value()).sum())
        .collect();
    let (d, p) = ks_test(&sums, |x| laplace_cdf(x, lambda));
    assert!(p > 0.01, "D={d} p={p}");
}

#[test]
fn per_meter_noise_has_zero_mean() {
    let params = PrivacyParams::new(1.0, 1.0, 200).unwrap();
    let mut rng = SeedTree::new(3).stream(Purpose::Test, 0);
    let n = 1_000_000;
    let mean = (0..n).map(|_| sample_meter_noise(&params, &mut rng).value()).sum::<f64>() / n as f64;
    // Var[G1 − G2] = 2 · (1/N) · λ².
    let se = (2.0 / 200.0_f64).sqrt() * params.scale() / (n as f64).sqrt();
    assert!(mean.abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn blinding_shares_are_laplace() {
    let mut rng = SeedTree::new(4).stream(Purpose::Test, 0);
    let mut first = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        let shares = split_noise(NoiseSample::new(0.3).unwrap(), 4, 2.0, &mut rng).unwrap();
        first.push(shares[0]);
    }
    let (_, p) = ks_test(&first, |x| laplace_cdf(x, 2.0));
    assert!(p > 0.01, "p={p}");
}

#[test]
fn laplace_sampler_matches_cdf() {
    let mut rng = SeedTree::new(5).stream(Purpose::Test, 0);
    let draws: Vec<f64> = (0..50_000).map(|_| sample_laplace(3.0, &mut rng)).collect();
    let (_, p) = ks_test(&draws, |x| laplace_cdf(x, 3.0));
    assert!(p > 0.01, "p={p}");
}

proptest! {
    #[test]
    fn shares_sum_to_noise(noise in -1e3f64..1e3, m in 1usize..8, scale in 0.0f64..50.0, seed in any::<u64>()) {
        let mut rng = SeedTree::new(seed).stream(Purpose::Test, 0);
        let shares = split_noise(NoiseSample::new(noise).unwrap(), m, scale, &mut rng).unwrap();
        prop_assert_eq!(shares.len(), m);
        let sum: f64 = shares.iter().sum();
        prop_assert!((sum - noise).abs() <= 1e-9 * (1.0 + noise.abs() + scale * m as f64));
    }
}
