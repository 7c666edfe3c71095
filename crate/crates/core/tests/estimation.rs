use altcsit::channel::NoiseConfig;
use altcsit::csit::CsitPattern;
use altcsit::estimation::{
    check_sweep, compare_baselines, fit_line, rate_slope, run_trials, run_trials_under, trial_seed,
};
use altcsit::schemes::SchemeId;
use altcsit::Error;
use num_rational::Rational64;

const SWEEP: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

#[test]
fn reports_are_reproducible() {
    let noise = NoiseConfig::awgn(1e-3).unwrap();
    let a = run_trials(SchemeId::ThreeUser, 300, &noise, 5).unwrap();
    let b = run_trials(SchemeId::ThreeUser, 300, &noise, 5).unwrap();
    assert_eq!(a, b);
    let c = run_trials(SchemeId::ThreeUser, 300, &noise, 6).unwrap();
    assert_ne!(a.condition_quantiles, c.condition_quantiles);

    let s1 = rate_slope(SchemeId::Scheme1, &SWEEP, 50, 3).unwrap();
    let s2 = rate_slope(SchemeId::Scheme1, &SWEEP, 50, 3).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn trial_seeds_are_distinct() {
    let mut seeds: Vec<u64> = (0..10_000).map(|k| trial_seed(1, k)).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), 10_000);
}

#[test]
fn scheme2_ten_thousand_noiseless() {
    let r = run_trials(SchemeId::Scheme2, 10_000, &NoiseConfig::noiseless(), 1).unwrap();
    assert_eq!(r.successes, 10_000);
    assert!(r.clean());
    assert!(r.max_residual <= 1e-8);
}

#[test]
fn noisy_trials_stay_within_bounds() {
    let noise = NoiseConfig::awgn(1e-2).unwrap();
    for id in [SchemeId::Scheme1, SchemeId::Kx2(4), SchemeId::TwoXK(3)] {
        let r = run_trials(id, 2_000, &noise, 12).unwrap();
        assert_eq!(r.successes, r.trials, "{id}");
        assert!(r.max_residual > 0.0);
    }
}

#[test]
fn pattern_must_dominate() {
    let noise = NoiseConfig::noiseless();
    let strong: CsitPattern = "PP,PP,PP".parse().unwrap();
    let r = run_trials_under(SchemeId::Scheme1, &strong, 100, &noise, 2).unwrap();
    assert_eq!(r.successes, 100);
    assert_eq!(r.pattern, strong);
    let weak: CsitPattern = "NN,NN,NN".parse().unwrap();
    assert!(matches!(
        run_trials_under(SchemeId::Scheme1, &weak, 10, &noise, 2),
        Err(Error::PatternMismatch { .. })
    ));
}

#[test]
fn kuser_slope_grows_with_k() {
    let slopes: Vec<f64> = (2..=5)
        .map(|k| rate_slope(SchemeId::KUser(k), &SWEEP, 100, 4).unwrap().slope)
        .collect();
    for w in slopes.windows(2) {
        assert!(w[1] >= w[0], "{slopes:?}");
    }
}

#[test]
fn slope_records_every_point() {
    let s = rate_slope(SchemeId::Scheme2, &SWEEP, 40, 8).unwrap();
    assert_eq!(s.snr_points.len(), 5);
    assert_eq!(s.rate_std.len(), 5);
    assert!(s.snr_points.windows(2).all(|w| w[1].1 > w[0].1));
    assert!(s.fit_points == 5 || s.fit_points == 3);
}

#[test]
fn sweep_validation() {
    assert!(check_sweep(&SWEEP).is_ok());
    for bad in [&[1e2, 1e4][..], &[1e2, 1e3, 1e4], &[1e2, 1e6, 1e4], &[0.0, 1e3, 1e6], &[-1.0, 1e3, 1e6]] {
        assert!(matches!(check_sweep(bad), Err(Error::InvalidSweep(_))), "{bad:?}");
    }
}

#[test]
fn line_fit_recovers_exact_line() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 2.0).collect();
    let (slope, r2) = fit_line(&x, &y);
    assert!((slope - 1.5).abs() < 1e-12);
    assert!((r2 - 1.0).abs() < 1e-12);
}

#[test]
fn kuser_beats_delayed_baseline() {
    let r = Rational64::new;
    assert_eq!(compare_baselines(2).unwrap().delayed, r(6, 5));
    assert_eq!(compare_baselines(3).unwrap().delayed, r(5, 4));
    for k in 2..=50 {
        let b = compare_baselines(k).unwrap();
        assert!(b.scheme > b.delayed, "K = {k}");
        assert_eq!(b.scheme, SchemeId::KUser(k).dof_count().unwrap());
    }
    assert!(compare_baselines(1).is_err());
}
