use gle_anneal::theory::{
    decade_times, log_sobolev_c, rate_r, s0, s1, schedule_comparison, RateBranch, ScheduleFamily, TheoryConstants,
    DEFAULT_P,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rate_matches_independent_min() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut seen = (false, false);
    for _ in 0..20 {
        let gap: f64 = rng.random_range(0.0..3.0);
        let alpha: f64 = rng.random_range(0.01..0.9);
        let delta: f64 = alpha + rng.random_range(0.01..2.0);
        let energy: f64 = gap + rng.random_range(0.01..20.0);
        let r = rate_r(energy, gap, delta, alpha).unwrap();
        let expected = f64::min((1.0 - gap / energy - alpha) / 2.0, (delta - alpha) / energy);
        assert!((r.value - expected).abs() < 1e-12, "{energy} {gap} {delta} {alpha}");
        match r.branch {
            RateBranch::Barrier => seen.0 = true,
            RateBranch::Tolerance => seen.1 = true,
        }
    }
    assert!(seen.0 && seen.1);
}

#[test]
fn rate_is_continuous_at_crossover() {
    for (gap, delta, alpha) in [(0.5f64, 1.0f64, 0.1f64), (2.0, 0.4, 0.3), (0.0, 5.0, 0.5)] {
        let e = (gap + 2.0 * (delta - alpha)) / (1.0 - alpha);
        let lo = rate_r(e * (1.0 - 1e-14), gap, delta, alpha).unwrap();
        let hi = rate_r(e, gap, delta, alpha).unwrap();
        assert!((lo.value - hi.value).abs() < 1e-12);
    }
}

#[test]
fn rate_worked_example() {
    assert!((rate_r(1.0, 0.5, 1.0, 0.1).unwrap().value - 0.2).abs() < 1e-15);
}

#[test]
fn rate_rejects_bad_inputs() {
    assert!(rate_r(0.4, 0.5, 1.0, 0.1).is_err());
    assert!(rate_r(1.0, 0.5, 0.05, 0.1).is_err());
    assert!(rate_r(1.0, 0.5, 1.0, 1.0).is_err());
    assert!(rate_r(1.0, -0.1, 1.0, 0.1).is_err());
}

#[test]
fn constants_for_unit_system() {
    let c = TheoryConstants::derive(0.0, 1.0, 1.0, 1.0);
    assert_eq!(c.s0, 1.0);
    assert_eq!(c.s1, 1182.0);
    assert!((s1(s0(1.0)) - 4410.0).abs() < 1e-9);
    assert!(c.beta0 > 1e12 && c.beta0 < 1e14);
    assert!(c.beta(2.0) > c.beta(1.0));
}

#[test]
fn log_sobolev_grows_as_temperature_falls() {
    let c = TheoryConstants::derive(1.0, 1.0, 1.0, 1.0);
    let mut prev = 0.0;
    for t in [2.0, 1.0, 0.5, 0.25] {
        let v = log_sobolev_c(t, &c, 5.0, 1.0);
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn faster_cooling_fails_comparison() {
    let c = TheoryConstants::derive(1.0, 1.0, 1.0, 1.0);
    let f = |_t: f64| 1.2;
    let fp = |_t: f64| 0.0;
    let fam = ScheduleFamily {
        scale: 1.0,
        f: &f,
        f_prime: &fp,
    };
    let rep = schedule_comparison(&fam, &c, 1.0, 1.0, &DEFAULT_P, &decade_times()).unwrap();
    assert!(rep.final_ratio < 1e-3);
    assert!(schedule_comparison(&fam, &c, 1.0, 1.0, &[1.0, 1.0], &decade_times()).is_err());
}
