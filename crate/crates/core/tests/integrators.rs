use std::sync::Arc;

use gle_anneal::integrators::{
    memory_coefficients, simulate, simulate_with, Dynamics, DynamicsConfig, Integrator, State, ZNoise,
};
use gle_anneal::matrices::{decoupled, make_a, Design};
use gle_anneal::noise::NoiseStream;
use gle_anneal::potentials::{self, Potential};
use gle_anneal::schedules::Schedule;
use gle_anneal::Error;

#[derive(Debug)]
struct Flat(usize);

impl Potential for Flat {
    fn name(&self) -> &str {
        "flat"
    }
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
    }
}

#[derive(Debug)]
struct Blowup;

impl Potential for Blowup {
    fn name(&self) -> &str {
        "blowup"
    }
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        -x[0].powi(4)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = -4.0 * x[0].powi(3);
    }
}

fn bivar_cfg(design: u32) -> DynamicsConfig {
    DynamicsConfig::new(
        Arc::new(potentials::bivariate_multiwell()),
        Design::from_index(design).unwrap(),
        1.0,
        1.0,
        Schedule::simulation(5.0),
        0.1,
    )
    .unwrap()
}

#[test]
fn same_seed_same_path() {
    for dynamics in [Dynamics::Overdamped, Dynamics::Underdamped, Dynamics::Gle] {
        let cfg = bivar_cfg(2);
        let s0 = cfg.initial_state(vec![4.0, 2.0]);
        let a = simulate(&cfg, dynamics, &s0, 2000, 9, 7).unwrap();
        let b = simulate(&cfg, dynamics, &s0, 2000, 9, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate(&cfg, dynamics, &s0, 2000, 10, 7).unwrap();
        assert_ne!(a.last(), c.last());
    }
}

#[test]
fn gle_hand_oracle() {
    // U = x²/2, A = 2I, λ = 3I, n = m = 1, T = 0.25, Δt = 0.1.
    let pot: Arc<dyn Potential> = Arc::new(potentials::quadratic(1, &[0.5]).unwrap());
    let cfg = DynamicsConfig::new(pot, Design::from_index(1).unwrap(), 2.0, 3.0, Schedule::constant(0.25), 0.1)
        .unwrap()
        .with_gamma(1.5);
    let dt: f64 = 0.1;
    let theta = 1.0 - (-dt).exp();
    let alpha = (1.0 - theta * theta).sqrt();
    let (x, y, z, xi) = (0.7, -0.2, 0.4, 1.3);

    let yh = y - 0.5 * dt * 1.5 * x + 0.5 * dt * 3.0 * z;
    let x1 = x + dt * 1.5 * yh;
    let z1 = z - theta * 3.0 * yh - theta * 2.0 * z + alpha * 0.5 * 2.0 * xi;
    let y1 = yh - 0.5 * dt * 1.5 * x1 + 0.5 * dt * 3.0 * z1;

    let mut s = State::new(vec![x], vec![y], vec![z]);
    Integrator::new(&cfg, Dynamics::Gle).step_with(&mut s, 0, &[xi]).unwrap();
    assert!((s.x[0] - x1).abs() < 1e-15);
    assert!((s.z[0] - z1).abs() < 1e-15);
    assert!((s.y[0] - y1).abs() < 1e-15);
}

#[test]
fn kinetic_and_overdamped_hand_oracle() {
    let pot: Arc<dyn Potential> = Arc::new(potentials::quadratic(1, &[0.5]).unwrap());
    let cfg = DynamicsConfig::new(pot, Design::from_index(1).unwrap(), 2.0, 1.0, Schedule::constant(0.25), 0.1)
        .unwrap();
    let (x, y, xi) = (0.7, -0.2, 1.3);
    let mut s = State::new(vec![x], vec![y], vec![0.0]);
    Integrator::new(&cfg, Dynamics::Underdamped).step_with(&mut s, 0, &[xi]).unwrap();
    assert!((s.x[0] - (x + 0.1 * y)).abs() < 1e-15);
    let y1 = y - 0.1 * x - 0.1 * 2.0 * y + (0.1f64 * 2.0 * 0.25).sqrt() * xi;
    assert!((s.y[0] - y1).abs() < 1e-15);

    let mut s = State::new(vec![x], vec![y], vec![0.0]);
    Integrator::new(&cfg, Dynamics::Overdamped).step_with(&mut s, 0, &[xi]).unwrap();
    assert!((s.x[0] - (x - 0.1 * x + (2.0f64 * 0.25 * 0.1).sqrt() * xi)).abs() < 1e-15);
}

#[test]
fn temperature_is_taken_before_the_step() {
    let pot: Arc<dyn Potential> = Arc::new(Flat(1));
    let cfg = DynamicsConfig::new(pot, Design::from_index(1).unwrap(), 1.0, 1.0, Schedule::simulation(2.0), 0.5)
        .unwrap();
    let k = 7;
    let temp = cfg.schedule.temperature(k, cfg.dt);
    let mut s = State::new(vec![0.0], vec![0.0], vec![0.0]);
    Integrator::new(&cfg, Dynamics::Overdamped).step_with(&mut s, k, &[1.0]).unwrap();
    assert!((s.x[0] - (2.0 * temp * 0.5f64).sqrt()).abs() < 1e-15);
}

#[test]
fn kinetic_noise_is_prefix_of_memory_noise() {
    let noise = NoiseStream::new(42);
    let m = noise.draw_vec(5, 6);
    let n = noise.draw_vec(5, 2);
    assert_eq!(&m[..2], &n[..]);
}

#[test]
fn divergence_is_reported() {
    let cfg = DynamicsConfig::new(Arc::new(Blowup), Design::from_index(1).unwrap(), 1.0, 1.0, Schedule::constant(0.0), 0.1)
        .unwrap();
    let s0 = cfg.initial_state(vec![3.0]);
    match simulate_with(&cfg, Dynamics::Overdamped, &s0, 1000, 0, |_, _| {}) {
        Err(Error::Diverged { step }) => assert!(step < 1000),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn overdamped_brownian_variance() {
    // Flat potential: x_k is a sum of k Gaussians with variance 2TΔt each.
    let pot: Arc<dyn Potential> = Arc::new(Flat(1));
    let (temp, dt, k) = (0.7, 0.05, 10u64);
    let cfg = DynamicsConfig::new(pot, Design::from_index(1).unwrap(), 1.0, 1.0, Schedule::constant(temp), dt)
        .unwrap();
    let s0 = cfg.initial_state(vec![0.0]);
    let paths = 100_000u64;
    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    for seed in 0..paths {
        let end = simulate_with(&cfg, Dynamics::Overdamped, &s0, k, seed, |_, _| {}).unwrap();
        sum += end.x[0];
        sum_sq += end.x[0] * end.x[0];
    }
    let mean = sum / paths as f64;
    let var = sum_sq / paths as f64 - mean * mean;
    let expected = 2.0 * temp * k as f64 * dt;
    assert!(mean.abs() < 4.0 * (expected / paths as f64).sqrt());
    assert!((var / expected - 1.0).abs() < 0.02, "var {var} vs {expected}");
}

fn stationary_z_variance(z_noise: ZNoise, temp: f64, dt: f64) -> f64 {
    let pot: Arc<dyn Potential> = Arc::new(Flat(1));
    let design = Design::from_index(1).unwrap();
    let cfg = DynamicsConfig::from_parts(
        pot,
        make_a(design, 1, 1.0).unwrap(),
        decoupled(design, 1),
        1.0,
        Schedule::constant(temp),
        dt,
    )
    .unwrap()
    .with_z_noise(z_noise);
    let s0 = cfg.initial_state(vec![0.0]);
    let (burn, steps) = (5_000u64, 400_000u64);
    let mut acc = 0.0;
    simulate_with(&cfg, Dynamics::Gle, &s0, burn + steps, 1, |k, s| {
        if k > burn {
            acc += s.z[0] * s.z[0];
        }
    })
    .unwrap();
    acc / steps as f64
}

#[test]
fn z_noise_modes() {
    let (temp, dt) = (0.5, 0.01);
    let (theta, alpha) = memory_coefficients(dt, ZNoise::Printed);
    assert!((alpha - (1.0 - theta * theta).sqrt()).abs() < 1e-15);

    // Exact stationary variance of z' = (1−θ)z + α√(2T)ξ is 2α²T/(1−(1−θ)²).
    let printed = stationary_z_variance(ZNoise::Printed, temp, dt);
    let exact = 2.0 * alpha * alpha * temp / (1.0 - (1.0 - theta).powi(2));
    assert!(exact / temp > 100.0);
    assert!((printed / exact - 1.0).abs() < 0.1, "printed {printed} vs {exact}");

    let calibrated = stationary_z_variance(ZNoise::Calibrated, temp, dt);
    assert!((calibrated / temp - 1.0).abs() < 0.1, "calibrated {calibrated}");
}

#[test]
fn dimension_mismatch_rejected() {
    let cfg = bivar_cfg(1);
    let bad = State::new(vec![0.0], vec![0.0, 0.0], vec![0.0, 0.0]);
    assert!(simulate(&cfg, Dynamics::Gle, &bad, 1, 0, 1).is_err());
}
