//! Prints fitted growth constants for the two-dimensional benchmarks.
use gle_anneal::potentials::{bivariate_multiwell, fit_bounds, u2, u3, Potential};

fn main() {
    let step: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    for p in [bivariate_multiwell(), u2(), u3()] {
        let a = p.bounds().unwrap().a_bar.clone();
        let b = fit_bounds(&p, &a, 20.0, step);
        println!(
            "{:6} U_m={:.6} U_M={:.6} r1={} r2={} U_g={:.6} hess={:.6}",
            p.name(), b.u_min, b.u_max, b.r1, b.r2, b.u_g, b.hess_sup
        );
    }
}
