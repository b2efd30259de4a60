//! Counter-based Gaussian noise.
//!
//! The draw for step `k` depends only on `(seed, k)`: a ChaCha8 generator
//! keyed by the seed is positioned on stream `k` and read from word 0. Any
//! prefix of the per-step vector is therefore the same whether a consumer
//! reads `n` or `m ≥ n` components, which is what lets the underdamped and
//! generalised integrators share one noise realisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    base: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fills `out` with the first `out.len()` standard normals of step `counter`.
    pub fn draw(&self, counter: u64, out: &mut [f64]) {
        let mut rng = self.base.clone();
        rng.set_stream(counter);
        rng.set_word_pos(0);
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }

    pub fn draw_vec(&self, counter: u64, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        self.draw(counter, &mut v);
        v
    }
}
