use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::LatticeSpec;

/// Random stream of one trajectory.
///
/// The generator is keyed by (master seed, trajectory index) through ChaCha's
/// stream id, so a trajectory sees the same numbers whichever worker runs it.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trajectory);
        Self {
            master_seed,
            trajectory,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Complex Gaussian with E|z|² = `variance`, split evenly between quadratures.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        Complex64::new(s * self.normal(), s * self.normal())
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Real white-noise samples, `channels` per lattice cell, with variance 1/(ΔV dt).
pub fn gaussian_field_noise(stream: &mut NoiseStream, lattice: &LatticeSpec, channels: usize, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0, "time step must be positive");
    let scale = 1.0 / (lattice.cell_volume() * dt).sqrt();
    let mut out = vec![0.0; lattice.cell_count() * channels];
    stream.fill_normal(&mut out);
    for x in &mut out {
        *x *= scale;
    }
    out
}
