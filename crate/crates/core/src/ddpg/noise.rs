use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Mean-reverting Ornstein-Uhlenbeck exploration noise around zero:
/// `n' = n − θ·n·dt + σ·√dt·N(0, 1)`, one independent process per action
/// dimension.
#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, dt: f64, seed: u64) -> Self {
        Self { theta, sigma, dt, state: vec![0.0; dim], rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Restart every process at zero; the random stream continues.
    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|n| *n = 0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn sample(&mut self) -> &[f64] {
        let diffusion = self.sigma * self.dt.sqrt();
        for n in &mut self.state {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *n += -self.theta * *n * self.dt + diffusion * z;
        }
        &self.state
    }
}
