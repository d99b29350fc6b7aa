//! Deterministic pseudo-random numbers (splitmix64). Seeded determinism is a
//! contract of the experiment suites, so the generator is fixed here rather
//! than borrowed from a crate whose stream might change across versions.

#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn seeded(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Vector of symmetric uniforms.
    pub fn symmetric_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.symmetric()).collect()
    }

    /// Uniform point in the closed ball of the given radius (2-norm), by
    /// rejection from the cube.
    pub fn ball(&mut self, dim: usize, radius: f64) -> Vec<f64> {
        loop {
            let v = self.symmetric_vec(dim);
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 <= 1.0 {
                return v.into_iter().map(|x| x * radius).collect();
            }
        }
    }
}
