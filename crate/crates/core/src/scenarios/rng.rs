//! Reproducible random stream.
//!
//! The generator is SplitMix64: output `k` (0-based) of the stream seeded
//! with `s` is `mix(s + (k + 1) * 0x9E3779B97F4A7C15)` with wrapping
//! arithmetic, where
//!
//! ```text
//! mix(z) = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!          z ^= z >> 27; z *= 0x94D049BB133111EB;
//!          z ^ (z >> 31)
//! ```
//!
//! Uniform doubles take the top 53 bits: `(x >> 11) * 2^-53`, in `[0, 1)`.
//! Normals use Box-Muller on two consecutive uniforms `u1, u2`:
//! `r = sqrt(-2 ln(1 - u1))`, yielding `r cos(2 pi u2)` then
//! `r sin(2 pi u2)` on the following call.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

pub fn rng_stream(seed: u64) -> RngStream {
    RngStream::new(seed)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Output `k` of the stream for `seed`, without generating the prefix.
    pub fn at(seed: u64, k: u64) -> u64 {
        mix(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let x = Self::at(self.seed, self.counter);
        self.counter += 1;
        x
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n` as `floor(u * n)`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Independent child stream seeded from the next output of this one.
    pub fn split(&mut self) -> RngStream {
        RngStream::new(self.next_u64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_splitmix64() {
        // Reference outputs of SplitMix64 seeded with 0.
        let mut r = rng_stream(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = rng_stream(42);
        let mut b = rng_stream(42);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn different_seeds_differ_early() {
        for seed in 0..100u64 {
            let mut a = rng_stream(seed);
            let mut b = rng_stream(seed + 1);
            let a10: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
            let b10: Vec<u64> = (0..10).map(|_| b.next_u64()).collect();
            assert_ne!(a10, b10);
        }
    }

    #[test]
    fn counter_access_agrees_with_sequential() {
        let mut r = rng_stream(99);
        for k in 0..50 {
            assert_eq!(r.next_u64(), RngStream::at(99, k));
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = rng_stream(3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
        assert!(r.below(1) == 0);
    }

    #[test]
    fn normal_moments() {
        let mut r = rng_stream(2024);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn split_streams_are_distinct() {
        let mut parent = rng_stream(5);
        let mut c1 = parent.split();
        let mut c2 = parent.split();
        assert_ne!(c1.next_u64(), c2.next_u64());
    }
}
