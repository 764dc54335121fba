//! Seeded, splittable generator used for every selection draw.
//!
//! ChaCha8 keyed from the match seed; stream `n` is an independent
//! sequence, so each tick can draw from its own stream and a replay of any
//! tick needs only `(seed, tick)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionRng {
    inner: ChaCha8Rng,
}

impl SelectionRng {
    pub fn new(seed: u64) -> Self {
        SelectionRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent generator for `stream`, keyed by the same seed.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SelectionRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_split() {
        let a: Vec<u64> = { let mut r = SelectionRng::new(9); (0..8).map(|_| r.next_u64()).collect() };
        let b: Vec<u64> = { let mut r = SelectionRng::new(9); (0..8).map(|_| r.next_u64()).collect() };
        assert_eq!(a, b);
        let mut s0 = SelectionRng::split(9, 0);
        let mut s1 = SelectionRng::split(9, 1);
        assert_eq!(s0.next_u64(), a[0]);
        assert_ne!(s1.next_u64(), a[0]);
    }

    #[test]
    fn uniform_range() {
        let mut r = SelectionRng::new(1);
        for _ in 0..10_000 {
            let u = r.next_uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
