use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, splittable random stream.
///
/// Built on ChaCha8, which is counter based: the master seed selects the key
/// and [`SeededRng::stream`] selects one of 2^64 independent streams under
/// that key. Identical seed and call sequence give identical output.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator on stream `id` of this generator's seed.
    ///
    /// Independent of how many values have been drawn from `self`.
    pub fn stream(&self, id: u64) -> SeededRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(id);
        SeededRng {
            seed: self.seed,
            inner,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_do_not_depend_on_parent_position() {
        let a = SeededRng::new(11);
        let mut b = SeededRng::new(11);
        b.next_u64();
        assert_eq!(a.stream(3).next_u64(), b.stream(3).next_u64());
        assert_ne!(a.stream(3).next_u64(), a.stream(4).next_u64());
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut rng = SeededRng::new(1);
        let mut p = rng.permutation(50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }
}
