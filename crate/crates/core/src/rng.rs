//! Seeded randomness.
//!
//! Every random choice in the crate goes through [`seeded`], which returns a
//! ChaCha8 stream generator. ChaCha8 output is specified bit-for-bit, so a
//! given seed produces the same selections on every platform.
//! Bounded draws use `rand` 0.8's `gen_range`, and shuffles are a plain
//! Fisher-Yates pass implemented here so the algorithm cannot drift with
//! library upgrades.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// In-place Fisher-Yates shuffle, iterating from the back.
pub fn shuffle<T>(rng: &mut SeededRng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Indices of `n` distinct positions drawn uniformly from `0..len`, in draw
/// order (partial Fisher-Yates).
pub fn choose_indices(rng: &mut SeededRng, len: usize, n: usize) -> Vec<usize> {
    assert!(n <= len, "cannot draw {n} of {len}");
    let mut pool: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = rng.gen_range(i..len);
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}

/// Stable 64-bit mixing of a seed and a string, used where a per-item
/// pseudo-random key is needed independently of iteration order.
pub fn keyed_hash(seed: u64, key: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_indices_distinct_and_reproducible() {
        let a = choose_indices(&mut seeded(7), 50, 20);
        let b = choose_indices(&mut seeded(7), 50, 20);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut v: Vec<u32> = (0..100).collect();
        shuffle(&mut seeded(1), &mut v);
        let mut s = v.clone();
        s.sort_unstable();
        assert_eq!(s, (0..100).collect::<Vec<_>>());
        assert_ne!(v, s);
    }

    #[test]
    fn keyed_hash_is_stable() {
        assert_eq!(keyed_hash(1, "abc"), keyed_hash(1, "abc"));
        assert_ne!(keyed_hash(1, "abc"), keyed_hash(2, "abc"));
    }
}
