//! Seeded pseudo-random source.
//!
//! The generator is xoshiro256** (Blackman & Vigna), with its 256-bit state
//! expanded from a single `u64` seed by SplitMix64. Both algorithms are
//! written out here so the draw sequence for a seed is fixed by this crate
//! and not by whichever version of an external RNG crate is linked.
//!
//! [`SeededRng`] also implements [`rand_core::RngCore`], which lets
//! `rand_distr` samplers draw from it.

use rand_core::RngCore;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    state: [u64; 4],
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        SeededRng { seed, state }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent generator for a named sub-stream.
    pub fn fork(&mut self, stream: u64) -> SeededRng {
        let mixed = self.next_raw() ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
        SeededRng::new(mixed)
    }

    fn next_raw(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn draw_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Contract(format!(
                "draw_uniform needs finite lo < hi, got lo={lo}, hi={hi}"
            )));
        }
        let v = lo + (hi - lo) * self.next_f64();
        // rounding can land exactly on hi for wide ranges
        Ok(if v >= hi { hi.next_down() } else { v })
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        // Lemire's multiply-shift with rejection
        let n = n as u64;
        loop {
            let m = (self.next_raw() as u128) * (n as u128);
            let low = m as u64;
            if low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_raw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_raw().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_two_draws_differ() {
        let mut rng = SeededRng::new(42);
        let a = rng.draw_uniform(0.0, 1.0).unwrap();
        let b = rng.draw_uniform(0.0, 1.0).unwrap();
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn identical_seeds_identical_sequences() {
        let mut a = SeededRng::new(1234);
        let mut b = SeededRng::new(1234);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn byte_streams_identical() {
        let mut a = SeededRng::new(9);
        let mut b = SeededRng::new(9);
        let mut ba = [0u8; 37];
        let mut bb = [0u8; 37];
        a.fill_bytes(&mut ba);
        b.fill_bytes(&mut bb);
        assert_eq!(ba, bb);
    }

    #[test]
    fn known_answer_for_seed_zero() {
        // SplitMix64 reference output for state 0 is 0xE220A8397B1DCDAF.
        let mut sm = 0u64;
        assert_eq!(splitmix64(&mut sm), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn sample_mean_of_uniform() {
        let mut rng = SeededRng::new(42);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| rng.draw_uniform(0.0, 1.0).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn rejects_empty_interval() {
        let mut rng = SeededRng::new(1);
        assert!(rng.draw_uniform(1.0, 1.0).is_err());
        assert!(rng.draw_uniform(2.0, 1.0).is_err());
        assert!(rng.draw_uniform(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(5);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[rng.below(7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800), "{seen:?}");
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut rng = SeededRng::new(3);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
