//! Counter-based, splittable random streams.
//!
//! A [`Stream`] is a `(key, counter)` pair. Every draw pushes `key + counter * GAMMA`
//! through the SplitMix64 finalizer, so the output depends only on the key and on how
//! many values were taken. Child streams mix a label into the key, which keeps pipeline
//! stages independent: consuming more values in one stage never shifts another.
//!
//! All bounded sampling is integer-only (rejection on the raw 64-bit output), so the
//! same seed produces the same values on every platform.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Resolution of the lattice used for real-valued knobs.
pub const REAL_LATTICE_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5343_4150_5443_4841),
            counter: 0,
        }
    }

    /// Derive an independent child stream from a stage name.
    pub fn split(&self, label: &str) -> Stream {
        Stream {
            key: mix64(self.key ^ fnv1a64(label.as_bytes())),
            counter: 0,
        }
    }

    /// Derive an independent child stream from an index (attempt number, item number).
    pub fn split_index(&self, index: u64) -> Stream {
        Stream {
            key: mix64(self.key.wrapping_add(mix64(index.wrapping_mul(GAMMA) ^ 0xA076_1D64_78BD_642F))),
            counter: 0,
        }
    }

    /// A 64-bit seed derived from this stream's key, usable as a sub-seed.
    pub fn derive_seed(&self, index: u64) -> u64 {
        mix64(self.split_index(index).key ^ 0xE703_7ED1_A0B4_28DB)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = self.key.wrapping_add(self.counter.wrapping_mul(GAMMA));
        self.counter = self.counter.wrapping_add(1);
        mix64(x)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % n;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.next_u64() as i64;
        }
        lo.wrapping_add(self.below(span as u64) as i64)
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// A point of the `1/2^20` lattice inside `[lo, hi]`, endpoints included.
    pub fn lattice(&mut self, lo: f64, hi: f64) -> f64 {
        let steps = 1u64 << REAL_LATTICE_BITS;
        let k = self.below(steps + 1);
        if k == steps {
            return hi;
        }
        lo + (hi - lo) * (k as f64 / steps as f64)
    }

    /// Index drawn proportionally to integer weights. Panics if all weights are zero.
    pub fn weighted(&mut self, weights: &[u64]) -> usize {
        let total: u64 = weights.iter().sum();
        assert!(total > 0, "weighted draw with zero total weight");
        let mut r = self.below(total);
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return i;
            }
            r -= w;
        }
        unreachable!("weights exhausted")
    }

    pub fn chance(&mut self, numerator: u64, denominator: u64) -> bool {
        self.below(denominator) < numerator
    }

    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal deviate (Box-Muller). Only used by simulations, never by sampling.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.index(items.len())])
        }
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Quantize non-negative real weights to integers for the integer-only draw path.
pub fn quantize_weights(weights: &[f64]) -> Vec<u64> {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| {
            if w <= 0.0 {
                0
            } else {
                ((w / total) * (1u64 << 32) as f64).round().max(1.0) as u64
            }
        })
        .collect()
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}
