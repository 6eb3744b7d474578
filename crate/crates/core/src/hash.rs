//! Portable hashing used for n-gram buckets and counter-based randomness.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

/// Continues an FNV-1a hash from a previous state, so multi-part keys can be
/// hashed without joining them into one buffer first.
pub fn fnv1a64_extend(mut state: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        state ^= u64::from(b);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless random stream keyed by a tuple of words. The same key always
/// yields the same value, which is what lets the simulator answer concurrent
/// calls without shared mutable state.
#[derive(Debug, Clone, Copy)]
pub struct CounterHash {
    state: u64,
}

impl CounterHash {
    pub fn new(seed: u64) -> Self {
        Self { state: mix64(seed) }
    }

    pub fn with(self, word: u64) -> Self {
        Self {
            state: mix64(self.state ^ mix64(word)),
        }
    }

    pub fn with_str(self, s: &str) -> Self {
        self.with(fnv1a64(s.as_bytes()))
    }

    pub fn value(self) -> u64 {
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(self) -> f64 {
        (self.value() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn index(self, n: usize) -> usize {
        // Lemire's multiply-shift; bias is negligible for the sizes used here.
        ((u128::from(self.value()) * n as u128) >> 64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
        assert_eq!(fnv1a64_extend(fnv1a64(b"foo"), b"bar"), fnv1a64(b"foobar"));
    }

    #[test]
    fn counter_hash_is_keyed() {
        let a = CounterHash::new(7).with_str("v1").with(3);
        let b = CounterHash::new(7).with_str("v1").with(3);
        let c = CounterHash::new(7).with_str("v1").with(4);
        assert_eq!(a.value(), b.value());
        assert_ne!(a.value(), c.value());
        assert!((0.0..1.0).contains(&a.unit()));
        assert!(a.index(5) < 5);
    }
}
