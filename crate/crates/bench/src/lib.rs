//! Shared inputs for the criterion benchmarks.

use vlcm_core::{gen_random_benchmark, BigNat};

/// Ten seeded constants of `bits` bits.
pub fn constants(bits: u32) -> Vec<BigNat> {
    gen_random_benchmark(1, &[bits], 1, 10).remove(0).targets
}
