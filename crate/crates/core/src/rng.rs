//! Seeded pseudo-random streams.

use rand::SeedableRng;

/// Generator used for every seeded computation: PCG with 64-bit state and
/// 32-bit output (`Lcg64Xsh32`).
pub type Prng = rand_pcg::Pcg32;

/// Identifier written into output metadata.
pub const PRNG_ID: &str = "pcg32-lcg64xsh32";

pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Independent stream for a named sub-computation, so that adding draws in
/// one place does not shift the values seen elsewhere.
pub fn stream(seed: u64, id: u64) -> Prng {
    Prng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ id.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ id,
    )
}
