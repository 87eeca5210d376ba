//! Deterministic seed derivation.
//!
//! Every run carries one master seed; each component draws from its own
//! RNG stream derived from `(master seed, component id)` so that adding
//! or reordering components never perturbs another component's draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice; stable across platforms and runs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives a component seed from the master seed and a component id.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + component.len());
    bytes.extend_from_slice(&master.to_le_bytes());
    bytes.extend_from_slice(component.as_bytes());
    fnv1a64(&bytes)
}

/// A seeded, platform-independent RNG for one component.
pub fn rng_for(master: u64, component: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, component))
}
