//! Seeded, splittable random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream addressed
//! by `(master seed, domain, index)`. ChaCha is counter based, so a stream can
//! be opened for any world or sample index without touching the others, which
//! keeps parallel runs bit-identical to sequential ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Frozen per-edge / per-node parameter assignment.
    Params = 1,
    /// Live-edge graph of world `i`.
    LiveEdge = 2,
    /// External seed set of world `i`.
    External = 3,
    /// Rank values of world `i`.
    Rank = 4,
    /// Monte Carlo cascade number `i`.
    Cascade = 5,
    /// Monte Carlo worlds drawn by the CELF baseline.
    Celf = 6,
    /// Graph generators.
    Generator = 7,
}

pub type StreamRng = ChaCha8Rng;

/// Opens stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Maps 64 random bits into the open interval (0, 1).
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Mixes a master seed with a sub-index, for seeds that must themselves be
/// derived (e.g. one seed per repetition of an experiment).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
