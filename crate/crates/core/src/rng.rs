//! Seed derivation.
//!
//! Each consumer of randomness gets its own ChaCha stream keyed by the run seed
//! plus a path of integers (stream tag, round, client, ...). Streams never
//! share state, so the order in which parallel workers run cannot change any
//! draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags for [`stream_rng`]. Values are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 1,
    Partition = 2,
    Perturbation = 3,
    Init = 4,
    RoundRobin = 5,
    Selection = 6,
    Training = 7,
    Straggler = 8,
    Noise = 9,
    Shapley = 10,
    Split = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream_rng(base: u64, stream: Stream, path: &[u64]) -> SimRng {
    let mut full = Vec::with_capacity(path.len() + 1);
    full.push(stream as u64);
    full.extend_from_slice(path);
    SimRng::seed_from_u64(derive_seed(base, &full))
}
