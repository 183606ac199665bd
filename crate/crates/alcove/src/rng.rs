//! Deterministic stream derivation for Monte Carlo work.
//!
//! Every replication draws from its own ChaCha stream keyed by the master
//! seed plus a structured label (experiment tag, sample size, parameter id,
//! replication index). Streams are therefore independent of scheduling:
//! running replications in any order, on any number of threads, produces
//! bitwise identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Label identifying one random stream within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey<'a> {
    pub tag: &'a str,
    pub n: u64,
    pub unit: u64,
    pub rep: u64,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Collapses a master seed and a stream key into a single 64-bit seed.
pub fn derive_seed(master: u64, key: &StreamKey) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, key.tag.as_bytes());
    h = fnv1a(h, &key.n.to_le_bytes());
    h = fnv1a(h, &key.unit.to_le_bytes());
    h = fnv1a(h, &key.rep.to_le_bytes());
    splitmix64(master ^ splitmix64(h))
}

/// RNG for one replication; disjoint across distinct keys in practice.
pub fn stream(master: u64, key: &StreamKey) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, key))
}
