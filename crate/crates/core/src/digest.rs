//! Content hashes and seeded generators that are stable across runs,
//! platforms and thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// SHA-256 over length-prefixed parts, so ("ab","c") and ("a","bc") differ.
pub fn stable_digest<I, P>(parts: I) -> [u8; 32]
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for part in parts {
        let part = part.as_ref();
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub fn hex_id(digest: &[u8; 32], bytes: usize) -> String {
    digest[..bytes].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn seeded_rng(master_seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let seed = master_seed.to_le_bytes();
    let digest = stable_digest(std::iter::once(&seed[..]).chain(parts.iter().map(|p| p.as_bytes())));
    ChaCha8Rng::from_seed(digest)
}

/// Orders by digest; used for seeded permutations that do not depend on
/// input order.
pub fn rank_key(master_seed: u64, parts: &[&str]) -> [u8; 32] {
    let seed = master_seed.to_le_bytes();
    stable_digest(std::iter::once(&seed[..]).chain(parts.iter().map(|p| p.as_bytes())))
}
