//! Seed derivation. Every random decision in a pipeline run comes from a
//! stream keyed by (master seed, purpose, index), so results do not depend on
//! evaluation order or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Generate,
    Expressibility,
    Training,
}

impl Purpose {
    fn tag(self) -> &'static [u8] {
        match self {
            Purpose::Generate => b"generate",
            Purpose::Expressibility => b"expressibility",
            Purpose::Training => b"training",
        }
    }
}

/// Random stream number `index` for `purpose` under `master`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"dqas-seed-v1");
    h.update(master.to_le_bytes());
    h.update(purpose.tag());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A 64-bit seed for item `index`.
pub fn sub_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    stream(master, purpose, index).next_u64()
}
