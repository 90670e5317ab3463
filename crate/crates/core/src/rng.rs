//! Named, reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`. The ChaCha20 key is
//! the SHA-256 digest of both, so streams for different files or stages can
//! be derived independently and consumed in any order or on any thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct SeededRng {
    master_seed: u64,
    stream_id: String,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_id: impl Into<String>) -> Self {
        let stream_id = stream_id.into();
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update((stream_id.len() as u64).to_le_bytes());
        hasher.update(stream_id.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        SeededRng {
            master_seed,
            stream_id,
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// Child stream `"{stream_id}/{name}"`; independent of how much of the
    /// parent has been consumed.
    pub fn derive(&self, name: &str) -> SeededRng {
        SeededRng::new(self.master_seed, format!("{}/{}", self.stream_id, name))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
