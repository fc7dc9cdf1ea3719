//! Named, serializable random streams.
//!
//! Each concern (roster, clients, market, adversary factors) draws from its own
//! ChaCha stream so adding a consumer never perturbs the others. A stream is
//! persisted as its seed plus word position, which is enough to resume it exactly.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct RngStream {
    name: String,
    seed: [u8; 32],
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, name: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(name.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest[..32]);
        RngStream { name: name.to_string(), seed, inner: ChaCha8Rng::from_seed(seed) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.seed == other.seed && self.word_pos() == other.word_pos()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.inner.try_fill_bytes(dest)
    }
}

#[derive(Serialize, Deserialize)]
struct StreamRepr {
    name: String,
    seed: String,
    word_pos: String,
}

impl Serialize for RngStream {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        StreamRepr { name: self.name.clone(), seed: hex::encode(self.seed), word_pos: self.word_pos().to_string() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RngStream {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = StreamRepr::deserialize(deserializer)?;
        let bytes = hex::decode(&repr.seed).map_err(D::Error::custom)?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| D::Error::custom("rng seed must be 32 bytes"))?;
        let word_pos: u128 = repr.word_pos.parse().map_err(D::Error::custom)?;
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_word_pos(word_pos);
        Ok(RngStream { name: repr.name, seed, inner })
    }
}

/// The four generation streams owned by a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngStreams {
    pub roster: RngStream,
    pub clients: RngStream,
    pub market: RngStream,
    pub adversary: RngStream,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams {
            roster: RngStream::new(seed, "roster"),
            clients: RngStream::new(seed, "clients"),
            market: RngStream::new(seed, "market"),
            adversary: RngStream::new(seed, "adversary"),
        }
    }
}
