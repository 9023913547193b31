//! Splittable seed streams.
//!
//! Every random draw in the crate is addressed by a chain of integer tags
//! below one 64-bit root seed: `root -> derive(tag) -> derive(tag) -> ...`.
//! A derived key seeds a ChaCha8 generator and the chunk index of a sharded
//! batch selects the ChaCha stream, so sample `k` of a batch is the same no
//! matter how many workers process it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

/// Number of samples per independently seeded chunk of a batch.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { key: splitmix64(seed) }
    }

    pub fn derive(&self, tag: u64) -> Self {
        SeedStream { key: splitmix64(self.key ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D))) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Generator for chunk `chunk` of this stream.
    pub fn rng(&self, chunk: u64) -> SampleRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(chunk);
        rng
    }
}

/// Chunk boundaries `(index, start, len)` covering `n` samples.
pub fn chunks(n: usize) -> impl Iterator<Item = (u64, usize, usize)> + Clone {
    (0..n.div_ceil(CHUNK)).map(move |c| {
        let start = c * CHUNK;
        (c as u64, start, CHUNK.min(n - start))
    })
}
