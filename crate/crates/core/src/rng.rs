//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! master seed and selected by a tag path such as `(purpose, level, node)`.
//! ChaCha is counter based, so two stages that use different tag paths never
//! share state and stage-1 draws do not depend on anything drawn later.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub mod tag {
    pub const MULTINOMIAL: u64 = 1;
    pub const REINFORCE: u64 = 2;
    pub const SCATTER: u64 = 3;
    pub const CRP: u64 = 4;
    pub const ATOMS: u64 = 5;
    pub const REPLICATE: u64 = 6;
    pub const GENERATOR: u64 = 7;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a tag path.
pub fn stream_id(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6D73_6769_6262_7300u64, |acc, &t| splitmix(acc ^ splitmix(t)))
}

/// Child seed for a command-level stage, e.g. replicate `i` of a run.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut path = Vec::with_capacity(tags.len() + 1);
    path.push(master);
    path.extend_from_slice(tags);
    stream_id(&path)
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tags));
    rng
}
