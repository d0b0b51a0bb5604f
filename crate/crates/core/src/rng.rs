//! Seeded random streams.
//!
//! Every stochastic stage of the pipeline draws from its own ChaCha stream
//! derived from the run seed, so enabling one stage (e.g. corruption) never
//! shifts the draws seen by another (e.g. batch order).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Init = 2,
    BatchOrder = 3,
    Corruption = 4,
    ValidationCorruption = 5,
    Synthetic = 6,
    SyntheticCensoring = 7,
    Probe = 8,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
