//! Counter-based seed derivation.
//!
//! A master seed is split into named streams by hashing `(master, path...)`
//! with the SplitMix64 finalizer. Two different paths give statistically
//! independent ChaCha streams; the same path always gives the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose of a random stream within one experimental cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Teacher = 1,
    DatasetA = 2,
    DatasetB = 3,
    TestSet = 4,
    Subsample = 5,
    InitA = 6,
    InitB = 7,
    NoiseA = 8,
    NoiseB = 9,
    Shuffle = 10,
    Split = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of integers into a seed derived from `master`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seeds for one replicate of an experimental cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub root: u64,
}

impl CellSeeds {
    pub fn new(master: u64, cell: &[u64]) -> Self {
        CellSeeds {
            root: derive(master, cell),
        }
    }

    pub fn stream(&self, s: Stream) -> u64 {
        derive(self.root, &[s as u64])
    }
}
