//! Counter-based random streams.
//!
//! Every participant of a run owns one ChaCha stream derived from the master
//! seed: stream 0 is the coordinator, stream `m` is worker `m`. Streams never
//! share state, so results do not depend on how workers are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::scalar::{lit, Real};

pub type StreamRng = ChaCha8Rng;

pub const SERVER_STREAM: u64 = 0;
/// Stream reserved for synthetic data generation.
pub const DATA_STREAM: u64 = u64::MAX;
/// Stream for the initial velocity of a run.
pub const INIT_STREAM: u64 = u64::MAX - 1;
/// Stream for reference (non-PDMP) samplers.
pub const REFERENCE_STREAM: u64 = u64::MAX - 2;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn server_stream(seed: u64) -> StreamRng {
    stream(seed, SERVER_STREAM)
}

pub fn worker_stream(seed: u64, worker_id: usize) -> StreamRng {
    stream(seed, worker_id as u64)
}

/// Derives the seed of repetition `run` from a master seed (splitmix64 step).
pub fn derive_seed(master: u64, run: u64) -> u64 {
    let mut z = master.wrapping_add(run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn exp1<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let e: f64 = Exp1.sample(rng);
    lit(e)
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    lit(rng.random::<f64>())
}

#[inline]
pub fn std_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    lit(z)
}

#[inline]
pub fn sign<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    if rng.random::<bool>() {
        T::one()
    } else {
        -T::one()
    }
}
