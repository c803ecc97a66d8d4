//! Deterministic random streams.
//!
//! Every stream is ChaCha20 keyed by `seed_from_u64(seed)`; independent
//! substreams use the ChaCha stream id, so chunk `k` of a batch always reads
//! the same words regardless of how chunks are scheduled across threads.
//! Complex normals use the Box-Muller transform on 53-bit uniforms.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::hilbert::C64;

/// Recorded in every report and batch header.
pub const PRNG_ID: &str = "chacha20(rand_chacha-0.3,seed_from_u64,stream=chunk)+box-muller/v1";

pub fn substream(seed: u64, chunk_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index);
    rng
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Circularly-symmetric complex normal with `E|w|^2 = 1`: real and imaginary
/// parts are independent `N(0, 1/2)`.
#[inline]
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> C64 {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    let r = (-u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    C64::new(r * theta.cos(), r * theta.sin())
}

/// Real standard normal (`N(0, 1)`).
#[inline]
pub fn real_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    complex_normal(rng).re * std::f64::consts::SQRT_2
}
