//! Reproducible random streams.
//!
//! Every replica of every experiment draws from its own ChaCha8 stream. The
//! 256-bit key is derived from `(master seed, experiment id, lane)` and the
//! ChaCha stream number is the replica index, so the numbers a replica sees
//! never depend on which worker runs it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Coordinates of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub experiment: u64,
    pub replica: u64,
    pub lane: u32,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: &str) -> Self {
        Self {
            seed,
            experiment: fnv1a(experiment.as_bytes()),
            replica: 0,
            lane: 0,
        }
    }

    pub fn replica(self, replica: u64) -> Self {
        Self { replica, ..self }
    }

    pub fn lane(self, lane: u32) -> Self {
        Self { lane, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = self.seed ^ self.experiment.rotate_left(17) ^ ((self.lane as u64) << 40);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replica);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential draw with the given mean, by inversion.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    -mean * open01(rng).ln()
}

/// Uniform index in `0..n`.
#[inline]
pub fn index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Gamma(shape, 1) by Marsaglia–Tsang rejection; shapes below one are boosted
/// through `G(a) = G(a + 1) · U^{1/a}`.
pub fn gamma<R: RngCore + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = open01(rng).powf(1.0 / shape);
        return gamma(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut *rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open01(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

#[inline]
pub fn normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)
}
