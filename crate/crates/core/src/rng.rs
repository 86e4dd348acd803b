//! Counter-addressed standard complex Gaussians.
//!
//! The variable `ξₙ` of sample `index` under `seed` is a pure function of
//! `(seed, index, n)`: the ChaCha key is derived from `seed`, the stream id
//! is `index`, and `ξₙ` consumes the four 32-bit words starting at `4n`.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_VARIATE: u128 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    out
}

/// Iterator over `ξ_start, ξ_{start+1}, …` for one `(seed, index)` pair.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, index: u64, start: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key(seed));
        rng.set_stream(index);
        rng.set_word_pos(WORDS_PER_VARIATE * start as u128);
        Self { rng }
    }

    fn uniform53(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Iterator for GaussianStream {
    type Item = Complex64;

    /// `√(−ln U₁) · e^{2πiU₂}`, which has the law of `(g₁ + i g₂)/√2`.
    fn next(&mut self) -> Option<Complex64> {
        let u1 = 1.0 - self.uniform53();
        let u2 = self.uniform53();
        let radius = (-u1.ln()).sqrt();
        Some(Complex64::from_polar(radius, std::f64::consts::TAU * u2))
    }
}

/// `ξₙ` for a single index.
pub fn complex_gaussian(seed: u64, index: u64, n: u64) -> Complex64 {
    GaussianStream::new(seed, index, n)
        .next()
        .expect("stream is infinite")
}
