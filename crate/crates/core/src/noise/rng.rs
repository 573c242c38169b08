//! Seedable counter-based generator and the samplers built on it.
//!
//! The generator is SplitMix64: the state advances by the golden-ratio
//! increment `0x9E37_79B9_7F4A_7C15` and each output is the state passed
//! through the [`mix64`] finalizer. Every sampler below consumes a fixed,
//! documented number of outputs so any implementation of the same
//! algorithms reproduces paths bit-for-bit.

use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer (a bijection on `u64`).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th substream of `master`:
/// `mix64(master ^ index·0x9E3779B97F4A7C15)`.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ index.wrapping_mul(GOLDEN_GAMMA))
}

fn open01(u: u64) -> f64 {
    ((u >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on the open interval (0, 1): `((u >> 12) + 0.5) · 2^-52`,
    /// exactly representable for every output.
    pub fn next_open01(&mut self) -> f64 {
        open01(self.next_u64())
    }

    /// Unit-rate exponential by inversion, `-ln(u)`. One output.
    pub fn next_exp1(&mut self) -> f64 {
        -self.next_open01().ln()
    }

    /// Standard normal via Box–Muller, cosine branch only. Two outputs.
    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_open01();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Poisson count with the given mean: the number of arrivals of a
    /// unit-rate process in `[0, mean]`, built from exponential gaps.
    /// Consumes `count + 1` outputs.
    pub fn next_poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let mut count = 0;
        let mut arrival = self.next_exp1();
        while arrival <= mean {
            count += 1;
            arrival += self.next_exp1();
        }
        count
    }
}
