//! Seeded random numbers for synthetic measurements.
//!
//! Reproducibility matters more than statistical sophistication here: a
//! measurement generated with a given seed must be identical on every run so
//! that reconstruction experiments can be replayed bit for bit. The generator
//! is SplitMix64 (Steele, Lea & Flood's 64-bit mixer), chosen because its
//! entire state is one `u64` and its output sequence is fixed by the
//! algorithm, not by a library version. Standard-normal deviates come from
//! the trigonometric Box-Muller transform applied to the generator's uniform
//! output.
//!
//! Stream contract (relied on by [`crate::noise::add_noise`]): each call to
//! [`GaussianStream::next`] returns the next deviate of a single stream;
//! deviates are produced in pairs from consecutive uniform pairs, and the
//! second element of a pair is buffered, not discarded.

/// SplitMix64 generator.
///
/// `next_u64` applies the standard gamma increment `0x9E3779B97F4A7C15`
/// followed by the two xor-shift-multiply mixing rounds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform deviate in the half-open interval (0, 1], built from the top
    /// 53 bits so every value is an exact double. The interval excludes 0 so
    /// the deviate is always a valid `ln` argument.
    pub fn next_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 1.0) / 9_007_199_254_740_992.0
    }

    /// Uniform deviate in [0, 1).
    pub fn next_closed_open(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0
    }
}

/// Stream of independent standard-normal deviates.
///
/// Each uniform pair (u1, u2) with u1 in (0, 1] and u2 in [0, 1) yields
/// `r cos(2 pi u2)` and `r sin(2 pi u2)` with `r = sqrt(-2 ln u1)`; the sine
/// branch is held back and returned by the following call.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_open_closed();
        let u2 = self.rng.next_closed_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
