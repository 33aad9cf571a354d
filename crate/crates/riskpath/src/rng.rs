//! Deterministic stream derivation for reproducible sampling.
//!
//! Every random draw in this crate is addressed by a label
//! `(scope, context, index)` mixed with a master seed. The same label always
//! yields the same stream and distinct labels yield statistically independent
//! streams, so results never depend on evaluation order or thread schedule.

/// Identifies where in an experiment a stream is used.
///
/// Tags are disjoint by construction: estimation-time draws (source samples,
/// DP inner-loop draws, baseline rollouts) can never collide with the fresh
/// streams used for coverage evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamContext {
    /// Draws of initial inputs at the source vertex.
    Source,
    /// Edge draws inside the DP inner loop, keyed by the (target, incoming)
    /// bucket-index pair.
    DpCombo { abar: u32, aprime: u32 },
    /// End-to-end rollouts performed by the baseline, keyed by a path hash.
    BaselineRollout { path: u64 },
    /// Fresh end-to-end rollouts for coverage evaluation, keyed by a path hash.
    Coverage { path: u64 },
}

impl StreamContext {
    fn words(self) -> [u64; 3] {
        match self {
            StreamContext::Source => [1, 0, 0],
            StreamContext::DpCombo { abar, aprime } => [2, abar as u64, aprime as u64],
            StreamContext::BaselineRollout { path } => [3, path, 0],
            StreamContext::Coverage { path } => [4, path, 0],
        }
    }
}

/// FNV-1a over a byte string; used to turn edge ids and latent-group names
/// into stable 64-bit scopes.
pub fn label_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn absorb(state: u64, word: u64) -> u64 {
    mix(state.rotate_left(23) ^ word.wrapping_mul(GOLDEN))
}

/// Master seed plus the label-to-stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedDerivation {
    master: u64,
}

impl SeedDerivation {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(self) -> u64 {
        self.master
    }

    /// Derives the stream for `(scope, context, index)`.
    pub fn stream(self, scope: u64, context: StreamContext, index: u64) -> SplitMix64 {
        let [c0, c1, c2] = context.words();
        let mut s = mix(self.master ^ GOLDEN);
        s = absorb(s, scope);
        s = absorb(s, c0);
        s = absorb(s, c1);
        s = absorb(s, c2);
        s = absorb(s, index);
        SplitMix64::new(s)
    }
}

/// Counter-style generator used for all draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in the open interval (0, 1); safe to pass through
    /// logs and inverse CDFs.
    pub fn next_uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9007199254740992.0)
    }
}
