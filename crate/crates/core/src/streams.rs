//! Seeded randomness: unit-rate Poisson streams and space-time marks.
//!
//! Every stream of every path is keyed by `(master_seed, path_index, role)`,
//! packed directly into a ChaCha8 key. Streams are therefore independent of
//! the order in which paths are executed, and two couplings that use the same
//! role see bit-identical randomness.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1};

use crate::error::{CrnError, Result};
use crate::scalar::Real;

/// Seed of a single sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }

    pub fn rng(&self, role: StreamRole) -> ChaCha8Rng {
        let (kind, leg, index) = role.encode();
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.path_index.to_le_bytes());
        key[16..20].copy_from_slice(&kind.to_le_bytes());
        key[20..24].copy_from_slice(&leg.to_le_bytes());
        key[24..32].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    pub fn unit_poisson<S: Real>(&self, role: StreamRole) -> UnitPoissonStream<S> {
        UnitPoissonStream::new(self.rng(role))
    }

    pub fn marks(&self, role: StreamRole) -> MarkStream {
        MarkStream::new(self.rng(role))
    }
}

/// Which process of a path a stream drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    /// `Y_k` of the time-change representation, for leg `leg` of a path.
    Reaction { leg: u32, reaction: u32 },
    /// Space-time point process driving leg `leg` (or a stacked pair).
    Marks { leg: u32 },
    /// `Y_k^1`, `Y_k^2`, `Y_k^3` of the split coupling (`channel` in 1..=3).
    Split { reaction: u32, channel: u32 },
    /// Single stream of the dominating birth process.
    Dominating,
}

impl StreamRole {
    fn encode(self) -> (u32, u32, u64) {
        match self {
            StreamRole::Reaction { leg, reaction } => (1, leg, reaction as u64),
            StreamRole::Marks { leg } => (2, leg, 0),
            StreamRole::Split { reaction, channel } => (3, channel, reaction as u64),
            StreamRole::Dominating => (4, 0, 0),
        }
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unit exponential (ziggurat).
#[inline]
pub(crate) fn unit_exponential(rng: &mut ChaCha8Rng) -> f64 {
    Exp1.sample(rng)
}

/// A unit-rate Poisson process seen through its internal clock.
#[derive(Debug, Clone)]
pub struct UnitPoissonStream<S> {
    rng: ChaCha8Rng,
    internal_time: S,
    next_fire: S,
}

impl<S: Real> UnitPoissonStream<S> {
    pub fn new(mut rng: ChaCha8Rng) -> Self {
        let first = S::lit(unit_exponential(&mut rng));
        Self {
            rng,
            internal_time: S::zero(),
            next_fire: first,
        }
    }

    pub fn internal_time(&self) -> S {
        self.internal_time
    }

    pub fn next_fire(&self) -> S {
        self.next_fire
    }

    /// Returns the pending fire time and schedules the following one.
    pub fn advance_to_next_fire(&mut self) -> S {
        let fire = self.next_fire;
        self.next_fire = fire + S::lit(unit_exponential(&mut self.rng));
        fire
    }

    /// Real time until the next fire if the clock runs at `rate`; infinite for rate zero.
    #[inline]
    pub fn wait(&self, rate: S) -> S {
        if rate > S::zero() {
            (self.next_fire - self.internal_time) / rate
        } else {
            S::infinity()
        }
    }

    /// Advances the internal clock by `rate * dt`, never past the pending fire.
    #[inline]
    pub fn run(&mut self, rate: S, dt: S) {
        self.internal_time = (self.internal_time + rate * dt).min(self.next_fire);
    }

    /// Lands the internal clock on the pending fire and draws the next one.
    #[inline]
    pub fn fire(&mut self) {
        self.internal_time = self.advance_to_next_fire();
    }
}

/// Source of the points of a unit-rate space-time Poisson process.
#[derive(Debug, Clone)]
pub struct MarkStream {
    rng: ChaCha8Rng,
}

impl MarkStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }

    pub fn uniform<S: Real>(&mut self) -> S {
        S::lit(uniform01(&mut self.rng))
    }

    pub fn exponential<S: Real>(&mut self) -> S {
        S::lit(unit_exponential(&mut self.rng))
    }

    /// Holding time until the next point below level `total_rate` and its
    /// relative height `u`; the point sits at level `u * total_rate`.
    pub fn next_event<S: Real>(&mut self, total_rate: S) -> Result<(S, S)> {
        if !(total_rate > S::zero()) {
            return Err(CrnError::Argument(format!(
                "total rate must be positive, got {total_rate}"
            )));
        }
        let e = self.exponential::<S>();
        let u = self.uniform::<S>();
        Ok((e / total_rate, u))
    }
}
