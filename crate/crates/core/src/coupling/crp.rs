use std::collections::VecDeque;

use crate::engine::SimConfig;
use crate::error::Result;
use crate::network::{ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::{SeedSpec, StreamRole, UnitPoissonStream};

use super::{prepare, require_time_independent, CoupledTrajectory, CouplingMethod, PairRecorder};

/// Fire times of one shared stream `Y_k`, kept from the slower leg onwards.
struct SharedFires<S> {
    stream: UnitPoissonStream<S>,
    buffer: VecDeque<S>,
    /// Ordinal of `buffer[0]`.
    base: u64,
}

impl<S: Real> SharedFires<S> {
    fn new(stream: UnitPoissonStream<S>) -> Self {
        Self {
            stream,
            buffer: VecDeque::new(),
            base: 0,
        }
    }

    /// The `n`-th fire time (zero based).
    fn get(&mut self, n: u64) -> S {
        while self.base + self.buffer.len() as u64 <= n {
            let f = self.stream.advance_to_next_fire();
            self.buffer.push_back(f);
        }
        self.buffer[(n - self.base) as usize]
    }

    fn release_before(&mut self, n: u64) {
        while self.base < n && !self.buffer.is_empty() {
            self.buffer.pop_front();
            self.base += 1;
        }
    }
}

/// Internal clock of one leg on one shared stream.
#[derive(Clone, Copy)]
struct LegClock<S> {
    internal: S,
    next_fire: S,
    consumed: u64,
}

impl<S: Real> LegClock<S> {
    #[inline]
    fn wait(&self, rate: S) -> S {
        if rate > S::zero() {
            (self.next_fire - self.internal) / rate
        } else {
            S::infinity()
        }
    }
}

fn earliest<S: Real>(clocks: &[LegClock<S>], rates: &[S]) -> (Option<usize>, S) {
    let mut next = None;
    let mut dt = S::infinity();
    for (k, (c, &r)) in clocks.iter().zip(rates).enumerate() {
        let w = c.wait(r);
        if w < dt {
            dt = w;
            next = Some(k);
        }
    }
    (next, dt)
}

/// Common reaction path coupling: both legs consume the same unit-rate stream
/// `Y_k` for each reaction, each at its own integrated intensity.
pub fn couple_crp<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<CoupledTrajectory<S>> {
    let setup = prepare(network, theta, eps, x0, config)?;
    require_time_independent(network, CouplingMethod::CommonReactionPath)?;
    let theta_p = &setup.theta_p;
    let n = network.n_reactions();
    let mut fires: Vec<SharedFires<S>> = (0..n)
        .map(|k| {
            SharedFires::new(seed.unit_poisson(StreamRole::Reaction {
                leg: 0,
                reaction: k as u32,
            }))
        })
        .collect();
    let start = |f: &mut SharedFires<S>| LegClock {
        internal: S::zero(),
        next_fire: f.get(0),
        consumed: 0,
    };
    let mut clock_p: Vec<LegClock<S>> = fires.iter_mut().map(start).collect();
    let mut clock_n = clock_p.clone();
    let (mut a, mut b) = (vec![S::zero(); n], vec![S::zero(); n]);
    let mut rec = PairRecorder::new(x0, config);
    let mut t = S::zero();

    loop {
        network.intensities_into(&rec.xp, t, theta_p, &mut a);
        network.intensities_into(&rec.xn, t, theta, &mut b);
        let (kp, dtp) = earliest(&clock_p, &a);
        let (kn, dtn) = earliest(&clock_n, &b);
        let dt = dtp.min(dtn);
        if !dt.is_finite() || t + dt > config.t_end {
            break;
        }
        t = t + dt;
        let fire_p = if dtp == dt { kp } else { None };
        let fire_n = if dtn == dt { kn } else { None };
        for (clocks, rates, fired) in [(&mut clock_p, &a, fire_p), (&mut clock_n, &b, fire_n)] {
            for (k, (c, &r)) in clocks.iter_mut().zip(rates.iter()).enumerate() {
                if Some(k) == fired {
                    c.internal = c.next_fire;
                    c.consumed += 1;
                    c.next_fire = fires[k].get(c.consumed);
                } else {
                    c.internal = (c.internal + r * dt).min(c.next_fire);
                }
            }
        }
        for k in [fire_p, fire_n].into_iter().flatten() {
            fires[k].release_before(clock_p[k].consumed.min(clock_n[k].consumed));
        }
        rec.jump(network, t, fire_p, fire_n)?;
    }
    Ok(rec.finish())
}
