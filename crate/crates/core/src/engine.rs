//! Exact single-path samplers.
//!
//! [`simulate_rtc`] is a next-reaction scheme on the random time change
//! representation: reaction `k` owns a unit-rate Poisson stream whose internal
//! clock runs at speed `lambda_k(X(s))`, and the reaction whose clock reaches
//! its pending fire first jumps. [`simulate_ppp`] drives the process with a
//! space-time Poisson point process and thins candidate points proposed at the
//! rate-coefficient majorant, so it also handles periodic rates.

use crate::error::{CrnError, Result};
use crate::network::{IntensityCache, ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::{SeedSpec, StreamRole};

pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;

/// What a trajectory keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordMode {
    /// Every event with the state after it.
    #[default]
    Full,
    /// Only the terminal state, event counts and exit information.
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<S> {
    pub t_end: S,
    pub max_events: u64,
    /// Stop once `||X(t)||_1 >= m`.
    pub exit_radius: Option<u64>,
    pub record: RecordMode,
}

impl<S: Real> SimConfig<S> {
    pub fn new(t_end: S) -> Self {
        Self {
            t_end,
            max_events: DEFAULT_MAX_EVENTS,
            exit_radius: None,
            record: RecordMode::Full,
        }
    }

    pub fn with_exit_radius(mut self, m: u64) -> Self {
        self.exit_radius = Some(m);
        self
    }

    pub fn with_max_events(mut self, n: u64) -> Self {
        self.max_events = n;
        self
    }

    pub fn summary(mut self) -> Self {
        self.record = RecordMode::Summary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > S::zero()) || !self.t_end.is_finite() {
            return Err(CrnError::Argument(format!("t_end must be positive and finite, got {}", self.t_end)));
        }
        if self.max_events == 0 {
            return Err(CrnError::Argument("max_events must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<S> {
    pub time: S,
    /// Zero-based reaction index.
    pub reaction: usize,
    pub state: Vec<u64>,
}

/// First time the state reached the exit radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitFlag<S> {
    pub radius: u64,
    pub time: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub x0: Vec<u64>,
    /// Empty in summary mode.
    pub events: Vec<Event<S>>,
    pub final_state: Vec<u64>,
    pub n_events: u64,
    pub first_event_time: Option<S>,
    pub t_end: S,
    pub exit: Option<ExitFlag<S>>,
}

impl<S: Real> Trajectory<S> {
    /// State at time `t` (right-continuous). Needs a full event log.
    pub fn state_at(&self, t: S) -> &[u64] {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            &self.x0
        } else {
            &self.events[idx - 1].state
        }
    }

    /// First time `||X||_1 >= m`, read from the event log.
    pub fn first_passage(&self, m: u64) -> Option<S> {
        if norm1(&self.x0) >= m {
            return Some(S::zero());
        }
        self.events.iter().find(|e| norm1(&e.state) >= m).map(|e| e.time)
    }

    pub fn to_f64(&self) -> Trajectory<f64> {
        Trajectory {
            x0: self.x0.clone(),
            events: self
                .events
                .iter()
                .map(|e| Event {
                    time: e.time.to_f64_lossy(),
                    reaction: e.reaction,
                    state: e.state.clone(),
                })
                .collect(),
            final_state: self.final_state.clone(),
            n_events: self.n_events,
            first_event_time: self.first_event_time.map(Real::to_f64_lossy),
            t_end: self.t_end.to_f64_lossy(),
            exit: self.exit.map(|e| ExitFlag {
                radius: e.radius,
                time: e.time.to_f64_lossy(),
            }),
        }
    }
}

#[inline]
pub(crate) fn norm1(x: &[u64]) -> u64 {
    x.iter().sum()
}

/// Incrementally assembles a [`Trajectory`].
#[derive(Debug)]
pub(crate) struct Recorder<S> {
    traj: Trajectory<S>,
    full: bool,
    exit_radius: Option<u64>,
}

impl<S: Real> Recorder<S> {
    pub(crate) fn new(x0: &[u64], config: &SimConfig<S>) -> Self {
        let mut rec = Self {
            traj: Trajectory {
                x0: x0.to_vec(),
                events: Vec::new(),
                final_state: x0.to_vec(),
                n_events: 0,
                first_event_time: None,
                t_end: config.t_end,
                exit: None,
            },
            full: config.record == RecordMode::Full,
            exit_radius: config.exit_radius,
        };
        rec.check_exit(x0, S::zero());
        rec
    }

    fn check_exit(&mut self, x: &[u64], t: S) {
        if let (None, Some(m)) = (self.traj.exit, self.exit_radius) {
            if norm1(x) >= m {
                self.traj.exit = Some(ExitFlag { radius: m, time: t });
            }
        }
    }

    pub(crate) fn exited(&self) -> bool {
        self.traj.exit.is_some()
    }

    pub(crate) fn n_events(&self) -> u64 {
        self.traj.n_events
    }

    /// Logs a jump of reaction `k` at `t` that led to `x`.
    #[inline]
    pub(crate) fn record(&mut self, t: S, k: usize, x: &[u64]) {
        self.traj.n_events += 1;
        if self.traj.first_event_time.is_none() {
            self.traj.first_event_time = Some(t);
        }
        if self.full {
            self.traj.events.push(Event {
                time: t,
                reaction: k,
                state: x.to_vec(),
            });
        }
        self.check_exit(x, t);
    }

    pub(crate) fn finish(mut self, x: &[u64]) -> Trajectory<S> {
        self.traj.final_state = x.to_vec();
        self.traj
    }
}

pub(crate) fn check_inputs<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
) -> Result<()> {
    network.check_params(theta)?;
    network.check_state(x0)?;
    config.validate()
}

fn truncated<S: Real>(config: &SimConfig<S>, t: S, rec: Recorder<S>, x: &[u64]) -> CrnError {
    CrnError::Truncated {
        max_events: config.max_events,
        time: t.to_f64_lossy(),
        partial: Box::new(rec.finish(x).to_f64()),
    }
}

/// Exact sample via the random time change representation.
pub fn simulate_rtc<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<Trajectory<S>> {
    rtc_leg(network, theta, x0, config, seed, 0, true)
}

pub(crate) fn rtc_leg<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
    leg: u32,
    stop_on_exit: bool,
) -> Result<Trajectory<S>> {
    check_inputs(network, theta, x0, config)?;
    if network.is_time_dependent() {
        return Err(CrnError::Unsupported(
            "time-dependent rates need the point-process engine".into(),
        ));
    }
    let n = network.n_reactions();
    let mut streams: Vec<_> = (0..n)
        .map(|k| seed.unit_poisson::<S>(StreamRole::Reaction { leg, reaction: k as u32 }))
        .collect();
    let mut rates = vec![S::zero(); n];
    let mut x = x0.to_vec();
    let mut t = S::zero();
    let mut rec = Recorder::new(x0, config);

    while !(stop_on_exit && rec.exited()) {
        network.intensities_into(&x, t, theta, &mut rates);
        let mut next = None;
        let mut dt = S::infinity();
        for (k, (s, &r)) in streams.iter().zip(&rates).enumerate() {
            let w = s.wait(r);
            if w < dt {
                dt = w;
                next = Some(k);
            }
        }
        let Some(mu) = next else { break };
        if t + dt > config.t_end {
            break;
        }
        if rec.n_events() >= config.max_events {
            return Err(truncated(config, t, rec, &x));
        }
        t = t + dt;
        for (k, (s, &r)) in streams.iter_mut().zip(&rates).enumerate() {
            if k == mu {
                s.fire();
            } else {
                s.run(r, dt);
            }
        }
        network.fire(mu, &mut x);
        rec.record(t, mu, &x);
    }
    Ok(rec.finish(&x))
}

/// Exact sample via the space-time point process, thinned against the rate majorant.
pub fn simulate_ppp<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<Trajectory<S>> {
    ppp_leg(network, theta, x0, config, seed, 0, true)
}

pub(crate) fn ppp_leg<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
    leg: u32,
    stop_on_exit: bool,
) -> Result<Trajectory<S>> {
    check_inputs(network, theta, x0, config)?;
    let time_dependent = network.is_time_dependent();
    let mut marks = seed.marks(StreamRole::Marks { leg });
    let mut cache = IntensityCache::new(network);
    let mut sines = Vec::new();
    let mut x = x0.to_vec();
    let mut t = S::zero();
    let mut rec = Recorder::new(x0, config);
    let mut dirty = true;
    let mut level = S::zero();
    cache.refresh(network, &x, theta);

    while !(stop_on_exit && rec.exited()) {
        if dirty {
            level = cache.majorants().iter().copied().sum();
            dirty = false;
        }
        if !(level > S::zero()) {
            break;
        }
        let (dt, u) = marks.next_event(level)?;
        if t + dt > config.t_end {
            break;
        }
        t = t + dt;
        let v = u * level;
        let layout = if time_dependent {
            cache.sines_at(network, t, &mut sines);
            cache.rates_with(network, theta, &sines)
        } else {
            cache.majorants()
        };
        let mut lo = S::zero();
        let mut hit = None;
        for (k, &r) in layout.iter().enumerate() {
            let hi = lo + r;
            if v < hi {
                hit = Some(k);
                break;
            }
            lo = hi;
        }
        let Some(k) = hit else { continue };
        if rec.n_events() >= config.max_events {
            return Err(truncated(config, t, rec, &x));
        }
        network.fire(k, &mut x);
        cache.update(network, k, &x, theta);
        rec.record(t, k, &x);
        dirty = true;
    }
    Ok(rec.finish(&x))
}

/// Which single-path representation to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Rtc,
    Ppp,
}

impl Engine {
    /// The time-change engine when rates are constant, the point-process engine otherwise.
    pub fn for_network<S: Real>(network: &ReactionNetwork<S>) -> Self {
        if network.is_time_dependent() {
            Engine::Ppp
        } else {
            Engine::Rtc
        }
    }
}

pub fn simulate<S: Real>(
    engine: Engine,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<Trajectory<S>> {
    match engine {
        Engine::Rtc => simulate_rtc(network, theta, x0, config, seed),
        Engine::Ppp => simulate_ppp(network, theta, x0, config, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Coef, Complex, RateLaw, Reaction};

    fn one_species(reactions: Vec<(u64, u64, RateLaw<f64>)>, n_params: usize) -> ReactionNetwork<f64> {
        let rs = reactions
            .into_iter()
            .map(|(s, p, law)| Reaction::new(Complex::new(vec![s]), Complex::new(vec![p]), law).unwrap())
            .collect();
        ReactionNetwork::new(vec!["X".into()], rs, n_params).unwrap()
    }

    fn theta(v: &[f64]) -> ParamPoint<f64> {
        ParamPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn absorbing_start_has_no_events() {
        let net = one_species(vec![(1, 0, RateLaw::MassAction { param: 0 })], 1);
        for engine in [Engine::Rtc, Engine::Ppp] {
            let tr = simulate(engine, &net, &theta(&[1.0]), &[0], &SimConfig::new(5.0), SeedSpec::new(1, 0)).unwrap();
            assert!(tr.events.is_empty());
            assert_eq!(tr.final_state, vec![0]);
        }
    }

    #[test]
    fn pure_birth_skeleton() {
        let net = one_species(vec![(1, 2, RateLaw::MassAction { param: 0 })], 1);
        let tr = simulate_rtc(&net, &theta(&[1.0]), &[1], &SimConfig::new(3.0), SeedSpec::new(7, 0)).unwrap();
        assert!(!tr.events.is_empty());
        for (n, e) in tr.events.iter().enumerate() {
            assert_eq!(e.state, vec![n as u64 + 2]);
        }
    }

    #[test]
    fn event_times_increase_and_states_chain() {
        let net = one_species(
            vec![(0, 1, RateLaw::MassAction { param: 0 }), (1, 0, RateLaw::MassAction { param: 1 })],
            2,
        );
        for engine in [Engine::Rtc, Engine::Ppp] {
            let tr = simulate(engine, &net, &theta(&[10.0, 1.0]), &[0], &SimConfig::new(2.0), SeedSpec::new(3, 5)).unwrap();
            let mut prev_t = 0.0;
            let mut prev = tr.x0.clone();
            for e in &tr.events {
                assert!(e.time > prev_t && e.time <= 2.0);
                let z = net.reactions()[e.reaction].reaction_vector()[0];
                assert_eq!(e.state[0] as i64, prev[0] as i64 + z);
                prev_t = e.time;
                prev = e.state.clone();
            }
            assert_eq!(prev, tr.final_state);
            assert_eq!(tr.n_events as usize, tr.events.len());
        }
    }

    #[test]
    fn replay_is_bit_exact_and_summary_agrees() {
        let net = one_species(
            vec![(0, 1, RateLaw::MassAction { param: 0 }), (2, 0, RateLaw::MassAction { param: 1 })],
            2,
        );
        let cfg = SimConfig::new(4.0);
        for engine in [Engine::Rtc, Engine::Ppp] {
            let a = simulate(engine, &net, &theta(&[5.0, 0.1]), &[2], &cfg, SeedSpec::new(11, 2)).unwrap();
            let b = simulate(engine, &net, &theta(&[5.0, 0.1]), &[2], &cfg, SeedSpec::new(11, 2)).unwrap();
            assert_eq!(a, b);
            let s = simulate(engine, &net, &theta(&[5.0, 0.1]), &[2], &cfg.clone().summary(), SeedSpec::new(11, 2)).unwrap();
            assert!(s.events.is_empty());
            assert_eq!(s.final_state, a.final_state);
            assert_eq!(s.n_events, a.n_events);
        }
    }

    #[test]
    fn exit_flag_marks_first_crossing() {
        let net = one_species(vec![(1, 2, RateLaw::MassAction { param: 0 })], 1);
        let cfg = SimConfig::new(10.0).with_exit_radius(6);
        let tr = simulate_rtc(&net, &theta(&[1.0]), &[1], &cfg, SeedSpec::new(2, 0)).unwrap();
        let exit = tr.exit.expect("pure birth leaves radius 6 by t = 10 with this seed");
        assert_eq!(exit.radius, 6);
        assert_eq!(tr.final_state, vec![6]);
        let last = tr.events.last().unwrap();
        assert_eq!(last.time, exit.time);
        assert!(tr.events[..tr.events.len() - 1].iter().all(|e| e.state[0] < 6));
        assert_eq!(tr.first_passage(6), Some(exit.time));
    }

    #[test]
    fn start_outside_radius_exits_at_zero() {
        let net = one_species(vec![(1, 2, RateLaw::MassAction { param: 0 })], 1);
        let tr = simulate_ppp(&net, &theta(&[1.0]), &[4], &SimConfig::new(1.0).with_exit_radius(3), SeedSpec::new(0, 0)).unwrap();
        assert_eq!(tr.exit, Some(ExitFlag { radius: 3, time: 0.0 }));
        assert!(tr.events.is_empty());
    }

    #[test]
    fn explosive_model_is_truncated() {
        let net = one_species(vec![(2, 3, RateLaw::MassAction { param: 0 })], 1);
        let cfg = SimConfig::new(100.0).with_max_events(500);
        match simulate_rtc(&net, &theta(&[1.0]), &[2], &cfg, SeedSpec::new(0, 0)) {
            Err(CrnError::Truncated { max_events, partial, .. }) => {
                assert_eq!(max_events, 500);
                assert_eq!(partial.n_events, 500);
                assert_eq!(partial.final_state, vec![502]);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn rtc_rejects_periodic_rates() {
        let net = one_species(
            vec![(0, 1, RateLaw::Periodic { base: Coef::Const(2.0), amplitude: Coef::Const(1.0), period: 1.0, phase: 0.0 })],
            0,
        );
        let p = ParamPoint::new(vec![]).unwrap();
        assert!(matches!(
            simulate_rtc(&net, &p, &[0], &SimConfig::new(1.0), SeedSpec::new(0, 0)),
            Err(CrnError::Unsupported(_))
        ));
        assert!(simulate_ppp(&net, &p, &[0], &SimConfig::new(1.0), SeedSpec::new(0, 0)).is_ok());
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let net = one_species(vec![(1, 2, RateLaw::MassAction { param: 0 })], 1);
        let tr = simulate_rtc(&net, &theta(&[1.0]), &[1], &SimConfig::new(2.0), SeedSpec::new(4, 0)).unwrap();
        assert_eq!(tr.state_at(0.0), &[1]);
        let e = &tr.events[0];
        assert_eq!(tr.state_at(e.time), &e.state[..]);
    }
}
