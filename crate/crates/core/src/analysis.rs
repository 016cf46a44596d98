//! Exit-time bounds and the closed-form laws they are checked against.
//!
//! Networks whose population-increasing reactions are first order leave the
//! ball `{||x||_1 < m}` before time `t` with probability at most `C delta^m`.
//! The constants come from comparing `||X(t)||_1` with a linear birth process
//! whose exit law is explicit.

use serde::Serialize;

use crate::engine::{simulate, Engine, Event, SimConfig, Trajectory, DEFAULT_MAX_EVENTS};
use crate::ensemble::run_paths;
use crate::error::{CrnError, Result};
use crate::growth::{compute_growth_profile, GrowthProfile};
use crate::network::{ParamBox, ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::stats::clopper_pearson_upper;
use crate::streams::{SeedSpec, StreamRole};

/// Largest number of rates accepted by [`hypoexponential_cdf`]; beyond it the
/// partial-fraction sum loses all accuracy to cancellation.
pub const MAX_HYPOEXPONENTIAL_RATES: usize = 12;

/// Confidence level of the one-sided upper bounds on exit probabilities.
pub const EXIT_CONFIDENCE: f64 = 0.99;

/// Constants of the geometric exit bound `P(tau_m <= t) <= prefactor * decay^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitBoundConstants<S> {
    pub prefactor: S,
    /// In `(0, 1)`.
    pub decay: S,
    /// `max(||x0||_1 + 1, max_gain)`, the time dilation of the comparison process.
    pub dilation: S,
    pub cbar: S,
    pub n_reactions: usize,
    pub t: S,
    pub x0_norm: u64,
    pub max_gain: u64,
}

impl<S: Real> ExitBoundConstants<S> {
    /// `prefactor * decay^m`.
    pub fn bound(&self, m: u64) -> S {
        self.prefactor * self.decay.powf(S::count(m))
    }
}

/// `1 - exp(-rate * t)` without cancellation for small arguments.
fn one_minus_exp<S: Real>(rate_times_t: S) -> S {
    -(-rate_times_t).exp_m1()
}

fn check_horizon<S: Real>(t: S) -> Result<()> {
    if !(t > S::zero() && t.is_finite()) {
        return Err(CrnError::Argument(format!("horizon must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Constants of the exit bound for a network with growth profile `profile`,
/// `n_reactions` reactions, horizon `t` and initial norm `x0_norm`.
pub fn exit_bound_constants<S: Real>(
    profile: &GrowthProfile<S>,
    n_reactions: usize,
    t: S,
    x0_norm: u64,
) -> Result<ExitBoundConstants<S>> {
    if profile.gain_set.is_empty() {
        return Err(CrnError::Unsupported(
            "no population-increasing reaction: the exit bound is vacuous".into(),
        ));
    }
    if let Some(reason) = profile.violation() {
        return Err(CrnError::Model(format!("exit bound needs linear growth: {reason}")));
    }
    check_horizon(t)?;
    let ell = S::count(profile.max_gain);
    let x0 = S::count(x0_norm);
    let dilation = (x0 + S::one()).max(ell);
    let q = one_minus_exp(dilation * t * profile.cbar * S::count(n_reactions as u64));
    Ok(ExitBoundConstants {
        prefactor: q.powf(-S::one() - x0 / ell),
        decay: q.powf(S::one() / ell),
        dilation,
        cbar: profile.cbar,
        n_reactions,
        t,
        x0_norm,
        max_gain: profile.max_gain,
    })
}

/// `(prefactor, decay)` bounding `P(tau_M <= t)` for `X = x0 + jump * Y(rate int X)`,
/// valid for `M >= jump + x0`; the time dilation is `max(x0, jump)`.
pub fn linear_birth_bound<S: Real>(rate: S, jump: u64, x0: u64, t: S) -> Result<(S, S)> {
    if !(rate > S::zero()) || jump == 0 || x0 == 0 {
        return Err(CrnError::Argument("linear birth bound needs rate > 0, jump >= 1, x0 >= 1".into()));
    }
    check_horizon(t)?;
    let ell = S::count(jump);
    let x = S::count(x0);
    let q = one_minus_exp(x.max(ell) * t * rate);
    Ok((q.powf(-S::one() - x / ell), q.powf(S::one() / ell)))
}

/// `(prefactor, decay)` bounding `P(tau_M <= t)` for `X = x0 + jump * Y(rate int (1 + X))`,
/// obtained from [`linear_birth_bound`] for `Z = X + 1` as `prefactor = C_Z * decay`.
pub fn affine_birth_bound<S: Real>(rate: S, jump: u64, x0: u64, t: S) -> Result<(S, S)> {
    let (c_shifted, decay) = linear_birth_bound(rate, jump, x0 + 1, t)?;
    Ok((c_shifted * decay, decay))
}

/// `P(tau_M <= t) = (1 - exp(-kappa t))^(M-1)` for the pure birth process
/// `X -> 2X` at rate `kappa X` from `X(0) = 1`.
pub fn pure_birth_exit_cdf<S: Real>(kappa: S, m: u64, t: S) -> Result<S> {
    if !(kappa > S::zero()) || !(t >= S::zero()) {
        return Err(CrnError::Argument(format!("need kappa > 0 and t >= 0, got {kappa}, {t}")));
    }
    if m <= 1 {
        return Ok(S::one());
    }
    Ok(one_minus_exp(kappa * t).powi((m - 1).min(i32::MAX as u64) as i32))
}

/// CDF at `t` of `sum_i E_i / rate_i` for independent unit exponentials `E_i`
/// and pairwise distinct rates, by partial fractions.
pub fn hypoexponential_cdf<S: Real>(rates: &[S], t: S) -> Result<S> {
    if rates.len() > MAX_HYPOEXPONENTIAL_RATES {
        return Err(CrnError::Argument(format!(
            "at most {MAX_HYPOEXPONENTIAL_RATES} rates supported, got {}",
            rates.len()
        )));
    }
    if rates.iter().any(|r| !(*r > S::zero() && r.is_finite())) {
        return Err(CrnError::Argument("rates must be positive and finite".into()));
    }
    if !(t >= S::zero()) {
        return Err(CrnError::Argument(format!("t must be nonnegative, got {t}")));
    }
    for (i, a) in rates.iter().enumerate() {
        if rates[i + 1..].contains(a) {
            return Err(CrnError::Argument(format!("duplicate rate {a}: partial fractions are singular")));
        }
    }
    if rates.is_empty() {
        return Ok(S::one());
    }
    let mut cdf = S::zero();
    for (i, &ri) in rates.iter().enumerate() {
        let weight = rates
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .fold(S::one(), |w, (_, &rj)| w * rj / (rj - ri));
        cdf = cdf + weight * one_minus_exp(ri * t);
    }
    Ok(cdf.max(S::zero()).min(S::one()))
}

/// Path of the dominating birth process on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthPath<S> {
    pub start: u64,
    /// Jump times, increasing.
    pub times: Vec<S>,
    /// Value right after each jump.
    pub values: Vec<u64>,
    pub t_end: S,
}

impl<S: Real> BirthPath<S> {
    pub fn final_value(&self) -> u64 {
        self.values.last().copied().unwrap_or(self.start)
    }

    /// First time the value reaches `m` or more.
    pub fn first_passage(&self, m: u64) -> Option<S> {
        if self.start >= m {
            return Some(S::zero());
        }
        self.values.iter().position(|&v| v >= m).map(|i| self.times[i])
    }
}

/// Comparison process `Z = z0 + jump * Y(rate int (offset + Z))` with `offset` 1
/// (dominating form) or 0 (pure linear birth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthProcess<S> {
    pub start: u64,
    pub jump: u64,
    /// `kappa`, the summed rate of the collapsed streams.
    pub rate: S,
    pub with_offset: bool,
}

impl<S: Real> BirthProcess<S> {
    /// Dominating process of a network: `rate = cbar * n_streams`, jump `max_gain`.
    pub fn dominating(x0_norm: u64, max_gain: u64, cbar: S, n_streams: usize) -> Result<Self> {
        if max_gain == 0 || !(cbar > S::zero()) || n_streams == 0 {
            return Err(CrnError::Argument("need jump >= 1, cbar > 0 and at least one stream".into()));
        }
        Ok(Self {
            start: x0_norm,
            jump: max_gain,
            rate: cbar * S::count(n_streams as u64),
            with_offset: true,
        })
    }

    /// Exact sample on `[0, t_end]`, optionally stopped once the value reaches `stop_at`.
    pub fn simulate(&self, t_end: S, stop_at: Option<u64>, max_events: u64, seed: SeedSpec) -> Result<BirthPath<S>> {
        check_horizon(t_end)?;
        let mut marks = seed.marks(StreamRole::Dominating);
        let offset = if self.with_offset { 1 } else { 0 };
        let mut path = BirthPath {
            start: self.start,
            times: Vec::new(),
            values: Vec::new(),
            t_end,
        };
        let mut z = self.start;
        let mut t = S::zero();
        while stop_at.is_none_or(|m| z < m) {
            let intensity = self.rate * S::count(z + offset);
            if !(intensity > S::zero()) {
                break;
            }
            let dt = marks.exponential::<S>() / intensity;
            if t + dt > t_end {
                break;
            }
            if path.times.len() as u64 >= max_events {
                return Err(CrnError::Truncated {
                    max_events,
                    time: t.to_f64_lossy(),
                    partial: Box::new(path.as_trajectory()),
                });
            }
            t = t + dt;
            z += self.jump;
            path.times.push(t);
            path.values.push(z);
        }
        Ok(path)
    }
}

impl<S: Real> BirthPath<S> {
    fn as_trajectory(&self) -> Trajectory<f64> {
        Trajectory {
            x0: vec![self.start],
            events: self
                .times
                .iter()
                .zip(&self.values)
                .map(|(t, v)| Event {
                    time: t.to_f64_lossy(),
                    reaction: 0,
                    state: vec![*v],
                })
                .collect(),
            final_state: vec![self.final_value()],
            n_events: self.times.len() as u64,
            first_event_time: self.times.first().map(|t| t.to_f64_lossy()),
            t_end: self.t_end.to_f64_lossy(),
            exit: None,
        }
    }
}

/// Empirical exit probability for one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitTimeSample {
    pub m: u64,
    pub t: f64,
    pub n_paths: u64,
    pub n_hit: u64,
    pub p_hat: f64,
    /// One-sided 99% Clopper-Pearson upper bound on `P(tau_m <= t)`.
    pub upper_conf: f64,
}

impl ExitTimeSample {
    pub fn from_counts(m: u64, t: f64, n_hit: u64, n_paths: u64) -> Result<Self> {
        Ok(Self {
            m,
            t,
            n_paths,
            n_hit,
            p_hat: n_hit as f64 / n_paths as f64,
            upper_conf: clopper_pearson_upper(n_hit, n_paths, EXIT_CONFIDENCE)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitExperiment {
    pub samples: Vec<ExitTimeSample>,
    pub constants: ExitBoundConstants<f64>,
    /// `prefactor * decay^m` for each radius.
    pub bound: Vec<f64>,
}

/// Exit frequencies of `||X(s)||_1 >= m` for `s <= t` over `n_paths` paths, one
/// trajectory per path serving every radius, next to the analytic bound.
#[allow(clippy::too_many_arguments)]
pub fn exit_time_experiment<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    m_grid: &[u64],
    t: S,
    n_paths: u64,
    master_seed: u64,
    max_events: Option<u64>,
) -> Result<ExitExperiment> {
    if m_grid.is_empty() || n_paths == 0 {
        return Err(CrnError::Argument("need a nonempty radius grid and at least one path".into()));
    }
    let profile = compute_growth_profile(network, &ParamBox::point(theta))?;
    if let Some(reason) = profile.violation() {
        return Err(CrnError::Model(format!("refusing exit-time experiment: {reason}")));
    }
    network.check_state(x0)?;
    let x0_norm: u64 = x0.iter().sum();
    let constants = exit_bound_constants(&profile, network.n_reactions(), t, x0_norm)?;
    let radius = *m_grid.iter().max().expect("nonempty grid");
    let config = SimConfig::new(t)
        .with_exit_radius(radius)
        .with_max_events(max_events.unwrap_or(DEFAULT_MAX_EVENTS));
    let engine = Engine::for_network(network);
    let hits: Vec<Vec<bool>> = run_paths(master_seed, 0, n_paths, |seed| {
        let path = simulate(engine, network, theta, x0, &config, seed)?;
        Ok(m_grid.iter().map(|&m| path.first_passage(m).is_some()).collect())
    })?;
    let samples = m_grid
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let n_hit = hits.iter().filter(|h| h[i]).count() as u64;
            ExitTimeSample::from_counts(m, t.to_f64_lossy(), n_hit, n_paths)
        })
        .collect::<Result<Vec<_>>>()?;
    let c64 = ExitBoundConstants {
        prefactor: constants.prefactor.to_f64_lossy(),
        decay: constants.decay.to_f64_lossy(),
        dilation: constants.dilation.to_f64_lossy(),
        cbar: constants.cbar.to_f64_lossy(),
        n_reactions: constants.n_reactions,
        t: constants.t.to_f64_lossy(),
        x0_norm: constants.x0_norm,
        max_gain: constants.max_gain,
    };
    Ok(ExitExperiment {
        bound: m_grid.iter().map(|&m| c64.bound(m)).collect(),
        samples,
        constants: c64,
    })
}

/// `(1 - (1 - x)^n, n x)`; the first never exceeds the second for `x` in `[0, 1]`.
pub fn power_gap(x: f64, n: u32) -> (f64, f64) {
    (1.0 - (1.0 - x).powi(n as i32), n as f64 * x)
}

/// Checks [`power_gap`] on `samples` pseudo-random pairs `x in [0, 1]`,
/// `n in 2..=max_n`; returns the violating pairs.
pub fn power_gap_battery(samples: usize, max_n: u32, seed: u64) -> Vec<(f64, u32)> {
    let mut marks = SeedSpec::new(seed, 0).marks(StreamRole::Dominating);
    let span = max_n.max(2) - 1;
    (0..samples)
        .map(|_| {
            let x: f64 = marks.uniform();
            let u: f64 = marks.uniform();
            (x, 2 + (u * span as f64) as u32)
        })
        .filter(|&(x, n)| {
            let (lhs, rhs) = power_gap(x, n);
            lhs > rhs
        })
        .collect()
}
