//! Joint simulation of `(X^{theta+eps}, X^theta)` from a shared source of randomness.
//!
//! Four constructions are available:
//!
//! * [`CouplingMethod::Independent`]: two unrelated paths.
//! * [`CouplingMethod::CommonReactionPath`]: both legs read the same unit-rate
//!   stream `Y_k` for each reaction, each at its own internal time.
//! * [`CouplingMethod::Split`]: each reaction is split into a shared channel
//!   at rate `min(lambda^{theta+eps}, lambda^theta)` and two residual channels.
//! * [`CouplingMethod::Stacked`]: one space-time point process with per-reaction
//!   bands of width `max(lambda^{theta+eps}, lambda^theta)`; the only method that
//!   supports periodic rates.
//!
//! Every coupled path records the number of points of the driving process
//! that hit a band (`n_events`) and the ordinal of the first such point after
//! which the two states differ (`decouple_index`).

mod crp;
pub mod frame;
mod independent;
mod split;
mod stacked;

use std::fmt;
use std::str::FromStr;

use crate::engine::{check_inputs, Recorder, SimConfig, Trajectory};
use crate::error::{CrnError, Result};
use crate::network::{ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::SeedSpec;

pub use frame::{Band, Firing, Side, StackedFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMethod {
    Independent,
    #[serde(rename = "crp")]
    CommonReactionPath,
    Split,
    Stacked,
}

impl CouplingMethod {
    pub const ALL: [CouplingMethod; 4] = [
        CouplingMethod::Independent,
        CouplingMethod::CommonReactionPath,
        CouplingMethod::Split,
        CouplingMethod::Stacked,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingMethod::Independent => "independent",
            CouplingMethod::CommonReactionPath => "crp",
            CouplingMethod::Split => "split",
            CouplingMethod::Stacked => "stacked",
        }
    }

    pub fn supports_time_dependence(self) -> bool {
        matches!(self, CouplingMethod::Stacked | CouplingMethod::Independent)
    }
}

impl fmt::Display for CouplingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CouplingMethod {
    type Err = CrnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(CouplingMethod::Independent),
            "crp" | "common-reaction-path" => Ok(CouplingMethod::CommonReactionPath),
            "split" | "cfd" => Ok(CouplingMethod::Split),
            "stacked" => Ok(CouplingMethod::Stacked),
            other => Err(CrnError::Argument(format!("unknown coupling method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory<S> {
    /// `X^{theta+eps}`.
    pub perturbed: Trajectory<S>,
    /// `X^theta`.
    pub nominal: Trajectory<S>,
    /// Points of the driving process that moved at least one leg.
    pub n_events: u64,
    /// One-based ordinal of the first event after which the legs differ; `None` if they never did.
    pub decouple_index: Option<u64>,
    pub decouple_time: Option<S>,
}

/// Both legs plus the joint bookkeeping.
pub(crate) struct PairRecorder<'a, S> {
    pub(crate) xp: Vec<u64>,
    pub(crate) xn: Vec<u64>,
    perturbed: Recorder<S>,
    nominal: Recorder<S>,
    n_events: u64,
    decouple_index: Option<u64>,
    decouple_time: Option<S>,
    config: &'a SimConfig<S>,
}

impl<'a, S: Real> PairRecorder<'a, S> {
    pub(crate) fn new(x0: &[u64], config: &'a SimConfig<S>) -> Self {
        Self {
            xp: x0.to_vec(),
            xn: x0.to_vec(),
            perturbed: Recorder::new(x0, config),
            nominal: Recorder::new(x0, config),
            n_events: 0,
            decouple_index: None,
            decouple_time: None,
            config,
        }
    }

    /// Applies one point of the driving process: reaction `k` moves the legs selected by `firing`.
    #[inline]
    pub(crate) fn apply(&mut self, network: &ReactionNetwork<S>, t: S, k: usize, firing: Firing) -> Result<()> {
        let p = (firing != Firing::NominalOnly).then_some(k);
        let n = (firing != Firing::PerturbedOnly).then_some(k);
        self.jump(network, t, p, n)
    }

    /// One joint event at `t` in which each leg fires its own reaction, if any.
    #[inline]
    pub(crate) fn jump(
        &mut self,
        network: &ReactionNetwork<S>,
        t: S,
        perturbed: Option<usize>,
        nominal: Option<usize>,
    ) -> Result<()> {
        if self.n_events >= self.config.max_events {
            return Err(CrnError::CoupledTruncated {
                max_events: self.config.max_events,
                time: t.to_f64_lossy(),
                perturbed_state: self.xp.clone(),
                nominal_state: self.xn.clone(),
            });
        }
        self.n_events += 1;
        if let Some(k) = perturbed {
            network.fire(k, &mut self.xp);
            self.perturbed.record(t, k, &self.xp);
        }
        if let Some(k) = nominal {
            network.fire(k, &mut self.xn);
            self.nominal.record(t, k, &self.xn);
        }
        if self.decouple_index.is_none() && self.xp != self.xn {
            self.decouple_index = Some(self.n_events);
            self.decouple_time = Some(t);
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> CoupledTrajectory<S> {
        CoupledTrajectory {
            perturbed: self.perturbed.finish(&self.xp),
            nominal: self.nominal.finish(&self.xn),
            n_events: self.n_events,
            decouple_index: self.decouple_index,
            decouple_time: self.decouple_time,
        }
    }
}

/// Validated inputs shared by the couplings.
pub(crate) struct PairSetup<S> {
    pub(crate) theta_p: ParamPoint<S>,
}

pub(crate) fn prepare<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
) -> Result<PairSetup<S>> {
    let theta_p = theta.perturbed(eps)?;
    check_inputs(network, theta, x0, config)?;
    network.check_params(&theta_p)?;
    Ok(PairSetup { theta_p })
}

/// The stacked layout for the current pair of states at time `t`.
pub fn build_stacked_frame<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x_perturbed: &[u64],
    x_nominal: &[u64],
    t: S,
) -> Result<StackedFrame<S>> {
    let theta_p = theta.perturbed(eps)?;
    network.check_params(theta)?;
    network.check_params(&theta_p)?;
    network.check_state(x_perturbed)?;
    network.check_state(x_nominal)?;
    let n = network.n_reactions();
    let (mut a, mut b) = (vec![S::zero(); n], vec![S::zero(); n]);
    network.intensities_into(x_perturbed, t, &theta_p, &mut a);
    network.intensities_into(x_nominal, t, theta, &mut b);
    Ok(StackedFrame::from_intensities(&a, &b))
}

/// Simulates one coupled pair with the chosen construction.
pub fn couple<S: Real>(
    method: CouplingMethod,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<CoupledTrajectory<S>> {
    match method {
        CouplingMethod::Independent => couple_independent(network, theta, eps, x0, config, seed),
        CouplingMethod::CommonReactionPath => couple_crp(network, theta, eps, x0, config, seed),
        CouplingMethod::Split => couple_split(network, theta, eps, x0, config, seed),
        CouplingMethod::Stacked => couple_stacked(network, theta, eps, x0, config, seed),
    }
}

pub use crp::couple_crp;
pub use independent::couple_independent;
pub use split::couple_split;
pub use stacked::couple_stacked;

pub(crate) fn require_time_independent<S: Real>(network: &ReactionNetwork<S>, method: CouplingMethod) -> Result<()> {
    if network.is_time_dependent() {
        return Err(CrnError::Unsupported(format!(
            "the {method} coupling needs time-independent rates; use the stacked coupling"
        )));
    }
    Ok(())
}
