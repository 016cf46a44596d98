use crate::engine::{ppp_leg, rtc_leg, SimConfig};
use crate::error::Result;
use crate::network::{ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::SeedSpec;

use super::{prepare, CoupledTrajectory};

/// Two unrelated paths on disjoint streams.
///
/// The legs jump at distinct times almost surely, so they differ from the
/// first jump of either one onwards; `n_events` is the combined jump count.
pub fn couple_independent<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<CoupledTrajectory<S>> {
    let setup = prepare(network, theta, eps, x0, config)?;
    let leg = if network.is_time_dependent() { ppp_leg } else { rtc_leg };
    let perturbed = leg(network, &setup.theta_p, x0, config, seed, 1, false)?;
    let nominal = leg(network, theta, x0, config, seed, 2, false)?;
    let decouple_time = match (perturbed.first_event_time, nominal.first_event_time) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(CoupledTrajectory {
        n_events: perturbed.n_events + nominal.n_events,
        decouple_index: decouple_time.map(|_| 1),
        decouple_time,
        perturbed,
        nominal,
    })
}
