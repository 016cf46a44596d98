use crate::engine::SimConfig;
use crate::error::Result;
use crate::network::{ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::{SeedSpec, StreamRole, UnitPoissonStream};

use super::{prepare, require_time_independent, CoupledTrajectory, CouplingMethod, Firing, PairRecorder};

/// Split (coupled finite difference) coupling on `3K` unit-rate streams.
///
/// Channel 1 of reaction `k` runs at `min(lambda_k^{theta+eps}, lambda_k^theta)` and
/// moves both legs; channels 2 and 3 carry the residuals of the perturbed and
/// nominal legs. Simulated with a next-reaction scheme over all channels.
pub fn couple_split<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<CoupledTrajectory<S>> {
    let setup = prepare(network, theta, eps, x0, config)?;
    require_time_independent(network, CouplingMethod::Split)?;
    let theta_p = &setup.theta_p;
    let n = network.n_reactions();
    let mut streams: Vec<UnitPoissonStream<S>> = (0..n)
        .flat_map(|k| {
            (1..=3).map(move |channel| {
                seed.unit_poisson(StreamRole::Split {
                    reaction: k as u32,
                    channel,
                })
            })
        })
        .collect();
    let (mut a, mut b) = (vec![S::zero(); n], vec![S::zero(); n]);
    let mut rates = vec![S::zero(); 3 * n];
    let mut rec = PairRecorder::new(x0, config);
    let mut t = S::zero();

    loop {
        network.intensities_into(&rec.xp, t, theta_p, &mut a);
        network.intensities_into(&rec.xn, t, theta, &mut b);
        for k in 0..n {
            let shared = a[k].min(b[k]);
            rates[3 * k] = shared;
            rates[3 * k + 1] = a[k] - shared;
            rates[3 * k + 2] = b[k] - shared;
        }
        let mut next = None;
        let mut dt = S::infinity();
        for (j, (s, &r)) in streams.iter().zip(&rates).enumerate() {
            let w = s.wait(r);
            if w < dt {
                dt = w;
                next = Some(j);
            }
        }
        let Some(mu) = next else { break };
        if t + dt > config.t_end {
            break;
        }
        t = t + dt;
        for (j, (s, &r)) in streams.iter_mut().zip(&rates).enumerate() {
            if j == mu {
                s.fire();
            } else {
                s.run(r, dt);
            }
        }
        let firing = match mu % 3 {
            0 => Firing::Both,
            1 => Firing::PerturbedOnly,
            _ => Firing::NominalOnly,
        };
        rec.apply(network, t, mu / 3, firing)?;
    }
    Ok(rec.finish())
}
