use crate::engine::SimConfig;
use crate::error::Result;
use crate::network::{IntensityCache, ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::{SeedSpec, StreamRole};

use super::frame::{classify_intensities, Firing};
use super::{prepare, CoupledTrajectory, PairRecorder};

/// Stacked coupling driven by one space-time Poisson point process.
///
/// Candidate points arrive at the summed band majorant
/// `sum_k max(sup_t lambda_k^{theta+eps}, sup_t lambda_k^theta)`; a candidate at
/// time `s` is placed in the layout of the actual intensities at `s` and
/// discarded when it falls above `q_K(s-)`. With constant rates the majorant
/// is the layout itself and nothing is discarded.
pub fn couple_stacked<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    seed: SeedSpec,
) -> Result<CoupledTrajectory<S>> {
    let setup = prepare(network, theta, eps, x0, config)?;
    let theta_p = &setup.theta_p;
    let time_dependent = network.is_time_dependent();
    let mut marks = seed.marks(StreamRole::Marks { leg: 0 });
    let mut cache_p = IntensityCache::new(network);
    let mut cache_n = IntensityCache::new(network);
    let mut sines = Vec::new();
    let mut rec = PairRecorder::new(x0, config);
    let mut t = S::zero();
    let mut level = S::zero();
    let mut dirty = true;
    cache_p.refresh(network, &rec.xp, theta_p);
    cache_n.refresh(network, &rec.xn, theta);

    loop {
        if dirty {
            level = cache_p
                .majorants()
                .iter()
                .zip(cache_n.majorants())
                .map(|(&a, &b)| a.max(b))
                .sum();
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
        let hit = if time_dependent {
            cache_p.sines_at(network, t, &mut sines);
            let a = cache_p.rates_with(network, theta_p, &sines);
            let b = cache_n.rates_with(network, theta, &sines);
            classify_intensities(a, b, v)
        } else {
            classify_intensities(cache_p.majorants(), cache_n.majorants(), v)
        };
        let Some((k, firing)) = hit else { continue };
        rec.apply(network, t, k, firing)?;
        if firing != Firing::NominalOnly {
            cache_p.update(network, k, &rec.xp, theta_p);
        }
        if firing != Firing::PerturbedOnly {
            cache_n.update(network, k, &rec.xn, theta);
        }
        dirty = true;
    }
    Ok(rec.finish())
}
