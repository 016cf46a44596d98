//! Parallel ensembles over path indices.
//!
//! Path `i` draws all of its randomness from `SeedSpec { master_seed, i }`, and
//! results are returned in index order, so output never depends on the number
//! of worker threads or on scheduling.

use rayon::prelude::*;

use crate::coupling::{couple, CoupledTrajectory, CouplingMethod};
use crate::engine::{simulate, Engine, SimConfig, Trajectory};
use crate::error::Result;
use crate::network::{ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::streams::SeedSpec;

/// Maps `job` over paths `first..first + n` in parallel. On failure the error
/// of the lowest failing path index is returned.
pub fn run_paths<T, F>(master_seed: u64, first: u64, n: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedSpec) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = (first..first + n)
        .into_par_iter()
        .map(|i| job(SeedSpec::new(master_seed, i)))
        .collect();
    results.into_iter().collect()
}

pub fn simulate_ensemble<S: Real>(
    engine: Engine,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    config: &SimConfig<S>,
    master_seed: u64,
    n_paths: u64,
) -> Result<Vec<Trajectory<S>>> {
    run_paths(master_seed, 0, n_paths, |seed| simulate(engine, network, theta, x0, config, seed))
}

#[allow(clippy::too_many_arguments)]
pub fn couple_ensemble<S: Real>(
    method: CouplingMethod,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    config: &SimConfig<S>,
    master_seed: u64,
    n_paths: u64,
) -> Result<Vec<CoupledTrajectory<S>>> {
    run_paths(master_seed, 0, n_paths, |seed| couple(method, network, theta, eps, x0, config, seed))
}
