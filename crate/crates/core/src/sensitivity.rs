//! Finite-difference sensitivities from coupled pairs.
//!
//! For a pair `(X^{theta+eps}(t), X^theta(t))` and observable `f`, the forward
//! difference `D_N = (1 / (N delta)) sum_i [f(X_i^{theta+eps}) - f(X_i^theta)]`
//! estimates the derivative of `E f(X^theta(t))` along the perturbed
//! coordinate. The quality of the coupling is visible in `Var(Delta f)`,
//! which the scan relates to `||eps||_1` on a log-log scale.

use serde::Serialize;

use crate::coupling::{couple, CouplingMethod};
use crate::engine::{SimConfig, DEFAULT_MAX_EVENTS};
use crate::ensemble::run_paths;
use crate::error::{CrnError, Result};
use crate::network::{ParamBox, ParamPoint, ReactionNetwork};
use crate::scalar::Real;
use crate::stats::{self, LineFit};

/// Real-valued function of the state.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable<S> {
    SpeciesCount(usize),
    TotalCount,
    LinearCombination(Vec<S>),
}

impl<S: Real> Observable<S> {
    pub fn check(&self, dim: usize) -> Result<()> {
        match self {
            Observable::SpeciesCount(i) if *i >= dim => Err(CrnError::Index {
                what: "species",
                index: *i,
                len: dim,
            }),
            Observable::LinearCombination(w) if w.len() != dim => Err(CrnError::Dimension {
                what: "observable weights",
                got: w.len(),
                expected: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[u64]) -> S {
        match self {
            Observable::SpeciesCount(i) => S::count(x[*i]),
            Observable::TotalCount => x.iter().map(|&v| S::count(v)).sum(),
            Observable::LinearCombination(w) => w.iter().zip(x).map(|(&w, &v)| w * S::count(v)).sum(),
        }
    }
}

/// Monte Carlo settings shared by the estimators.
#[derive(Debug, Clone)]
pub struct EnsembleConfig<S> {
    pub t_end: S,
    pub n_paths: u64,
    pub master_seed: u64,
    pub max_events: u64,
    /// Parameter set every perturbed point must stay in, when given.
    pub bounds: Option<ParamBox<S>>,
}

impl<S: Real> EnsembleConfig<S> {
    pub fn new(t_end: S, n_paths: u64, master_seed: u64) -> Self {
        Self {
            t_end,
            n_paths,
            master_seed,
            max_events: DEFAULT_MAX_EVENTS,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: ParamBox<S>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_max_events(mut self, n: u64) -> Self {
        self.max_events = n;
        self
    }

    fn sim_config(&self) -> SimConfig<S> {
        SimConfig::new(self.t_end).with_max_events(self.max_events).summary()
    }

    fn check_point(&self, theta: &ParamPoint<S>, eps: &[S]) -> Result<()> {
        let shifted = theta.perturbed(eps)?;
        if let Some(b) = &self.bounds {
            if !b.contains(theta) || !b.contains(&shifted) {
                return Err(CrnError::Parameter("perturbed parameter leaves the parameter box".into()));
            }
        }
        Ok(())
    }
}

/// Terminal values of one coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub perturbed: f64,
    pub nominal: f64,
    /// `||X^{theta+eps}(t) - X^theta(t)||_1`.
    pub gap: f64,
    pub nominal_state: Vec<u64>,
}

impl PairSample {
    pub fn diff(&self) -> f64 {
        self.perturbed - self.nominal
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub master_seed: u64,
    pub method: CouplingMethod,
    pub epsilon: Vec<f64>,
}

/// `Var(Delta f) = Var_+ + Var_0 - 2 Cov` on one sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    pub var_diff: f64,
    pub var_perturbed: f64,
    pub var_nominal: f64,
    pub covariance: f64,
    pub mean_perturbed: f64,
    pub mean_nominal: f64,
    pub n_paths: u64,
}

impl VarianceDecomposition {
    /// `Var_+ + Var_0 - 2 Cov - Var(Delta f)`, zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.var_perturbed + self.var_nominal - 2.0 * self.covariance - self.var_diff
    }
}

/// One grid point of an epsilon scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub eps_norm: f64,
    pub var_diff: f64,
    pub var_std_error: f64,
    /// Three standard errors.
    pub ci_half_width: f64,
    /// `(r, E||Delta X||_1^r, standard error)` per requested moment.
    pub gap_moments: Vec<(f64, f64, f64)>,
    /// Mean terminal count of each species on the nominal leg.
    pub nominal_means: Vec<f64>,
    pub nominal_mean_std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub method: CouplingMethod,
    pub rows: Vec<ScanRow>,
    /// Log-log slope of `Var(Delta f)` against `||eps||_1`.
    pub var_slope: LineFit,
    /// Log-log slope of each gap moment, in the order of the requested `r`.
    pub gap_slopes: Vec<(f64, LineFit)>,
}

/// Simulates `n_paths` coupled pairs starting at path index `first_path`.
#[allow(clippy::too_many_arguments)]
pub fn sample_pairs<S: Real>(
    method: CouplingMethod,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    f: &Observable<S>,
    cfg: &EnsembleConfig<S>,
    first_path: u64,
) -> Result<Vec<PairSample>> {
    f.check(network.dim())?;
    cfg.check_point(theta, eps)?;
    let sim = cfg.sim_config();
    run_paths(cfg.master_seed, first_path, cfg.n_paths, |seed| {
        let pair = couple(method, network, theta, eps, x0, &sim, seed)?;
        let (xp, xn) = (&pair.perturbed.final_state, &pair.nominal.final_state);
        let gap: u64 = xp.iter().zip(xn).map(|(a, b)| a.abs_diff(*b)).sum();
        Ok(PairSample {
            perturbed: f.eval(xp).to_f64_lossy(),
            nominal: f.eval(xn).to_f64_lossy(),
            gap: gap as f64,
            nominal_state: xn.clone(),
        })
    })
}

/// The single nonzero coordinate of a scalar perturbation.
fn scalar_step<S: Real>(eps: &[S]) -> Result<S> {
    let mut nonzero = eps.iter().filter(|e| **e != S::zero());
    match (nonzero.next(), nonzero.next()) {
        (Some(&d), None) => Ok(d),
        (None, _) => Err(CrnError::Argument("finite-difference step is zero".into())),
        _ => Err(CrnError::Argument(
            "finite-difference step must perturb exactly one parameter".into(),
        )),
    }
}

fn require_paths<S>(cfg: &EnsembleConfig<S>) -> Result<()> {
    if cfg.n_paths < 2 {
        return Err(CrnError::Argument(format!("need at least 2 paths, got {}", cfg.n_paths)));
    }
    Ok(())
}

fn to_f64<S: Real>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// Forward-difference estimate of the derivative of `E f(X(t))` along the perturbed coordinate.
pub fn fd_estimate<S: Real>(
    method: CouplingMethod,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    f: &Observable<S>,
    cfg: &EnsembleConfig<S>,
) -> Result<EstimateReport> {
    require_paths(cfg)?;
    let delta = scalar_step(eps)?.to_f64_lossy();
    let diffs: Vec<f64> = sample_pairs(method, network, theta, eps, x0, f, cfg, 0)?
        .iter()
        .map(PairSample::diff)
        .collect();
    Ok(EstimateReport {
        value: stats::mean(&diffs) / delta,
        std_error: stats::std_error_of_mean(&diffs) / delta.abs(),
        n_paths: cfg.n_paths,
        master_seed: cfg.master_seed,
        method,
        epsilon: to_f64(eps),
    })
}

pub fn decompose(samples: &[PairSample]) -> VarianceDecomposition {
    let p: Vec<f64> = samples.iter().map(|s| s.perturbed).collect();
    let n: Vec<f64> = samples.iter().map(|s| s.nominal).collect();
    let d: Vec<f64> = samples.iter().map(PairSample::diff).collect();
    VarianceDecomposition {
        var_diff: stats::variance(&d),
        var_perturbed: stats::variance(&p),
        var_nominal: stats::variance(&n),
        covariance: stats::covariance(&p, &n),
        mean_perturbed: stats::mean(&p),
        mean_nominal: stats::mean(&n),
        n_paths: samples.len() as u64,
    }
}

/// Sample variance of `Delta f` and of each leg, and the covariance between legs.
pub fn variance_decomposition<S: Real>(
    method: CouplingMethod,
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x0: &[u64],
    f: &Observable<S>,
    cfg: &EnsembleConfig<S>,
) -> Result<VarianceDecomposition> {
    require_paths(cfg)?;
    scalar_step(eps)?;
    Ok(decompose(&sample_pairs(method, network, theta, eps, x0, f, cfg, 0)?))
}

fn check_moment_order(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(CrnError::Argument(format!("moment order must be >= 1, got {r}")));
    }
    Ok(())
}

fn moment_estimate(samples: &[PairSample], r: f64) -> (f64, f64) {
    let m: Vec<f64> = samples.iter().map(|s| s.gap.powf(r)).collect();
    (stats::mean(&m), stats::std_error_of_mean(&m))
}

/// Estimate of `E ||X^{theta+eps}(t) - X^theta(t)||_1^r` under the stacked coupling.
pub fn gap_moment<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    r: f64,
    x0: &[u64],
    cfg: &EnsembleConfig<S>,
) -> Result<EstimateReport> {
    check_moment_order(r)?;
    require_paths(cfg)?;
    let method = CouplingMethod::Stacked;
    let samples = sample_pairs(method, network, theta, eps, x0, &Observable::TotalCount, cfg, 0)?;
    let (value, std_error) = moment_estimate(&samples, r);
    Ok(EstimateReport {
        value,
        std_error,
        n_paths: cfg.n_paths,
        master_seed: cfg.master_seed,
        method,
        epsilon: to_f64(eps),
    })
}

/// Settings of an epsilon scan: `eps = h * direction` for each `h` in `grid`.
#[derive(Debug, Clone)]
pub struct ScanSpec<S> {
    pub direction: Vec<S>,
    pub grid: Vec<S>,
    pub moments: Vec<f64>,
}

impl<S: Real> ScanSpec<S> {
    fn check(&self, n_params: usize) -> Result<()> {
        if self.direction.len() != n_params {
            return Err(CrnError::Dimension {
                what: "scan direction",
                got: self.direction.len(),
                expected: n_params,
            });
        }
        if self.direction.iter().all(|d| *d == S::zero()) {
            return Err(CrnError::Argument("scan direction is zero".into()));
        }
        if self.grid.len() < 3 {
            return Err(CrnError::Argument(format!(
                "epsilon grid needs at least 3 points to fit a slope, got {}",
                self.grid.len()
            )));
        }
        if self.grid.iter().any(|h| !(*h > S::zero())) || self.grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(CrnError::Argument("epsilon grid must be positive and strictly decreasing".into()));
        }
        self.moments.iter().try_for_each(|&r| check_moment_order(r))
    }

    fn eps_at(&self, h: S) -> Vec<S> {
        self.direction.iter().map(|&d| d * h).collect()
    }
}

/// Estimates `Var(Delta f)` and the requested gap moments along a decreasing
/// grid of perturbation sizes and fits their log-log slopes against `||eps||_1`.
/// Grid point `g` uses path indices `g * N .. (g + 1) * N`; every method sees the same paths.
pub fn epsilon_scan<S: Real>(
    methods: &[CouplingMethod],
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    x0: &[u64],
    f: &Observable<S>,
    spec: &ScanSpec<S>,
    cfg: &EnsembleConfig<S>,
) -> Result<Vec<ScanReport>> {
    spec.check(network.n_params())?;
    require_paths(cfg)?;
    for &h in &spec.grid {
        cfg.check_point(theta, &spec.eps_at(h))?;
    }
    methods
        .iter()
        .map(|&method| {
            let mut rows = Vec::with_capacity(spec.grid.len());
            for (g, &h) in spec.grid.iter().enumerate() {
                let eps = spec.eps_at(h);
                let samples = sample_pairs(method, network, theta, &eps, x0, f, cfg, g as u64 * cfg.n_paths)?;
                let d: Vec<f64> = samples.iter().map(PairSample::diff).collect();
                let var_std_error = stats::std_error_of_variance(&d);
                let species: Vec<Vec<f64>> = (0..network.dim())
                    .map(|i| samples.iter().map(|s| s.nominal_state[i] as f64).collect())
                    .collect();
                rows.push(ScanRow {
                    eps_norm: eps.iter().map(|e| e.abs()).sum::<S>().to_f64_lossy(),
                    var_diff: stats::variance(&d),
                    var_std_error,
                    ci_half_width: 3.0 * var_std_error,
                    gap_moments: spec
                        .moments
                        .iter()
                        .map(|&r| {
                            let (m, se) = moment_estimate(&samples, r);
                            (r, m, se)
                        })
                        .collect(),
                    nominal_means: species.iter().map(|v| stats::mean(v)).collect(),
                    nominal_mean_std_errors: species.iter().map(|v| stats::std_error_of_mean(v)).collect(),
                });
            }
            let x: Vec<f64> = rows.iter().map(|r| r.eps_norm).collect();
            let fit = |v: Vec<f64>, se: Vec<f64>, what: &str| {
                stats::log_log_fit(&x, &v, &se).map_err(|e| {
                    CrnError::Degenerate(format!("{method} scan, {what}: {e}"))
                })
            };
            let var_slope = fit(
                rows.iter().map(|r| r.var_diff).collect(),
                rows.iter().map(|r| r.var_std_error).collect(),
                "variance",
            )?;
            let gap_slopes = spec
                .moments
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let v = rows.iter().map(|row| row.gap_moments[i].1).collect();
                    let se = rows.iter().map(|row| row.gap_moments[i].2).collect();
                    Ok((r, fit(v, se, &format!("moment r = {r}"))?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScanReport {
                method,
                rows,
                var_slope,
                gap_slopes,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Complex, RateLaw, Reaction};

    fn birth_death() -> ReactionNetwork<f64> {
        ReactionNetwork::new(
            vec!["S".into()],
            vec![
                Reaction::new(Complex::empty(1), Complex::new(vec![1]), RateLaw::MassAction { param: 0 }).unwrap(),
                Reaction::new(Complex::new(vec![1]), Complex::empty(1), RateLaw::MassAction { param: 1 }).unwrap(),
            ],
            2,
        )
        .unwrap()
    }

    fn theta() -> ParamPoint<f64> {
        ParamPoint::new(vec![10.0, 1.0]).unwrap()
    }

    #[test]
    fn observables() {
        let x = [2, 5];
        assert_eq!(Observable::<f64>::SpeciesCount(1).eval(&x), 5.0);
        assert_eq!(Observable::<f64>::TotalCount.eval(&x), 7.0);
        assert_eq!(Observable::LinearCombination(vec![0.5, -1.0]).eval(&x), -4.0);
        assert!(Observable::<f64>::SpeciesCount(2).check(2).is_err());
        assert!(Observable::LinearCombination(vec![1.0]).check(2).is_err());
    }

    #[test]
    fn null_observable_gives_zero() {
        let cfg = EnsembleConfig::new(1.0, 50, 3);
        let f = Observable::LinearCombination(vec![0.0]);
        let r = fd_estimate(CouplingMethod::Stacked, &birth_death(), &theta(), &[0.1, 0.0], &[0], &f, &cfg).unwrap();
        assert_eq!((r.value, r.std_error), (0.0, 0.0));
    }

    #[test]
    fn step_validation() {
        let cfg = EnsembleConfig::new(1.0, 10, 3);
        let f = Observable::TotalCount;
        let net = birth_death();
        let run = |eps: &[f64], cfg: &EnsembleConfig<f64>| fd_estimate(CouplingMethod::Stacked, &net, &theta(), eps, &[0], &f, cfg);
        assert!(run(&[0.0, 0.0], &cfg).is_err());
        assert!(run(&[0.1, 0.1], &cfg).is_err());
        assert!(run(&[-20.0, 0.0], &cfg).is_err());
        assert!(run(&[0.1, 0.0], &EnsembleConfig::new(1.0, 1, 3)).is_err());
        let boxed = cfg.clone().with_bounds(ParamBox::new(vec![9.0, 0.5], vec![10.05, 1.5]).unwrap());
        assert!(run(&[0.1, 0.0], &boxed).is_err());
        assert!(run(&[0.05, 0.0], &boxed).is_ok());
    }

    #[test]
    fn estimates_replay_exactly() {
        let cfg = EnsembleConfig::new(1.0, 200, 11);
        let f = Observable::TotalCount;
        let a = fd_estimate(CouplingMethod::Split, &birth_death(), &theta(), &[0.5, 0.0], &[0], &f, &cfg).unwrap();
        let b = fd_estimate(CouplingMethod::Split, &birth_death(), &theta(), &[0.5, 0.0], &[0], &f, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decomposition_identity_holds() {
        let cfg = EnsembleConfig::new(1.0, 500, 5);
        for method in CouplingMethod::ALL {
            let v = variance_decomposition(method, &birth_death(), &theta(), &[0.0, 0.2], &[3], &Observable::TotalCount, &cfg)
                .unwrap();
            assert!(v.identity_residual().abs() <= 1e-9 * (v.var_perturbed + v.var_nominal), "{method}: {v:?}");
        }
    }

    #[test]
    fn zero_perturbation_has_zero_gap() {
        let cfg = EnsembleConfig::new(1.0, 100, 5);
        for r in [1.0, 2.0, 4.0] {
            let g = gap_moment(&birth_death(), &theta(), &[0.0, 0.0], r, &[0], &cfg).unwrap();
            assert_eq!((g.value, g.std_error), (0.0, 0.0));
        }
        assert!(gap_moment(&birth_death(), &theta(), &[0.0, 0.0], 0.5, &[0], &cfg).is_err());
    }

    #[test]
    fn scan_validates_grid() {
        let cfg = EnsembleConfig::new(1.0, 10, 5);
        let spec = |grid: Vec<f64>| ScanSpec {
            direction: vec![1.0, 0.0],
            grid,
            moments: vec![1.0],
        };
        let run = |s: ScanSpec<f64>| {
            epsilon_scan(&[CouplingMethod::Stacked], &birth_death(), &theta(), &[0], &Observable::TotalCount, &s, &cfg)
        };
        assert!(run(spec(vec![0.1])).is_err());
        assert!(run(spec(vec![0.1, 0.2, 0.05])).is_err());
        assert!(run(spec(vec![0.2, 0.1, 0.0])).is_err());
    }
}
