//! Simulation, coupling and sensitivity estimation for stochastic chemical
//! reaction networks with mass-action and periodically forced kinetics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coupling;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod growth;
pub mod model;
pub mod network;
pub mod output;
pub mod scalar;
pub mod sensitivity;
pub mod stats;
pub mod streams;

pub use analysis::{exit_bound_constants, exit_time_experiment, hypoexponential_cdf, pure_birth_exit_cdf, ExitBoundConstants};
pub use coupling::{couple, CoupledTrajectory, CouplingMethod, StackedFrame};
pub use engine::{simulate, simulate_ppp, simulate_rtc, Engine, RecordMode, SimConfig, Trajectory};
pub use error::{CrnError, Result};
pub use growth::{compute_growth_profile, coupling_ratio_at, coupling_ratio_bound, GrowthProfile};
pub use model::{bundled_model, load_model, parse_model, Model};
pub use network::{Coef, Complex, ParamBox, ParamPoint, RateLaw, Reaction, ReactionNetwork};
pub use scalar::Real;
pub use sensitivity::{
    epsilon_scan, fd_estimate, gap_moment, variance_decomposition, EnsembleConfig, EstimateReport, Observable, ScanReport,
    ScanSpec,
};
pub use streams::{SeedSpec, StreamRole};

pub type Network = ReactionNetwork<f64>;
pub type Params = ParamPoint<f64>;
pub type Bounds = ParamBox<f64>;
pub type Config = SimConfig<f64>;
pub type Path = Trajectory<f64>;
pub type CoupledPath = CoupledTrajectory<f64>;
pub type Profile = GrowthProfile<f64>;
