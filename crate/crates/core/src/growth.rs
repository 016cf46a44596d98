//! Growth and coupling-ratio checks for mass-action networks.
//!
//! A network is well behaved for coupled finite differences when every
//! reaction that increases the total molecule count grows at most linearly,
//! every intensity grows at most polynomially, and the relative intensity
//! change under a parameter perturbation is of order `||eps||_1`. For
//! mass-action kinetics on a box of parameters all three reduce to
//! closed-form quantities computed here.

use crate::error::{CrnError, Result};
use crate::network::{Coef, ParamBox, ParamPoint, RateLaw, ReactionNetwork};
use crate::scalar::Real;

/// Growth constants of a network over a parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile<S> {
    /// `Cbar`: bound on every rate coefficient over the box and over time.
    pub cbar: S,
    /// Polynomial order `p = max_k ||y_k||_1`, at least 1.
    pub order: u64,
    /// Reactions (zero based) with positive net gain `zeta_k . 1 > 0`.
    pub gain_set: Vec<usize>,
    /// `max_{k in gain_set} zeta_k . 1`, or 1 when the gain set is empty.
    pub max_gain: u64,
    /// `max_k |zeta_k| . 1` over all reactions.
    pub max_jump: u64,
    /// Every gain reaction has a source of order at most one.
    pub first_order_gain: bool,
}

impl<S: Real> GrowthProfile<S> {
    /// Linear growth holds for the gain reactions, which is what the exit-time bound needs.
    pub fn is_compliant(&self) -> bool {
        self.first_order_gain
    }

    /// Human-readable reason for non-compliance, if any.
    pub fn violation(&self) -> Option<&'static str> {
        (!self.first_order_gain).then_some("population-increasing reaction of order ≥ 2")
    }
}

fn coef_sup<S: Real>(c: &Coef<S>, upper: &[S]) -> S {
    match *c {
        Coef::Const(v) => v,
        Coef::Param(j) => upper[j],
    }
}

/// Computes the growth profile of `network` over the box `theta_box`.
pub fn compute_growth_profile<S: Real>(
    network: &ReactionNetwork<S>,
    theta_box: &ParamBox<S>,
) -> Result<GrowthProfile<S>> {
    if theta_box.dim() != network.n_params() {
        return Err(CrnError::Dimension {
            what: "parameter box",
            got: theta_box.dim(),
            expected: network.n_params(),
        });
    }
    let upper = theta_box.upper();
    let mut cbar = S::zero();
    let mut order = 1;
    let mut gain_set = Vec::new();
    let mut max_gain = 0u64;
    let mut max_jump = 0u64;
    let mut first_order_gain = true;
    for (k, r) in network.reactions().iter().enumerate() {
        let sup = match r.rate() {
            RateLaw::MassAction { param } => upper[*param],
            RateLaw::Periodic {
                base, amplitude, ..
            } => coef_sup(base, upper) + coef_sup(amplitude, upper),
        };
        cbar = cbar.max(sup);
        order = order.max(r.source().order());
        max_jump = max_jump.max(r.reaction_vector().iter().map(|z| z.unsigned_abs()).sum());
        let gain = r.net_gain();
        if gain > 0 {
            gain_set.push(k);
            max_gain = max_gain.max(gain as u64);
            if r.source().order() > 1 {
                first_order_gain = false;
            }
        }
    }
    Ok(GrowthProfile {
        cbar,
        order,
        gain_set,
        max_gain: max_gain.max(1),
        max_jump,
        first_order_gain,
    })
}

/// State-independent bound `max_k |eps_k| / max(kappa_k + eps_k, kappa_k)` on the coupling ratio.
pub fn coupling_ratio_bound<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
) -> Result<S> {
    network.check_params(theta)?;
    let shifted = theta.perturbed(eps)?;
    let mut bound = S::zero();
    for (k, r) in network.reactions().iter().enumerate() {
        match r.rate() {
            RateLaw::MassAction { param } => {
                let (kappa, shift) = (theta[*param], shifted[*param]);
                bound = bound.max(eps[*param].abs() / kappa.max(shift));
            }
            law @ RateLaw::Periodic { .. } => {
                if law.params().iter().any(|&j| eps[j] != S::zero()) {
                    return Err(CrnError::Unsupported(format!(
                        "closed-form ratio bound needs constant mass-action kinetics in perturbed parameters (reaction {})",
                        k + 1
                    )));
                }
            }
        }
    }
    Ok(bound)
}

/// `sum_k |lambda_k^{theta+eps} - lambda_k^theta| / sum_k max(lambda_k^{theta+eps}, lambda_k^theta)` at `(x, t)`.
pub fn coupling_ratio_at<S: Real>(
    network: &ReactionNetwork<S>,
    theta: &ParamPoint<S>,
    eps: &[S],
    x: &[u64],
    t: S,
) -> Result<S> {
    network.check_state(x)?;
    let shifted = theta.perturbed(eps)?;
    let mut num = S::zero();
    let mut den = S::zero();
    for k in 0..network.n_reactions() {
        let a = network.intensity(k, x, t, &shifted)?;
        let b = network.intensity(k, x, t, theta)?;
        num = num + (a - b).abs();
        den = den + a.max(b);
    }
    if den == S::zero() {
        return Err(CrnError::UndefinedRatio);
    }
    Ok(num / den)
}
