//! Reaction networks with (time-dependent) stochastic mass-action kinetics.
//!
//! A network is a list of species and an ordered list of reactions
//! `y_k -> y'_k`. The intensity of reaction `k` in state `x` at time `t` is
//!
//! ```text
//! lambda_k(x, t) = kappa_k(t) * prod_i x_i (x_i - 1) ... (x_i - y_ki + 1)
//! ```
//!
//! and vanishes whenever `x` lacks the molecules consumed by `y_k`. The rate
//! coefficient `kappa_k` is either an entry of the parameter vector `theta`
//! or a sinusoid whose base and amplitude may themselves be parameters.

use std::ops::Deref;

use crate::error::{CrnError, Result};
use crate::scalar::Real;

/// Molecule counts of a source or product complex, one entry per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Complex(Vec<u64>);

impl Complex {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    pub fn empty(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Molecularity `||y||_1`.
    pub fn order(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// A rate coefficient that is either fixed or read from the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef<S> {
    Const(S),
    Param(usize),
}

impl<S: Real> Coef<S> {
    #[inline]
    pub fn value(&self, theta: &[S]) -> S {
        match *self {
            Coef::Const(v) => v,
            Coef::Param(j) => theta[j],
        }
    }

    pub fn param(&self) -> Option<usize> {
        match *self {
            Coef::Const(_) => None,
            Coef::Param(j) => Some(j),
        }
    }
}

/// Kinetics of one reaction.
#[derive(Debug, Clone, PartialEq)]
pub enum RateLaw<S> {
    /// Mass action with rate constant `theta[param]`.
    MassAction { param: usize },
    /// Mass action with `kappa(t) = base + amplitude * sin(2 pi t / period + phase)`.
    Periodic {
        base: Coef<S>,
        amplitude: Coef<S>,
        period: S,
        phase: S,
    },
}

impl<S: Real> RateLaw<S> {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, RateLaw::Periodic { .. })
    }

    /// `kappa_k(t)` at parameter point `theta`.
    #[inline]
    pub fn coefficient(&self, t: S, theta: &[S]) -> S {
        match self {
            RateLaw::MassAction { param } => theta[*param],
            RateLaw::Periodic { .. } => self.coefficient_from_sine(self.sine_at(t), theta),
        }
    }

    /// `sin(2 pi t / period + phase)` for periodic laws, zero otherwise.
    #[inline]
    pub(crate) fn sine_at(&self, t: S) -> S {
        match self {
            RateLaw::MassAction { .. } => S::zero(),
            RateLaw::Periodic { period, phase, .. } => (S::TAU() * t / *period + *phase).sin(),
        }
    }

    /// `kappa_k(t)` given `sine_at(t)`.
    #[inline]
    pub(crate) fn coefficient_from_sine(&self, sine: S, theta: &[S]) -> S {
        match self {
            RateLaw::MassAction { param } => theta[*param],
            RateLaw::Periodic {
                base, amplitude, ..
            } => base.value(theta) + amplitude.value(theta) * sine,
        }
    }

    /// `sup_t kappa_k(t)` at parameter point `theta`.
    #[inline]
    pub fn majorant(&self, theta: &[S]) -> S {
        match self {
            RateLaw::MassAction { param } => theta[*param],
            RateLaw::Periodic {
                base, amplitude, ..
            } => base.value(theta) + amplitude.value(theta),
        }
    }

    /// Parameter indices read by this law.
    pub fn params(&self) -> Vec<usize> {
        match self {
            RateLaw::MassAction { param } => vec![*param],
            RateLaw::Periodic {
                base, amplitude, ..
            } => base.param().into_iter().chain(amplitude.param()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction<S> {
    source: Complex,
    product: Complex,
    zeta: Vec<i64>,
    rate: RateLaw<S>,
}

impl<S: Real> Reaction<S> {
    pub fn new(source: Complex, product: Complex, rate: RateLaw<S>) -> Result<Self> {
        if source.dim() != product.dim() {
            return Err(CrnError::Dimension {
                what: "product complex",
                got: product.dim(),
                expected: source.dim(),
            });
        }
        if source == product {
            return Err(CrnError::Model(
                "source and product complexes coincide".into(),
            ));
        }
        let zeta = source
            .counts()
            .iter()
            .zip(product.counts())
            .map(|(&y, &yp)| yp as i64 - y as i64)
            .collect();
        Ok(Self {
            source,
            product,
            zeta,
            rate,
        })
    }

    pub fn source(&self) -> &Complex {
        &self.source
    }

    pub fn product(&self) -> &Complex {
        &self.product
    }

    /// Reaction vector `y' - y`.
    pub fn reaction_vector(&self) -> &[i64] {
        &self.zeta
    }

    pub fn rate(&self) -> &RateLaw<S> {
        &self.rate
    }

    /// Net change of the total molecule count, `zeta . 1`.
    pub fn net_gain(&self) -> i64 {
        self.zeta.iter().sum()
    }

    /// `x! / (x - y)! * 1{x >= y}`.
    #[inline]
    pub fn combinatorial_factor(&self, x: &[u64]) -> S {
        let mut acc = S::one();
        for (&xi, &yi) in x.iter().zip(self.source.counts()) {
            if xi < yi {
                return S::zero();
            }
            for j in 0..yi {
                acc = acc * S::count(xi - j);
            }
        }
        acc
    }
}

/// Intensities of one process, refreshed in two stages: state-dependent
/// factors after each jump, time-dependent coefficients at each query time.
/// Produces the same values as `intensities_into` and `majorants_into`.
#[derive(Debug, Clone)]
pub(crate) struct IntensityCache<S> {
    factor: Vec<S>,
    majorant: Vec<S>,
    rates: Vec<S>,
    periodic: Vec<usize>,
}

impl<S: Real> IntensityCache<S> {
    pub(crate) fn new(network: &ReactionNetwork<S>) -> Self {
        let n = network.n_reactions();
        Self {
            factor: vec![S::zero(); n],
            majorant: vec![S::zero(); n],
            rates: vec![S::zero(); n],
            periodic: (0..n).filter(|&k| network.reactions[k].rate.is_time_dependent()).collect(),
        }
    }

    /// Recomputes everything that depends on the state.
    #[inline]
    pub(crate) fn refresh(&mut self, network: &ReactionNetwork<S>, x: &[u64], theta: &[S]) {
        for k in 0..network.reactions.len() {
            self.refresh_one(network, k, x, theta);
        }
    }

    /// Recomputes the reactions affected by a jump of reaction `fired` that led to `x`.
    #[inline]
    pub(crate) fn update(&mut self, network: &ReactionNetwork<S>, fired: usize, x: &[u64], theta: &[S]) {
        for &k in &network.dependents[fired] {
            self.refresh_one(network, k, x, theta);
        }
    }

    #[inline]
    fn refresh_one(&mut self, network: &ReactionNetwork<S>, k: usize, x: &[u64], theta: &[S]) {
        let r = &network.reactions[k];
        let f = r.combinatorial_factor(x);
        self.factor[k] = f;
        if f > S::zero() {
            let m = r.rate.majorant(theta) * f;
            self.majorant[k] = m;
            if !r.rate.is_time_dependent() {
                self.rates[k] = m;
            }
        } else {
            self.majorant[k] = S::zero();
            self.rates[k] = S::zero();
        }
    }

    /// `sup_t lambda_k(x, t)` at the last refreshed state.
    #[inline]
    pub(crate) fn majorants(&self) -> &[S] {
        &self.majorant
    }

    /// Sines of the periodic laws at `t`, shared by caches of the same network.
    #[inline]
    pub(crate) fn sines_at(&self, network: &ReactionNetwork<S>, t: S, out: &mut Vec<S>) {
        out.clear();
        out.extend(self.periodic.iter().map(|&k| network.reactions[k].rate.sine_at(t)));
    }

    /// `lambda_k(x, t)` at the last refreshed state, given `sines_at(t)`.
    #[inline]
    pub(crate) fn rates_with(&mut self, network: &ReactionNetwork<S>, theta: &[S], sines: &[S]) -> &[S] {
        for (&k, &sine) in self.periodic.iter().zip(sines) {
            let f = self.factor[k];
            if f > S::zero() {
                self.rates[k] = network.reactions[k].rate.coefficient_from_sine(sine, theta) * f;
            }
        }
        &self.rates
    }
}

/// A reaction network together with the dimension `gamma` of its parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork<S> {
    species: Vec<String>,
    reactions: Vec<Reaction<S>>,
    n_params: usize,
    /// `dependents[k]`: reactions whose intensity can change when `k` fires.
    dependents: Vec<Vec<usize>>,
}

impl<S: Real> ReactionNetwork<S> {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction<S>>, n_params: usize) -> Result<Self> {
        if reactions.is_empty() {
            return Err(CrnError::Model("a network needs at least one reaction".into()));
        }
        let d = species.len();
        for (k, r) in reactions.iter().enumerate() {
            if r.source.dim() != d {
                return Err(CrnError::Dimension {
                    what: "complex",
                    got: r.source.dim(),
                    expected: d,
                });
            }
            for j in r.rate.params() {
                if j >= n_params {
                    return Err(CrnError::Index {
                        what: "parameter vector",
                        index: j,
                        len: n_params,
                    });
                }
            }
            if let RateLaw::Periodic { base, amplitude, period, .. } = &r.rate {
                if !(*period > S::zero()) {
                    return Err(CrnError::Model(format!("reaction {}: period must be positive", k + 1)));
                }
                if let Coef::Const(b) = base {
                    if !(*b > S::zero()) {
                        return Err(CrnError::Model(format!("reaction {}: base rate must be positive", k + 1)));
                    }
                }
                if let Coef::Const(a) = amplitude {
                    if *a < S::zero() {
                        return Err(CrnError::Model(format!("reaction {}: amplitude must be nonnegative", k + 1)));
                    }
                }
            }
        }
        let dependents = reactions
            .iter()
            .map(|fired| {
                reactions
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| {
                        r.source
                            .counts()
                            .iter()
                            .zip(&fired.zeta)
                            .any(|(&y, &z)| y > 0 && z != 0)
                    })
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            species,
            reactions,
            n_params,
            dependents,
        })
    }

    /// Number of species `d`.
    pub fn dim(&self) -> usize {
        self.species.len()
    }

    /// Number of reactions `K`.
    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// Parameter dimension `gamma`.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction<S>] {
        &self.reactions
    }

    pub fn reaction(&self, k: usize) -> Result<&Reaction<S>> {
        self.reactions.get(k).ok_or(CrnError::Index {
            what: "reaction list",
            index: k,
            len: self.reactions.len(),
        })
    }

    pub fn is_time_dependent(&self) -> bool {
        self.reactions.iter().any(|r| r.rate.is_time_dependent())
    }

    /// Checks that `theta` has length `gamma` and keeps every periodic rate positive.
    pub fn check_params(&self, theta: &[S]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(CrnError::Dimension {
                what: "parameter vector",
                got: theta.len(),
                expected: self.n_params,
            });
        }
        if let Some(j) = theta.iter().position(|v| !(*v > S::zero()) || !v.is_finite()) {
            return Err(CrnError::Parameter(format!(
                "theta[{j}] = {} is not a positive finite number",
                theta[j]
            )));
        }
        for (k, r) in self.reactions.iter().enumerate() {
            if let RateLaw::Periodic { base, amplitude, .. } = &r.rate {
                let (b, a) = (base.value(theta), amplitude.value(theta));
                if !(a < b) {
                    return Err(CrnError::Parameter(format!(
                        "reaction {}: amplitude {a} must be below base {b}",
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_state(&self, x: &[u64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(CrnError::Dimension {
                what: "state",
                got: x.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// Intensity `lambda_k(x, t)` at parameter point `theta`.
    pub fn intensity(&self, k: usize, x: &[u64], t: S, theta: &[S]) -> Result<S> {
        let r = self.reaction(k)?;
        self.check_state(x)?;
        if theta.len() != self.n_params {
            return Err(CrnError::Dimension {
                what: "parameter vector",
                got: theta.len(),
                expected: self.n_params,
            });
        }
        Ok(r.rate.coefficient(t, theta) * r.combinatorial_factor(x))
    }

    /// Fills `out` with every intensity. Shapes must have been validated.
    #[inline]
    pub(crate) fn intensities_into(&self, x: &[u64], t: S, theta: &[S], out: &mut [S]) {
        for (o, r) in out.iter_mut().zip(&self.reactions) {
            let f = r.combinatorial_factor(x);
            *o = if f > S::zero() {
                r.rate.coefficient(t, theta) * f
            } else {
                S::zero()
            };
        }
    }

    /// Transition rate `Q(x, x', t)`: total intensity of reactions with `zeta_k = x' - x`.
    pub fn transition_rate(&self, x: &[u64], x_next: &[u64], t: S, theta: &[S]) -> Result<S> {
        self.check_state(x)?;
        self.check_state(x_next)?;
        let mut total = S::zero();
        for k in 0..self.n_reactions() {
            let matches = self.reactions[k]
                .zeta
                .iter()
                .zip(x.iter().zip(x_next))
                .all(|(&z, (&a, &b))| b as i64 - a as i64 == z);
            if matches {
                total = total + self.intensity(k, x, t, theta)?;
            }
        }
        Ok(total)
    }

    /// Applies reaction `k` to `x` in place.
    #[inline]
    pub(crate) fn fire(&self, k: usize, x: &mut [u64]) {
        for (xi, &z) in x.iter_mut().zip(&self.reactions[k].zeta) {
            let next = *xi as i64 + z;
            debug_assert!(next >= 0, "reaction {k} drove a count negative");
            *xi = next as u64;
        }
    }
}

/// A point `theta` in the open positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint<S>(Vec<S>);

impl<S: Real> ParamPoint<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !(*v > S::zero()) || !v.is_finite()) {
            return Err(CrnError::Parameter(format!(
                "theta[{j}] = {} is not a positive finite number",
                values[j]
            )));
        }
        Ok(Self(values))
    }

    /// `theta + eps`, rejected unless every entry stays positive.
    pub fn perturbed(&self, eps: &[S]) -> Result<Self> {
        if eps.len() != self.0.len() {
            return Err(CrnError::Dimension {
                what: "perturbation",
                got: eps.len(),
                expected: self.0.len(),
            });
        }
        Self::new(self.0.iter().zip(eps).map(|(&a, &b)| a + b).collect())
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

impl<S> Deref for ParamPoint<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

/// Axis-aligned compact parameter box `Theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Real> ParamBox<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CrnError::Dimension {
                what: "upper corner",
                got: upper.len(),
                expected: lower.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo > S::zero()) || !(lo <= hi) || !hi.is_finite() {
                return Err(CrnError::Parameter(format!(
                    "box side {i} = [{lo}, {hi}] is not a positive compact interval"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The degenerate box `{theta}`.
    pub fn point(theta: &ParamPoint<S>) -> Self {
        Self {
            lower: theta.to_vec(),
            upper: theta.to_vec(),
        }
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[S]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn species(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn example1() -> ReactionNetwork<f64> {
        ReactionNetwork::new(
            species(&["A"]),
            vec![
                Reaction::new(Complex::new(vec![1]), Complex::new(vec![2]), RateLaw::MassAction { param: 0 }).unwrap(),
                Reaction::new(Complex::new(vec![2]), Complex::new(vec![1]), RateLaw::MassAction { param: 1 }).unwrap(),
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn linear_birth_intensity() {
        let net = example1();
        assert_eq!(net.intensity(0, &[5], 0.0, &[2.0, 1.0]).unwrap(), 10.0);
    }

    #[test]
    fn dimerisation_intensity_uses_falling_factorial() {
        let net = example1();
        assert_eq!(net.intensity(1, &[3], 0.0, &[2.0, 2.0]).unwrap(), 12.0);
        assert_eq!(net.intensity(1, &[1], 0.0, &[2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(net.intensity(1, &[0], 0.0, &[2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn zeroth_order_intensity_is_the_rate_constant() {
        let net = ReactionNetwork::new(
            species(&["S"]),
            vec![Reaction::new(Complex::empty(1), Complex::new(vec![1]), RateLaw::MassAction { param: 0 }).unwrap()],
            1,
        )
        .unwrap();
        for x in [0, 1, 17] {
            assert_eq!(net.intensity(0, &[x], 0.0, &[7.0]).unwrap(), 7.0);
        }
    }

    #[test]
    fn intensity_errors() {
        let net = example1();
        assert!(matches!(net.intensity(2, &[1], 0.0, &[1.0, 1.0]), Err(CrnError::Index { .. })));
        assert!(matches!(net.intensity(0, &[1], 0.0, &[1.0]), Err(CrnError::Dimension { .. })));
        assert!(matches!(net.intensity(0, &[1, 2], 0.0, &[1.0, 1.0]), Err(CrnError::Dimension { .. })));
    }

    #[test]
    fn transition_rates() {
        let net = example1();
        assert_eq!(net.transition_rate(&[3], &[4], 0.0, &[2.0, 1.0]).unwrap(), 6.0);
        assert_eq!(net.transition_rate(&[3], &[5], 0.0, &[2.0, 1.0]).unwrap(), 0.0);

        // two reactions sharing zeta = +1: S -> 2S (rate 2x) and 0 -> S (rate 3)
        let shared = ReactionNetwork::new(
            species(&["S"]),
            vec![
                Reaction::new(Complex::new(vec![1]), Complex::new(vec![2]), RateLaw::MassAction { param: 0 }).unwrap(),
                Reaction::new(Complex::empty(1), Complex::new(vec![1]), RateLaw::MassAction { param: 1 }).unwrap(),
            ],
            2,
        )
        .unwrap();
        assert_eq!(shared.transition_rate(&[2], &[3], 0.0, &[2.0, 3.0]).unwrap(), 7.0);
    }

    #[test]
    fn periodic_rate_and_majorant() {
        let law: RateLaw<f64> = RateLaw::Periodic {
            base: Coef::Const(60.0),
            amplitude: Coef::Param(0),
            period: 24.0,
            phase: 0.0,
        };
        assert!((law.coefficient(6.0, &[15.0]) - 75.0).abs() < 1e-12);
        assert!((law.coefficient(18.0, &[15.0]) - 45.0).abs() < 1e-12);
        assert_eq!(law.majorant(&[15.0]), 75.0);
        assert_eq!(law.params(), vec![0]);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(ReactionNetwork::<f64>::new(species(&["A"]), vec![], 0).is_err());
        assert!(Reaction::<f64>::new(Complex::new(vec![1]), Complex::new(vec![1]), RateLaw::MassAction { param: 0 }).is_err());
        let r = Reaction::<f64>::new(Complex::new(vec![1]), Complex::new(vec![2]), RateLaw::MassAction { param: 3 }).unwrap();
        assert!(ReactionNetwork::new(species(&["A"]), vec![r], 1).is_err());
    }

    #[test]
    fn periodic_amplitude_must_stay_below_base() {
        let net = ReactionNetwork::new(
            species(&["M"]),
            vec![Reaction::new(
                Complex::empty(1),
                Complex::new(vec![1]),
                RateLaw::Periodic { base: Coef::Param(0), amplitude: Coef::Param(1), period: 24.0, phase: 0.0 },
            )
            .unwrap()],
            2,
        )
        .unwrap();
        assert!(net.check_params(&[60.0, 15.0]).is_ok());
        assert!(net.check_params(&[10.0, 15.0]).is_err());
    }

    #[test]
    fn param_point_and_box() {
        assert!(ParamPoint::new(vec![1.0, 0.0]).is_err());
        let theta = ParamPoint::new(vec![1.0, 2.0]).unwrap();
        assert!(theta.perturbed(&[-1.0, 0.0]).is_err());
        assert_eq!(&*theta.perturbed(&[0.5, 0.0]).unwrap(), &[1.5, 2.0]);
        let b = ParamBox::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap();
        assert!(b.contains(&[2.0, 3.0]));
        assert!(!b.contains(&[2.0, 3.5]));
        assert!(ParamBox::new(vec![0.0], vec![1.0]).is_err());
        assert!(ParamBox::new(vec![2.0], vec![1.0]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let net = ReactionNetwork::<f32>::new(
            species(&["A"]),
            vec![Reaction::new(Complex::new(vec![2]), Complex::new(vec![1]), RateLaw::MassAction { param: 0 }).unwrap()],
            1,
        )
        .unwrap();
        assert_eq!(net.intensity(0, &[3], 0.0, &[2.0]).unwrap(), 12.0f32);
    }
}
