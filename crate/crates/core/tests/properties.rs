mod common;

use common::{random_eps, random_network, random_state, rng};
use coupled_crn::analysis::{hypoexponential_cdf, pure_birth_exit_cdf};
use coupled_crn::coupling::couple;
use coupled_crn::engine::{simulate_ppp, simulate_rtc};
use coupled_crn::{
    compute_growth_profile, coupling_ratio_at, coupling_ratio_bound, Bounds, Config, CouplingMethod, CrnError,
    Network, SeedSpec,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ratio_at_a_state_never_exceeds_the_uniform_bound(seed in any::<u64>(), t in 0.0..10.0f64) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let eps = random_eps(&mut r, &theta);
        let bound = coupling_ratio_bound(&net, &theta, &eps).unwrap();
        for _ in 0..20 {
            let x = random_state(&mut r, net.dim(), 30);
            match coupling_ratio_at(&net, &theta, &eps, &x, t) {
                Ok(ratio) => prop_assert!(ratio <= bound * (1.0 + 1e-12), "{ratio} > {bound}"),
                Err(CrnError::UndefinedRatio) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn intensities_grow_at_most_polynomially(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let profile = compute_growth_profile(&net, &Bounds::point(&theta)).unwrap();
        for _ in 0..20 {
            let x = random_state(&mut r, net.dim(), 1000);
            let norm: u64 = x.iter().sum();
            let cap = profile.cbar * (1.0 + (norm as f64).powi(profile.order as i32));
            for k in 0..net.n_reactions() {
                prop_assert!(net.intensity(k, &x, 0.0, &theta).unwrap() <= cap);
            }
        }
    }

    #[test]
    fn growth_profile_ignores_reaction_order(seed in any::<u64>(), shift in 0usize..6) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let mut reactions = net.reactions().to_vec();
        let k = reactions.len();
        reactions.rotate_left(shift % k);
        reactions.reverse();
        let shuffled = Network::new(net.species().to_vec(), reactions, net.n_params()).unwrap();
        let a = compute_growth_profile(&net, &Bounds::point(&theta)).unwrap();
        let b = compute_growth_profile(&shuffled, &Bounds::point(&theta)).unwrap();
        prop_assert_eq!(a.first_order_gain, b.first_order_gain);
        prop_assert_eq!((a.order, a.max_gain, a.max_jump), (b.order, b.max_gain, b.max_jump));
        prop_assert_eq!(a.cbar, b.cbar);
        prop_assert_eq!(a.gain_set.len(), b.gain_set.len());
    }

    #[test]
    fn intensity_is_linear_in_its_rate_constant(seed in any::<u64>(), c in 0.01..100.0f64) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let scaled: Vec<f64> = theta.iter().map(|v| v * c).collect();
        let x = random_state(&mut r, net.dim(), 50);
        for k in 0..net.n_reactions() {
            let a = net.intensity(k, &x, 0.0, &theta).unwrap();
            let b = net.intensity(k, &x, 0.0, &scaled).unwrap();
            prop_assert!((b - c * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn hypoexponential_matches_pure_birth(kappa in 0.1..5.0f64, m in 2u64..=12, t in 0.01..3.0f64) {
        let rates: Vec<f64> = (1..m).map(|i| kappa * i as f64).collect();
        let a = hypoexponential_cdf(&rates, t).unwrap();
        let b = pure_birth_exit_cdf(kappa, m, t).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn exit_cdf_is_monotone(kappa in 0.1..5.0f64, m in 2u64..40, t in 0.01..3.0f64, dt in 0.0..1.0f64) {
        let p = pure_birth_exit_cdf(kappa, m, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(pure_birth_exit_cdf(kappa, m, t + dt).unwrap() >= p);
        prop_assert!(pure_birth_exit_cdf(kappa, m + 1, t).unwrap() <= p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unperturbed_couplings_reproduce_single_engines(seed in any::<u64>(), path in 0u64..1000) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let x0 = random_state(&mut r, net.dim(), 5);
        let cfg = Config::new(0.5).with_max_events(20_000);
        let zero = vec![0.0; theta.len()];
        let s = SeedSpec::new(seed, path);
        let ppp = simulate_ppp(&net, &theta, &x0, &cfg, s);
        let stacked = couple(CouplingMethod::Stacked, &net, &theta, &zero, &x0, &cfg, s);
        if let (Ok(ppp), Ok(stacked)) = (ppp, stacked) {
            prop_assert_eq!(&stacked.nominal, &ppp);
            prop_assert_eq!(&stacked.perturbed, &ppp);
            prop_assert_eq!(stacked.decouple_index, None);
        }
        let rtc = simulate_rtc(&net, &theta, &x0, &cfg, s);
        let crp = couple(CouplingMethod::CommonReactionPath, &net, &theta, &zero, &x0, &cfg, s);
        if let (Ok(rtc), Ok(crp)) = (rtc, crp) {
            prop_assert_eq!(&crp.nominal, &rtc);
            prop_assert_eq!(&crp.perturbed, &rtc);
        }
    }

    #[test]
    fn coupled_legs_stay_nonnegative_and_consistent(seed in any::<u64>(), method in 0usize..4) {
        let mut r = rng(seed);
        let (net, theta) = random_network(&mut r);
        let eps = random_eps(&mut r, &theta);
        let x0 = random_state(&mut r, net.dim(), 5);
        let cfg = Config::new(0.5).with_max_events(20_000);
        let method = CouplingMethod::ALL[method];
        if let Ok(pair) = couple(method, &net, &theta, &eps, &x0, &cfg, SeedSpec::new(seed, 0)) {
            for leg in [&pair.perturbed, &pair.nominal] {
                let mut x = leg.x0.clone();
                for e in &leg.events {
                    let zeta = net.reaction(e.reaction).unwrap().reaction_vector();
                    for (xi, z) in x.iter_mut().zip(zeta) {
                        *xi = (*xi as i64 + z) as u64;
                    }
                    prop_assert_eq!(&x, &e.state);
                }
                prop_assert_eq!(&x, &leg.final_state);
            }
        }
    }
}
