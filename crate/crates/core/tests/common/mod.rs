#![allow(dead_code)]

use coupled_crn::{Complex, Network, Params, RateLaw, Reaction};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_complex(rng: &mut ChaCha8Rng, d: usize) -> Complex {
    let mut c = vec![0u64; d];
    for _ in 0..below(rng, 3) {
        c[below(rng, d as u64) as usize] += 1;
    }
    Complex::new(c)
}

/// Mass-action network with `d <= 4` species, `K <= 6` reactions of order at
/// most 2, one rate constant per reaction.
pub fn random_network(rng: &mut ChaCha8Rng) -> (Network, Params) {
    let d = 1 + below(rng, 4) as usize;
    let k = 1 + below(rng, 6) as usize;
    let mut reactions = Vec::with_capacity(k);
    while reactions.len() < k {
        let (src, prod) = (random_complex(rng, d), random_complex(rng, d));
        if src == prod {
            continue;
        }
        let param = reactions.len();
        reactions.push(Reaction::new(src, prod, RateLaw::MassAction { param }).unwrap());
    }
    let species = (0..d).map(|i| format!("S{i}")).collect();
    let theta = (0..k).map(|_| uniform(rng, 0.1, 10.0)).collect();
    (Network::new(species, reactions, k).unwrap(), Params::new(theta).unwrap())
}

pub fn random_state(rng: &mut ChaCha8Rng, d: usize, max: u64) -> Vec<u64> {
    (0..d).map(|_| below(rng, max + 1)).collect()
}

/// Perturbation keeping every coordinate positive, with some coordinates left at zero.
pub fn random_eps(rng: &mut ChaCha8Rng, theta: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .map(|&v| if below(rng, 3) == 0 { 0.0 } else { uniform(rng, -0.9, 2.0) * v })
        .collect()
}
