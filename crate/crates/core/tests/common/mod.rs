//! Shared helpers for the integration suites.
#![allow(dead_code)] // not every suite uses every helper

use nalgebra::DVector;
use qusd::ensemble::StateEnsemble;
use qusd::C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two real states with overlap `s` and the given priors.
pub fn two_state(s: f64, priors: [f64; 2]) -> StateEnsemble {
    let psi1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let psi2 = DVector::from_vec(vec![C64::new(s, 0.0), C64::new((1.0f64 - s * s).sqrt(), 0.0)]);
    StateEnsemble::new(2, vec![psi1, psi2], priors.to_vec()).unwrap()
}

/// Random priors: positive entries normalized to one.
pub fn random_priors(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random real unit vectors (Gaussian components), retried until the Gram
/// matrix passes the linear-independence threshold.
pub fn random_real_ensemble(d: usize, n: usize, rng: &mut ChaCha8Rng) -> StateEnsemble {
    loop {
        let states: Vec<DVector<C64>> = (0..d)
            .map(|_| {
                let v = DVector::<f64>::from_fn(n, |_, _| gaussian(rng));
                let norm = v.norm();
                DVector::from_iterator(n, v.iter().map(|x| C64::new(x / norm, 0.0)))
            })
            .collect();
        let priors = random_priors(d, rng);
        if let Ok(e) = StateEnsemble::new(n, states, priors) {
            return e;
        }
    }
}

/// Random complex unit vectors (Haar-like via Gaussian components).
pub fn random_complex_ensemble(d: usize, n: usize, rng: &mut ChaCha8Rng) -> StateEnsemble {
    loop {
        let states: Vec<DVector<C64>> = (0..d)
            .map(|_| {
                let v = DVector::<C64>::from_fn(n, |_, _| C64::new(gaussian(rng), gaussian(rng)));
                let norm = v.norm();
                v.unscale(norm)
            })
            .collect();
        let priors = random_priors(d, rng);
        if let Ok(e) = StateEnsemble::new(n, states, priors) {
            return e;
        }
    }
}

/// Like [`random_complex_ensemble`] but rejecting poorly conditioned Gram
/// matrices, for tests that probe identities at raw (unnormalized) scale.
pub fn random_complex_ensemble_conditioned(
    d: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
    min_gram_eig: f64,
) -> StateEnsemble {
    loop {
        let e = random_complex_ensemble(d, n, rng);
        if qusd::linalg::min_eigenvalue(&e.gram_matrix()) >= min_gram_eig {
            return e;
        }
    }
}

/// Box-Muller, good enough for test fixtures.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
