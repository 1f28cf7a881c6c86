//! Seeded probe sets: scrambled Halton points and a deterministic RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ParameterSpace;

pub type ProbeRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ProbeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The first `n` primes.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 2u64;
    while out.len() < n {
        if out.iter().take_while(|p| *p * *p <= k).all(|p| k % p != 0) {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points `first..first+n` in the box, with a seeded Cranley–Patterson shift.
pub fn halton_points(bounds: &[(f64, f64)], first: u64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let ps = primes(bounds.len());
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let shift: Vec<f64> = bounds.iter().map(|_| r.random::<f64>()).collect();
    (0..n as u64)
        .map(|j| {
            bounds
                .iter()
                .zip(&ps)
                .zip(&shift)
                .map(|(((lo, hi), p), s)| {
                    let u = (halton(first + j, *p) + s).fract();
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Disjoint fit and held-out probe sets drawn from the space's sample box.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub fit: Vec<Vec<f64>>,
    pub holdout: Vec<Vec<f64>>,
}

impl ProbeSet {
    pub fn new(space: &ParameterSpace, n_fit: usize, n_holdout: usize, seed: u64) -> Self {
        let b = space.sample_bounds();
        let all = halton_points(&b, 1, n_fit + n_holdout, seed);
        let (fit, holdout) = all.split_at(n_fit);
        ProbeSet {
            fit: fit.to_vec(),
            holdout: holdout.to_vec(),
        }
    }
}

/// Uniform random point in the space's sample box.
pub fn random_point(space: &ParameterSpace, r: &mut ProbeRng) -> Vec<f64> {
    space
        .sample_bounds()
        .iter()
        .map(|(lo, hi)| lo + r.random::<f64>() * (hi - lo))
        .collect()
}

/// Test directions: the coordinate basis in low dimension, otherwise
/// `count` random unit vectors.
pub fn probe_directions(dim: usize, count: usize, r: &mut ProbeRng) -> Vec<Vec<f64>> {
    if dim <= 4 {
        return (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}
