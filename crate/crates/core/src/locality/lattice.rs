//! The lattice circle and its jet coordinates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::probes::ProbeRng;

/// m sites on a circle of length L, spacing h = L/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeBase {
    sites: usize,
    length: f64,
}

impl LatticeBase {
    pub fn new(sites: usize, length: f64) -> Result<Self> {
        if sites < 8 {
            return Err(Error::InvalidInput(format!("a lattice needs at least 8 sites, got {sites}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice length must be positive, got {length}")));
        }
        Ok(LatticeBase { sites, length })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.sites as f64
    }

    /// Base coordinate of site i.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Periodic central difference (D v)_i = (v_{i+1} − v_{i−1}) / 2h.
    pub fn diff(&self, v: &[f64]) -> Vec<f64> {
        let m = self.sites;
        let h2 = 2.0 * self.spacing();
        (0..m).map(|i| (v[(i + 1) % m] - v[(i + m - 1) % m]) / h2).collect()
    }

    /// D^k v.
    pub fn diff_pow(&self, v: &[f64], k: usize) -> Vec<f64> {
        (0..k).fold(v.to_vec(), |acc, _| self.diff(&acc))
    }

    /// (−D)^k v, the adjoint of D^k for the lattice pairing.
    pub fn adjoint_pow(&self, v: &[f64], k: usize) -> Vec<f64> {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        self.diff_pow(v, k).into_iter().map(|x| s * x).collect()
    }

    /// Per site, the jet (s, Ds, …, D^order s).
    pub fn jets(&self, s: &[f64], order: usize) -> Vec<Vec<f64>> {
        let mut levels = vec![s.to_vec()];
        for k in 0..order {
            let next = self.diff(&levels[k]);
            levels.push(next);
        }
        (0..self.sites).map(|i| levels.iter().map(|l| l[i]).collect()).collect()
    }

    /// Samples a function of the base coordinate at the sites.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.sites).map(|i| f(self.x(i))).collect()
    }

    /// Site permutation s ↦ s(· − k): (T_k s)_i = s_{i−k}.
    pub fn shift(&self, s: &[f64], k: i64) -> Vec<f64> {
        let m = self.sites as i64;
        (0..m).map(|i| s[(i - k).rem_euclid(m) as usize]).collect()
    }

    /// A smooth random field: low Fourier modes with decaying amplitudes.
    pub fn random_field(&self, modes: usize, r: &mut ProbeRng) -> Vec<f64> {
        let w = 2.0 * std::f64::consts::PI / self.length;
        let a0 = r.random::<f64>() * 2.0 - 1.0;
        let coeffs: Vec<(f64, f64)> = (1..=modes)
            .map(|k| {
                let a = (r.random::<f64>() * 2.0 - 1.0) / k as f64;
                let b = (r.random::<f64>() * 2.0 - 1.0) / k as f64;
                (a, b)
            })
            .collect();
        self.sample(|x| {
            coeffs
                .iter()
                .enumerate()
                .fold(a0, |acc, (k, (a, b))| {
                    let kk = (k + 1) as f64 * w * x;
                    acc + a * kk.cos() + b * kk.sin()
                })
        })
    }
}
