//! Piecewise-linear paths and the path algebra used by holonomy.
//!
//! On a torus a path is stored as a continuous lift in chart coordinates;
//! endpoint tests use the minimal-image distance of the space.

use crate::error::{Error, Result};

use super::space::ParameterSpace;

pub const ENDPOINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    t: Vec<f64>,
    nodes: Vec<Vec<f64>>,
}

impl Path {
    /// Builds a path from `(t, point)` samples with `t` strictly increasing from 0 to 1.
    pub fn new(samples: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least 2 samples".into()));
        }
        let dim = samples[0].1.len();
        let (t, nodes): (Vec<f64>, Vec<Vec<f64>>) = samples.into_iter().unzip();
        if t[0] != 0.0 || *t.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("path parameters must run from 0 to 1".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("path parameters must increase strictly".into()));
        }
        for n in &nodes {
            if n.len() != dim || n.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("path nodes must be finite and of equal dimension".into()));
            }
        }
        Ok(Path { t, nodes })
    }

    /// Polyline through `nodes`, parametrized uniformly per node.
    pub fn polyline(nodes: Vec<Vec<f64>>) -> Result<Self> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::InvalidInput("a path needs at least 2 samples".into()));
        }
        let samples = nodes
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as f64 / (n - 1) as f64, p))
            .collect();
        Path::new(samples)
    }

    pub fn straight(a: &[f64], b: &[f64]) -> Self {
        Path::polyline(vec![a.to_vec(), b.to_vec()]).expect("two nodes")
    }

    pub fn constant(p: &[f64]) -> Self {
        Path::straight(p, p)
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn params(&self) -> &[f64] {
        &self.t
    }

    pub fn start(&self) -> &[f64] {
        &self.nodes[0]
    }

    pub fn end(&self) -> &[f64] {
        self.nodes.last().unwrap()
    }

    pub fn dimension(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn length(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| seg_len(&w[0], &w[1]))
            .sum()
    }

    /// Linear interpolation at parameter `s ∈ [0, 1]`.
    pub fn at(&self, s: f64) -> Vec<f64> {
        let s = s.clamp(0.0, 1.0);
        let k = match self.t.iter().position(|&t| t >= s) {
            Some(0) => return self.nodes[0].clone(),
            Some(k) => k,
            None => return self.end().to_vec(),
        };
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (s - t0) / (t1 - t0);
        lerp(&self.nodes[k - 1], &self.nodes[k], w)
    }

    /// Same curve with every segment split into `k` equal pieces.
    pub fn refine(&self, k: usize) -> Path {
        let k = k.max(1);
        let mut samples = vec![(self.t[0], self.nodes[0].clone())];
        for i in 1..self.t.len() {
            for j in 1..=k {
                let w = j as f64 / k as f64;
                let t = self.t[i - 1] + w * (self.t[i] - self.t[i - 1]);
                let t = if j == k { self.t[i] } else { t };
                samples.push((t, lerp(&self.nodes[i - 1], &self.nodes[i], w)));
            }
        }
        Path::new(samples).expect("refinement preserves validity")
    }

    pub fn reverse(&self) -> Path {
        let samples = self
            .t
            .iter()
            .rev()
            .zip(self.nodes.iter().rev())
            .map(|(t, p)| (1.0 - t, p.clone()))
            .collect();
        Path::new(samples).expect("reversal preserves validity")
    }

    /// γ followed by γ′; requires γ(1) = γ′(0) in the space's metric.
    pub fn concat(&self, other: &Path, space: &ParameterSpace) -> Result<Path> {
        let distance = space.distance(self.end(), other.start());
        if distance > ENDPOINT_TOL {
            return Err(Error::Composition { distance });
        }
        // continue the lift so the concatenation stays continuous on a torus
        let shift: Vec<f64> = self
            .end()
            .iter()
            .zip(other.start())
            .map(|(a, b)| a - b)
            .collect();
        let mut samples: Vec<(f64, Vec<f64>)> = self
            .t
            .iter()
            .zip(&self.nodes)
            .map(|(t, p)| (0.5 * t, p.clone()))
            .collect();
        for (t, p) in other.t.iter().zip(&other.nodes).skip(1) {
            let q = p.iter().zip(&shift).map(|(a, b)| a + b).collect();
            samples.push((0.5 + 0.5 * t, q));
        }
        Path::new(samples)
    }

    /// Image of the path under a point map, applied node by node.
    ///
    /// Exact for affine maps; refine first for nonlinear ones.
    pub fn act(&self, map: impl Fn(&[f64]) -> Vec<f64>) -> Path {
        let samples = self
            .t
            .iter()
            .zip(&self.nodes)
            .map(|(t, p)| (*t, map(p)))
            .collect();
        Path::new(samples).expect("finite image")
    }

    /// ζ ∗ γ ∗ (φ·ζ̄), a path in C^φ based at ζ(0); requires ζ(1) = γ(0).
    pub fn conjugate(
        zeta: &Path,
        gamma: &Path,
        phi: impl Fn(&[f64]) -> Vec<f64>,
        space: &ParameterSpace,
    ) -> Result<Path> {
        let tail = zeta.reverse().act(phi);
        zeta.concat(gamma, space)?.concat(&tail, space)
    }
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

fn seg_len(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (y - x) * (y - x))
        .sum::<f64>()
        .sqrt()
}
