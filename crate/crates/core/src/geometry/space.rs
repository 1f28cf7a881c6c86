use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// All of R^n; `probe_bounds` is the region sampled by probe sets.
    Euclidean { probe_bounds: Vec<(f64, f64)> },
    /// A closed box; finite-difference stencils may not leave it.
    Box { bounds: Vec<(f64, f64)> },
    /// R^n modulo the given periods, one per axis.
    Torus { periods: Vec<f64> },
}

/// A finite-dimensional parameter space with a single global chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    dimension: usize,
    topology: Topology,
    fd_step: f64,
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;

impl ParameterSpace {
    pub fn new(dimension: usize, topology: Topology, fd_step: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(Error::InvalidInput("fd_step must be positive".into()));
        }
        let extents: Vec<f64> = match &topology {
            Topology::Euclidean { probe_bounds: b } | Topology::Box { bounds: b } => {
                if b.len() != dimension {
                    return Err(Error::InvalidInput(format!(
                        "expected {dimension} bounds, got {}",
                        b.len()
                    )));
                }
                b.iter().map(|(lo, hi)| hi - lo).collect()
            }
            Topology::Torus { periods } => {
                if periods.len() != dimension {
                    return Err(Error::InvalidInput(format!(
                        "expected {dimension} periods, got {}",
                        periods.len()
                    )));
                }
                periods.clone()
            }
        };
        for e in &extents {
            if !(e.is_finite() && *e > 0.0) {
                return Err(Error::InvalidInput("bounds/periods must have positive extent".into()));
            }
            if fd_step >= e / 10.0 {
                return Err(Error::InvalidInput(format!(
                    "fd_step {fd_step} must be smaller than 1/10 of every extent ({e})"
                )));
            }
        }
        Ok(ParameterSpace {
            dimension,
            topology,
            fd_step,
        })
    }

    /// R^n with probes drawn from the cube [-half_width, half_width]^n.
    pub fn euclidean(dimension: usize, half_width: f64) -> Self {
        ParameterSpace::new(
            dimension,
            Topology::Euclidean {
                probe_bounds: vec![(-half_width, half_width); dimension],
            },
            DEFAULT_FD_STEP,
        )
        .expect("valid euclidean space")
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        self = ParameterSpace::new(self.dimension, self.topology, fd_step)?;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Region from which probe points are drawn.
    pub fn sample_bounds(&self) -> Vec<(f64, f64)> {
        match &self.topology {
            Topology::Euclidean { probe_bounds: b } => b.clone(),
            Topology::Box { bounds } => {
                // keep a stencil-sized margin so derivatives stay inside
                let m = 2.0 * self.fd_step;
                bounds.iter().map(|(lo, hi)| (lo + m, hi - m)).collect()
            }
            Topology::Torus { periods } => periods.iter().map(|p| (0.0, *p)).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.sample_bounds()
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Canonical representative of a point (reduces torus coordinates).
    pub fn reduce(&self, p: &mut [f64]) {
        if let Topology::Torus { periods } = &self.topology {
            for (x, l) in p.iter_mut().zip(periods) {
                *x = x.rem_euclid(*l);
            }
        }
    }

    pub fn reduced(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        self.reduce(&mut q);
        q
    }

    /// Chart displacement from `a` to `b` (minimal image on a torus).
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
        if let Topology::Torus { periods } = &self.topology {
            for (v, l) in d.iter_mut().zip(periods) {
                *v -= l * (*v / l).round();
            }
        }
        d
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Domain check for a central stencil of radius `radius` around `p`.
    pub fn check_stencil(&self, p: &[f64], radius: f64) -> Result<()> {
        if let Topology::Box { bounds } = &self.topology {
            for (x, (lo, hi)) in p.iter().zip(bounds) {
                if *x - radius < *lo - 1e-12 || *x + radius > *hi + 1e-12 {
                    return Err(Error::Domain { point: p.to_vec() });
                }
            }
        }
        Ok(())
    }

    pub fn unit_vector(&self, axis: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dimension];
        e[axis] = 1.0;
        e
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.topology, Topology::Torus { .. })
    }
}
