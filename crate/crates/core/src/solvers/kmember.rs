//! Membership of a flat character κ in K^𝒢(N) = k(H¹_𝒢(N)), over a
//! finite list of closed invariant candidate forms.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fit::solve_mixed;
use super::primitive::path_to_image;
use crate::bundle::EquivariantBundle;
use crate::error::{Error, Result};
use crate::geometry::{OneForm, Word};
use crate::holonomy::{k_of_beta, Character};
use crate::linalg::{lstsq, max_abs};

/// Residual below which Σλ_i k^{β_i} ≡ κ is accepted.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Periods below this are quadrature noise and count as zero.
pub const PERIOD_ZERO: f64 = 1e-9;

/// Largest number of generators searched exhaustively.
const EXHAUSTIVE_MAX: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMembership {
    pub member: bool,
    pub candidates: Vec<String>,
    /// Real periods k_φ^{β_i}, one row per candidate, one column per generator.
    pub k_matrix: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    /// m with Σ λ_i k^{β_i}_φ − m_φ = κ_φ.
    pub integers: Vec<i64>,
    pub residual: f64,
    pub search: String,
}

/// Periods of every candidate over straight paths from `basepoint` to φ(basepoint).
pub fn k_matrix(
    bundle: &EquivariantBundle,
    candidates: &[(String, OneForm)],
    basepoint: &[f64],
    probes: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (label, beta) in candidates {
        let mut row = Vec::new();
        for (g, gen) in bundle.action.generators.iter().enumerate() {
            let path = path_to_image(&bundle.space, basepoint, &gen.apply(basepoint));
            let k = k_of_beta(bundle, beta, &Word::generator(g), &path, probes, seed).map_err(|e| match e {
                Error::Precondition(m) => Error::Precondition(format!("candidate `{label}`: {m}")),
                other => other,
            })?;
            row.push(k.period);
        }
        out.push(row);
    }
    Ok(out)
}

/// Integer vectors in [−M, M]^q ordered by L1 norm, then lexicographically.
fn integer_vectors(q: usize, max: i64) -> Vec<Vec<i64>> {
    let mut all: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..q {
        all = all
            .into_iter()
            .flat_map(|v| {
                (-max..=max).map(move |m| {
                    let mut w = v.clone();
                    w.push(m);
                    w
                })
            })
            .collect();
    }
    all.sort_by_key(|v| (v.iter().map(|m| m.abs()).sum::<i64>(), v.clone()));
    all
}

/// Solves Σ_i λ_i k^{β_i} ≡ κ mod 1, preferring the smallest ‖λ‖.
pub fn k_membership(kappa: &Character, labels: &[String], k: &[Vec<f64>], max_integer: i64) -> KMembership {
    let q = kappa.values.len();
    let p = k.len();
    let target: Vec<f64> = kappa.values.iter().map(|v| v.value()).collect();
    let kt = DMatrix::from_fn(q, p, |g, i| if k[i][g].abs() < PERIOD_ZERO { 0.0 } else { k[i][g] });
    let mut best: Option<(Vec<f64>, Vec<i64>, f64)> = None;
    let search;
    if q <= EXHAUSTIVE_MAX {
        search = format!("exhaustive over |m| <= {max_integer}");
        for m in integer_vectors(q, max_integer) {
            let rhs = DVector::from_fn(q, |g, _| target[g] + m[g] as f64);
            let sol = lstsq(&kt, &rhs);
            let res = max_abs(&sol.residual);
            if res >= MEMBERSHIP_TOL {
                continue;
            }
            let norm = sol.x.norm();
            let better = match &best {
                None => true,
                Some((l, _, _)) => norm < DVector::from_column_slice(l).norm() - 1e-12,
            };
            if better {
                best = Some((sol.x.iter().copied().collect(), m, res));
            }
        }
    } else {
        search = format!("greedy integer descent over |m| <= {max_integer}");
        let groups: Vec<Option<usize>> = (0..q).map(Some).collect();
        let sol = solve_mixed(&kt, &DVector::from_vec(target.clone()), &groups, q, max_integer);
        let res = max_abs(&sol.residual);
        if res < MEMBERSHIP_TOL {
            best = Some((sol.c, sol.m, res));
        }
    }
    let k_matrix = k.to_vec();
    match best {
        Some((lambda, integers, residual)) => KMembership {
            member: true,
            candidates: labels.to_vec(),
            k_matrix,
            kappa: target,
            lambda,
            integers,
            residual,
            search,
        },
        None => {
            let sol = lstsq(&kt, &DVector::from_vec(target.clone()));
            KMembership {
                member: false,
                candidates: labels.to_vec(),
                k_matrix,
                kappa: target,
                lambda: sol.x.iter().copied().collect(),
                integers: vec![0; q],
                residual: max_abs(&sol.residual),
                search,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(v: &[f64]) -> Character {
        Character::new((0..v.len()).map(|i| format!("g{i}")).collect(), v.to_vec())
    }

    #[test]
    fn zero_character_needs_nothing() {
        let r = k_membership(&chi(&[0.0]), &[], &[], 16);
        assert!(r.member);
        assert!(r.lambda.is_empty());
    }

    #[test]
    fn half_period_candidate() {
        let r = k_membership(&chi(&[0.5]), &["half".into()], &[vec![0.5]], 16);
        assert!(r.member);
        assert!((r.lambda[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.integers, vec![0]);
    }

    #[test]
    fn vanishing_period_cannot_reach_half() {
        let r = k_membership(&chi(&[0.5]), &["zero".into()], &[vec![0.0]], 16);
        assert!(!r.member);
    }

    #[test]
    fn minimum_norm_choice() {
        let r = k_membership(
            &chi(&[2.0 / 3.0, 0.75]),
            &["a".into(), "b".into()],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            16,
        );
        assert!(r.member);
        assert!((r.lambda[0] + 1.0 / 3.0).abs() < 1e-12);
        assert!((r.lambda[1] + 0.25).abs() < 1e-12);
    }
}
