//! Group and Lie-algebra coboundary searches for θ and Λ.

use nalgebra::{DMatrix, DVector};

use super::ansatz::ScalarAnsatz;
use super::fit::solve_mixed;
use super::outcome::{decide, Outcome};
use super::SolverConfig;
use crate::bundle::{EquivariantBundle, Section};
use crate::error::{Error, Result};
use crate::geometry::{CircleValue, ScalarField, Word};
use crate::linalg::rms;
use crate::probes::ProbeSet;

/// θ with α^S_φ = θ∘φ − θ mod 1 on generators (and 𝔞^S = Xθ on Lie
/// elements), so that S·exp(2πiθ) is equivariant.
pub fn solve_group_coboundary(
    bundle: &EquivariantBundle,
    section: &Section,
    ansatz: &ScalarAnsatz,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<Outcome<ScalarField>> {
    let mut ansatz = ansatz.clone();
    ansatz.prepare(&probes.fit)?;
    let n = ansatz.len();
    let gens = &bundle.action.generators;
    let lie = &bundle.action.lie;
    let lie_fields: Vec<Vec<ScalarField>> = (0..lie.len())
        .map(|k| ansatz.items.iter().map(|it| bundle.lie_derivative(k, &it.field)).collect())
        .collect();
    let anomalies: Vec<ScalarField> = (0..lie.len()).map(|k| bundle.anomaly_flow(section, k)).collect();
    let rows = probes.fit.len() * (gens.len() + lie.len());
    let mut a = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    let mut groups = vec![None; rows];
    let mut r = 0;
    for (g, gen) in gens.iter().enumerate() {
        let w = Word::generator(g);
        for x in &probes.fit {
            let gx = gen.apply(x);
            for (i, it) in ansatz.items.iter().enumerate() {
                a[(r, i)] = it.field.eval(&gx)? - it.field.eval(x)?;
            }
            b[r] = bundle.alpha_lift_in(section, &w, x)?;
            groups[r] = Some(g);
            r += 1;
        }
    }
    for k in 0..lie.len() {
        for x in &probes.fit {
            for i in 0..n {
                a[(r, i)] = lie_fields[k][i].eval(x)?;
            }
            b[r] = anomalies[k].eval(x)?;
            r += 1;
        }
    }
    let sol = solve_mixed(&a, &b, &groups, gens.len(), config.max_integer);
    let fit = rms(&sol.residual);
    let theta = ansatz.combination(&sol.c);
    let shifted = section.shifted("coboundary", &theta);
    let mut hold: f64 = 0.0;
    for x in &probes.holdout {
        for g in 0..gens.len() {
            let v = bundle.alpha(&shifted, &Word::generator(g), x)?;
            hold = hold.max(v.distance(CircleValue::ZERO));
        }
        for k in 0..lie.len() {
            hold = hold.max(bundle.anomaly_flow(&shifted, k).eval(x)?.abs());
        }
    }
    Ok(decide(
        &ansatz.description,
        &ansatz.labels(),
        &sol.c,
        sol.m,
        fit,
        hold,
        config.tol_fit,
        config.tol_holdout,
        theta,
    ))
}

/// Λ with 𝔞^S(X) = L_XΛ for every Lie element, so that S·exp(2πiΛ) is
/// 𝒢₀-equivariant.
pub fn solve_lie_coboundary(
    bundle: &EquivariantBundle,
    section: &Section,
    ansatz: &ScalarAnsatz,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<Outcome<ScalarField>> {
    let lie = &bundle.action.lie;
    if lie.is_empty() {
        return Err(Error::InvalidInput("the group has no Lie elements".into()));
    }
    let mut ansatz = ansatz.clone();
    ansatz.prepare(&probes.fit)?;
    let n = ansatz.len();
    let rows = probes.fit.len() * lie.len();
    let mut a = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    let mut r = 0;
    for k in 0..lie.len() {
        let cols: Vec<ScalarField> = ansatz.items.iter().map(|it| bundle.lie_derivative(k, &it.field)).collect();
        let anomaly = bundle.anomaly_flow(section, k);
        for x in &probes.fit {
            for (i, c) in cols.iter().enumerate() {
                a[(r, i)] = c.eval(x)?;
            }
            b[r] = anomaly.eval(x)?;
            r += 1;
        }
    }
    let sol = solve_mixed(&a, &b, &vec![None; rows], 0, 0);
    let fit = rms(&sol.residual);
    let lambda = ansatz.combination(&sol.c);
    let shifted = section.shifted("lie-coboundary", &lambda);
    let mut hold: f64 = 0.0;
    for k in 0..lie.len() {
        let anomaly = bundle.anomaly_flow(&shifted, k);
        for x in &probes.holdout {
            hold = hold.max(anomaly.eval(x)?.abs());
        }
    }
    Ok(decide(
        &ansatz.description,
        &ansatz.labels(),
        &sol.c,
        Vec::new(),
        fit,
        hold,
        config.tol_fit,
        config.tol_holdout,
        lambda,
    ))
}
