//! Equivariant primitives β of curv_𝒢 and the σ-obstruction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::ansatz::{FormAnsatz, ScalarAnsatz};
use super::fit::solve_mixed;
use super::outcome::{decide, Outcome};
use super::SolverConfig;
use crate::bundle::{closedness, curvature_fields, Connection, EquivariantBundle, Section, CLOSEDNESS_TOL};
use crate::error::{Error, Result};
use crate::geometry::calculus::{gradient, line_integral_n, pullback_1, pullback_2};
use crate::geometry::{CircleValue, OneForm, ParameterSpace, Path, ScalarField, Word};
use crate::linalg::rms;
use crate::probes::{probe_directions, rng, ProbeRng, ProbeSet};

/// Probes used for the (more expensive) held-out checks.
const HOLDOUT_CAP: usize = 64;

/// Quadrature samples for σ along each path.
const SIGMA_SAMPLES: usize = 128;

/// Probe cap for the σ fit.
const SIGMA_PROBES: usize = 64;

/// Tolerance on the path dependence of σ.
pub const SIGMA_SPREAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvarianceScope {
    /// Only dβ = curv and ι_Xβ = −μ; invariance under 𝒢₀ follows.
    LieOnly,
    /// Also φ*β = β for every discrete generator.
    AllGenerators,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveOptions {
    pub scope: InvarianceScope,
    /// Also fit ∫_γ β to hol_φ(γ) mod 1 on straight paths γ ∈ C^φ.
    pub holonomy: bool,
    pub paths_per_generator: usize,
}

impl Default for PrimitiveOptions {
    fn default() -> Self {
        PrimitiveOptions {
            scope: InvarianceScope::AllGenerators,
            holonomy: false,
            paths_per_generator: 8,
        }
    }
}

/// Straight path from `x` to the continuous lift of φ(x).
pub fn path_to_image(space: &ParameterSpace, x: &[f64], image: &[f64]) -> Path {
    let d = space.displacement(x, image);
    let end: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
    Path::straight(x, &end)
}

/// A path from `x` to the lift of `image` through one perturbed midpoint.
pub fn bent_path_to_image(space: &ParameterSpace, x: &[f64], image: &[f64], r: &mut ProbeRng) -> Path {
    let d = space.displacement(x, image);
    let scale = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(0.1);
    let mid: Vec<f64> = x
        .iter()
        .zip(&d)
        .map(|(a, b)| a + 0.5 * b + (r.random::<f64>() - 0.5) * 0.5 * scale)
        .collect();
    let end: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
    Path::polyline(vec![x.to_vec(), mid, end]).expect("three finite nodes")
}

/// Real lift of hol_φ(γ) = ∫_γ ρ^S − α^S_φ(γ(0)).
pub(crate) fn holonomy_lift(
    bundle: &EquivariantBundle,
    rho_s: &OneForm,
    section: &Section,
    word: &Word,
    path: &Path,
    samples: usize,
) -> Result<f64> {
    Ok(line_integral_n(rho_s, path, samples)? - bundle.alpha_lift_in(section, word, path.start())?)
}

pub fn solve_equivariant_primitive(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    ansatz: &FormAnsatz,
    probes: &ProbeSet,
    config: &SolverConfig,
    opts: PrimitiveOptions,
) -> Result<Outcome<OneForm>> {
    let space = &bundle.space;
    let dim = space.dimension();
    let (rho_s, curv) = curvature_fields(bundle, conn, section);
    let check = &probes.fit[..probes.fit.len().min(16)];
    let closed = closedness(bundle, &curv, check)?;
    if closed.max() > CLOSEDNESS_TOL {
        return Err(Error::Precondition(format!(
            "equivariant curvature is not closed (residual {:.3e})",
            closed.max()
        )));
    }
    let mut ansatz = ansatz.clone();
    ansatz.prepare(&probes.fit)?;
    let n = ansatz.len();
    let ds = ansatz.derivatives(space);
    let gens = &bundle.action.generators;
    let invariance = opts.scope == InvarianceScope::AllGenerators;
    let pulled: Vec<Vec<OneForm>> = if invariance {
        gens.iter()
            .map(|g| {
                ansatz
                    .items
                    .iter()
                    .map(|it| {
                        let gg = g.clone();
                        pullback_1(space, move |p| gg.apply(p), &it.form)
                    })
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut rows_a: Vec<Vec<f64>> = Vec::new();
    let mut rows_b: Vec<f64> = Vec::new();
    let mut groups: Vec<Option<usize>> = Vec::new();
    let mut r = rng(config.seed ^ 0xd1);
    for p in &probes.fit {
        let dirs = probe_directions(dim, 4, &mut r);
        let covs: Vec<Vec<f64>> = ansatz.items.iter().map(|it| it.form.covector(p)).collect::<Result<_>>()?;
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let (u, v) = (&dirs[i], &dirs[j]);
                rows_a.push(ds.iter().map(|d| d.eval(p, u, v)).collect::<Result<_>>()?);
                rows_b.push(curv.omega.eval(p, u, v)?);
                groups.push(None);
            }
        }
        for (k, el) in bundle.action.lie.iter().enumerate() {
            let x = el.field.eval(p)?;
            rows_a.push(covs.iter().map(|c| dot(c, &x)).collect());
            rows_b.push(-curv.moment[k].eval(p)?);
            groups.push(None);
        }
        for pg in &pulled {
            let pcovs: Vec<Vec<f64>> = pg.iter().map(|f| f.covector(p)).collect::<Result<_>>()?;
            for v in &dirs {
                rows_a.push(pcovs.iter().zip(&covs).map(|(a, b)| dot(a, v) - dot(b, v)).collect());
                rows_b.push(0.0);
                groups.push(None);
            }
        }
    }
    if opts.holonomy {
        for (g, gen) in gens.iter().enumerate() {
            let w = Word::generator(g);
            let first = rows_b.len();
            for p in probes.fit.iter().take(opts.paths_per_generator) {
                let path = path_to_image(space, p, &gen.apply(p));
                rows_a.push(
                    ansatz
                        .items
                        .iter()
                        .map(|it| line_integral_n(&it.form, &path, config.quad_samples))
                        .collect::<Result<_>>()?,
                );
                rows_b.push(holonomy_lift(bundle, &rho_s, section, &w, &path, config.quad_samples)?);
                groups.push(Some(g));
            }
            // representatives in [0, 1) for the first path of each generator
            if first < rows_b.len() {
                let shift = -rows_b[first].floor();
                for b in &mut rows_b[first..] {
                    *b += shift;
                }
            }
        }
    }
    let a = DMatrix::from_fn(rows_a.len(), n, |i, j| rows_a[i][j]);
    let b = DVector::from_vec(rows_b);
    let q = if opts.holonomy { gens.len() } else { 0 };
    let sol = solve_mixed(&a, &b, &groups, q, config.max_integer);
    let fit = rms(&sol.residual);
    let beta = ansatz.combination(&sol.c);

    let hold_probes = &probes.holdout[..probes.holdout.len().min(HOLDOUT_CAP)];
    let mut hold = primitive_residual(bundle, &curv, &beta, hold_probes, invariance, config.seed ^ 0xd2)?;
    if opts.holonomy {
        let mut r = rng(config.seed ^ 0xd3);
        for (g, gen) in gens.iter().enumerate() {
            let w = Word::generator(g);
            for (k, p) in hold_probes.iter().take(opts.paths_per_generator).enumerate() {
                let image = gen.apply(p);
                let path = if k % 2 == 0 {
                    path_to_image(space, p, &image)
                } else {
                    bent_path_to_image(space, p, &image, &mut r)
                };
                let h = holonomy_lift(bundle, &rho_s, section, &w, &path, config.quad_samples)?;
                let i = line_integral_n(&beta, &path, config.quad_samples)?;
                hold = hold.max(CircleValue::new(h - i).distance(CircleValue::ZERO));
            }
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
        beta,
    ))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// max of |dβ − ω|, |ι_Xβ + μ(X)| and (optionally) |φ*β − β| on probes.
pub(crate) fn primitive_residual(
    bundle: &EquivariantBundle,
    curv: &crate::bundle::EquivariantCurvature,
    beta: &OneForm,
    probes: &[Vec<f64>],
    invariance: bool,
    seed: u64,
) -> Result<f64> {
    let space = &bundle.space;
    let dim = space.dimension();
    let db = crate::geometry::calculus::exterior_derivative(space, beta);
    let pulled: Vec<OneForm> = if invariance {
        bundle
            .action
            .generators
            .iter()
            .map(|g| {
                let gg = g.clone();
                pullback_1(space, move |p| gg.apply(p), beta)
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for p in probes {
        let dirs = probe_directions(dim, 4, &mut r);
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let e = db.eval(p, &dirs[i], &dirs[j])? - curv.omega.eval(p, &dirs[i], &dirs[j])?;
                worst = worst.max(e.abs());
            }
        }
        let cov = beta.covector(p)?;
        for (k, el) in bundle.action.lie.iter().enumerate() {
            let e = dot(&cov, &el.field.eval(p)?) + curv.moment[k].eval(p)?;
            worst = worst.max(e.abs());
        }
        for pb in &pulled {
            for (u, v) in pb.covector(p)?.iter().zip(&cov) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaResult {
    /// Per generator, the largest path dependence of σ_φ observed.
    pub spread: Vec<f64>,
    /// β = β₀ − dρ when σ_φ = ρ∘φ − ρ + k_φ is solvable.
    pub outcome: Outcome<OneForm>,
}

/// σ_φ(x) = ∫ from the basepoint to x of (φ*β₀ − β₀), then exactness of σ.
pub fn sigma_obstruction(
    bundle: &EquivariantBundle,
    beta0: &OneForm,
    basepoint: &[f64],
    ansatz: &ScalarAnsatz,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<SigmaResult> {
    let space = &bundle.space;
    let dim = space.dimension();
    let gens = &bundle.action.generators;
    let d0 = crate::geometry::calculus::exterior_derivative(space, beta0);
    let mut r = rng(config.seed ^ 0x51);
    for g in gens {
        let gg = g.clone();
        let pulled = pullback_2(space, move |p| gg.apply(p), &d0);
        for p in probes.fit.iter().take(8) {
            let dirs = probe_directions(dim, 3, &mut r);
            for i in 0..dirs.len() {
                for j in i + 1..dirs.len() {
                    let e = pulled.eval(p, &dirs[i], &dirs[j])? - d0.eval(p, &dirs[i], &dirs[j])?;
                    if e.abs() > CLOSEDNESS_TOL {
                        return Err(Error::Precondition(format!(
                            "dβ₀ is not invariant under `{}` (residual {:.3e})",
                            g.label,
                            e.abs()
                        )));
                    }
                }
            }
        }
    }
    let diffs: Vec<OneForm> = gens
        .iter()
        .map(|g| {
            let gg = g.clone();
            pullback_1(space, move |p| gg.apply(p), beta0).sub(beta0)
        })
        .collect();
    let base = basepoint.to_vec();
    let sigma = |g: usize, x: &[f64]| -> Result<f64> {
        line_integral_n(&diffs[g], &Path::straight(&base, x), SIGMA_SAMPLES)
    };
    let mut spread = Vec::new();
    for (g, gen) in gens.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for x in probes.fit.iter().take(4) {
            let bent = bent_path_to_image(space, &base, x, &mut r);
            let v = line_integral_n(&diffs[g], &bent, SIGMA_SAMPLES)?;
            worst = worst.max((v - sigma(g, bent.end())?).abs());
        }
        if worst > SIGMA_SPREAD_TOL {
            return Err(Error::AssumptionViolation(format!(
                "σ for `{}` depends on the path (spread {worst:.3e}); H¹(N) = 0 fails or dβ₀ is not invariant",
                gen.label
            )));
        }
        spread.push(worst);
    }

    let mut ansatz = ansatz.clone();
    ansatz.prepare(&probes.fit)?;
    let n = ansatz.len();
    let q = gens.len();
    let fit_probes = &probes.fit[..probes.fit.len().min(SIGMA_PROBES)];
    let rows = fit_probes.len() * q;
    let mut a = DMatrix::zeros(rows, n + q);
    let mut b = DVector::zeros(rows);
    let mut row = 0;
    for (g, gen) in gens.iter().enumerate() {
        for x in fit_probes {
            let gx = gen.apply(x);
            for (i, it) in ansatz.items.iter().enumerate() {
                a[(row, i)] = it.field.eval(&gx)? - it.field.eval(x)?;
            }
            a[(row, n + g)] = 1.0;
            b[row] = sigma(g, x)?;
            row += 1;
        }
    }
    let sol = solve_mixed(&a, &b, &vec![None; rows], 0, 0);
    let fit = rms(&sol.residual);
    let rho: ScalarField = ansatz.combination(&sol.c[..n]);
    let beta = beta0.sub(&gradient(space, &rho));
    let mut hold: f64 = 0.0;
    for g in gens {
        let gg = g.clone();
        let pulled = pullback_1(space, move |p| gg.apply(p), &beta);
        for x in probes.holdout.iter().take(HOLDOUT_CAP) {
            for (u, v) in pulled.covector(x)?.iter().zip(&beta.covector(x)?) {
                hold = hold.max((u - v).abs());
            }
        }
    }
    let outcome = decide(
        &ansatz.description,
        &ansatz.labels(),
        &sol.c[..n],
        Vec::new(),
        fit,
        hold,
        config.tol_fit,
        config.tol_holdout,
        beta,
    );
    Ok(SigmaResult { spread, outcome })
}
