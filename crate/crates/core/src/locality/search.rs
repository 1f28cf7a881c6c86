//! Local versions of the certificate searches and the local verdict.

use std::collections::BTreeMap;

use serde::Serialize;

use super::density::{LocalDensity, LocalFunctional, LocalOneForm};
use super::FieldModel;
use crate::bundle::{curvature_fields, Connection, EquivariantBundle, Section};
use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::geometry::calculus::exterior_derivative;
use crate::probes::{rng, ProbeSet};
use crate::solvers::{
    solve_equivariant_primitive, solve_lie_coboundary, validate_beta, FormAnsatz, FormItem, InvarianceScope, Outcome,
    PrimitiveOptions, ScalarAnsatz, ScalarItem, SolverConfig, StageRecord, StageStatus, Term, Verdict, VerdictReport,
};

/// Agreement required between declared local data and generic evaluators.
pub const LOCAL_MATCH_TOL: f64 = 1e-6;

/// Site pairs probed per field configuration.
const SITE_PAIRS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalConnectionReport {
    pub probes: usize,
    /// max |ρ(s)(δ) − ρ_decl(s)(δ)| over two-site variations δ.
    pub rho_residual: f64,
    /// max |dρ(s)(δ, δ′) − dρ_decl(s)(δ, δ′)|.
    pub curvature_residual: f64,
    /// per Lie element, max |μ(X)(s) − μ_decl(X)(s)|.
    pub moment_residual: Vec<f64>,
}

fn two_site(m: usize, i: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] += 1.0;
    v[j] += 1.0;
    v
}

fn mismatch(what: &str, s: &[f64], detail: String, generic: f64, declared: f64) -> Error {
    Error::LocalityDeclaration(format!(
        "{what} differs from its declared density by {:.3e} ({detail}; generic {generic:.9e}, declared {declared:.9e}) at field {s:?}",
        (generic - declared).abs()
    ))
}

/// Checks that the declared densities for ρ, curv and μ reproduce the
/// generic evaluators of `conn` and `bundle`.
pub fn local_connection_check(
    model: &FieldModel,
    bundle: &EquivariantBundle,
    conn: &Connection,
    probes: &[Vec<f64>],
) -> Result<LocalConnectionReport> {
    let lattice = model.lattice;
    let m = lattice.sites();
    let space = &bundle.space;
    let section = Section::reference();
    let declared_d = model.rho.exterior_derivative();
    let generic_d = exterior_derivative(space, &conn.rho_ref);
    let (_, curv) = curvature_fields(bundle, conn, &section);
    let lie_densities: Vec<_> = model
        .lie
        .iter()
        .map(|l| l.lie.lie_derivative_density(&LocalFunctional::new(lattice, l.potential.clone())))
        .collect();
    let mut r = rng(0x10ca1);
    let mut rep = LocalConnectionReport {
        probes: probes.len(),
        rho_residual: 0.0,
        curvature_residual: 0.0,
        moment_residual: vec![0.0; model.lie.len()],
    };
    let pick = |r: &mut crate::probes::ProbeRng| rand::Rng::random_range(r, 0..m);
    for s in probes {
        let mut deltas = Vec::new();
        for _ in 0..SITE_PAIRS {
            let (i, j) = (pick(&mut r), pick(&mut r));
            deltas.push(((i, j), two_site(m, i, j)));
        }
        for ((i, j), d) in &deltas {
            let g = conn.rho_ref.eval(s, d)?;
            let l = model.rho.eval(s, d)?;
            if (g - l).abs() > LOCAL_MATCH_TOL {
                return Err(mismatch("ρ", s, format!("variation at sites {i} and {j}"), g, l));
            }
            rep.rho_residual = rep.rho_residual.max((g - l).abs());
        }
        for w in deltas.windows(2) {
            let ((a, b), u) = &w[0];
            let ((c, d), v) = &w[1];
            let g = generic_d.eval(s, u, v)?;
            let l = declared_d.eval(s, u, v)?;
            if (g - l).abs() > LOCAL_MATCH_TOL {
                return Err(mismatch("curv", s, format!("variations at sites {a},{b} and {c},{d}"), g, l));
            }
            rep.curvature_residual = rep.curvature_residual.max((g - l).abs());
        }
        for (k, el) in bundle.action.lie.iter().enumerate().take(model.lie.len()) {
            let x = el.field.eval(s)?;
            let declared = lie_densities[k].integrate(&lattice, s)? - model.rho.eval(s, &x)?;
            let generic = curv.moment[k].eval(s)?;
            if (generic - declared).abs() > LOCAL_MATCH_TOL {
                return Err(mismatch(&format!("μ({})", el.label), s, "moment map".into(), generic, declared));
            }
            rep.moment_residual[k] = rep.moment_residual[k].max((generic - declared).abs());
        }
    }
    Ok(rep)
}

fn density_ansatz(model: &FieldModel, densities: &[LocalDensity], generated: bool) -> (ScalarAnsatz, BTreeMap<String, Expr>) {
    let mut map = BTreeMap::new();
    let items = densities
        .iter()
        .map(|d| {
            map.insert(d.to_string(), d.expr.clone());
            ScalarItem {
                label: d.to_string(),
                field: LocalFunctional::new(model.lattice, d.clone()).to_scalar_field(),
            }
        })
        .collect();
    let desc = if generated {
        format!("local densities: monomials in u..u{} of degree 1..=N", model.jet_order)
    } else {
        format!(
            "local densities: {}",
            densities.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        )
    };
    (ScalarAnsatz::new(desc, items, generated), map)
}

/// Λ ∈ Ω⁰_loc with 𝔞^S(X) = L_XΛ, searched over jet densities.
pub fn local_section_search_lie(
    model: &FieldModel,
    bundle: &EquivariantBundle,
    section: &Section,
    densities: &[LocalDensity],
    generated: bool,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<Outcome<LocalFunctional>> {
    let (ansatz, map) = density_ansatz(model, densities, generated);
    let out = solve_lie_coboundary(bundle, section, &ansatz, probes, config)?;
    let lattice = model.lattice;
    Ok(match out {
        Outcome::Certificate(c) => {
            let expr = combine(&c.terms, &map);
            Outcome::Certificate(crate::solvers::Certificate {
                value: LocalFunctional::new(lattice, LocalDensity::new(expr)),
                ansatz: c.ansatz,
                terms: c.terms,
                integer_lifts: c.integer_lifts,
                fit_residual: c.fit_residual,
                holdout_residual: c.holdout_residual,
            })
        }
        Outcome::NoCertificate(n) => Outcome::NoCertificate(n),
    })
}

fn combine(terms: &[Term], map: &BTreeMap<String, Expr>) -> Expr {
    terms
        .iter()
        .map(|t| Expr::mul(Expr::num(t.coefficient), map[&t.label].clone()))
        .reduce(Expr::add)
        .unwrap_or_else(|| Expr::num(0.0))
}

/// β ∈ Ω¹_{𝒢,loc} with hol_φ(γ) = ∫_γ β, Dβ = curv_𝒢 and φ*β = β.
#[allow(clippy::too_many_arguments)]
pub fn local_global_search(
    model: &FieldModel,
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    forms: &[LocalOneForm],
    generated: bool,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<Outcome<LocalOneForm>> {
    let mut map: BTreeMap<String, LocalOneForm> = BTreeMap::new();
    let items = forms
        .iter()
        .map(|f| {
            map.insert(f.label(), f.clone());
            FormItem {
                label: f.label(),
                form: f.to_one_form(),
                d: Some(f.exterior_derivative()),
            }
        })
        .collect();
    let desc = if generated {
        format!("local 1-forms: {{1, u, u1..u{}}} times δu..δu{}", model.jet_order, model.jet_order)
    } else {
        format!(
            "local 1-forms: {}",
            forms.iter().map(|f| f.label()).collect::<Vec<_>>().join(", ")
        )
    };
    let ansatz = FormAnsatz::new(desc, items, generated);
    let opts = PrimitiveOptions {
        scope: InvarianceScope::AllGenerators,
        holonomy: true,
        paths_per_generator: 8,
    };
    let out = solve_equivariant_primitive(bundle, conn, section, &ansatz, probes, config, opts)?;
    let lattice = model.lattice;
    Ok(match out {
        Outcome::Certificate(c) => {
            let order = c.terms.iter().map(|t| map[&t.label].coeffs.len()).max().unwrap_or(1);
            let mut coeffs: Vec<Expr> = vec![Expr::num(0.0); order];
            for t in &c.terms {
                for (k, d) in map[&t.label].coeffs.iter().enumerate() {
                    if !d.expr.is_zero() {
                        coeffs[k] = Expr::add(coeffs[k].clone(), Expr::mul(Expr::num(t.coefficient), d.expr.clone()));
                    }
                }
            }
            let value = LocalOneForm::new(lattice, coeffs.into_iter().map(LocalDensity::new).collect());
            Outcome::Certificate(crate::solvers::Certificate {
                value,
                ansatz: c.ansatz,
                terms: c.terms,
                integer_lifts: c.integer_lifts,
                fit_residual: c.fit_residual,
                holdout_residual: c.holdout_residual,
            })
        }
        Outcome::NoCertificate(n) => Outcome::NoCertificate(n),
    })
}

/// The physical pipeline: declared locality, local Lie coboundary, local
/// global primitive, then generic re-validation.
pub fn verdict_local(
    model: &FieldModel,
    bundle: &EquivariantBundle,
    conn: &Connection,
    probes: &ProbeSet,
    config: &SolverConfig,
) -> Result<VerdictReport> {
    let mut stages = Vec::new();
    let check = &probes.fit[..probes.fit.len().min(16)];
    let rep = local_connection_check(model, bundle, conn, check).map_err(|e| e.in_stage("locality-declaration"))?;
    let worst = rep.moment_residual.iter().fold(rep.rho_residual.max(rep.curvature_residual), |a, b| a.max(*b));
    stages.push(stage(
        "locality-declaration",
        StageStatus::Pass,
        "declared densities reproduce ρ, curv and μ",
        Some(worst),
    ));

    let mut section = Section::reference();
    let mut lambda_terms = Vec::new();
    if bundle.action.lie.is_empty() {
        stages.push(stage("lie-local", StageStatus::Skipped, "no Lie elements", None));
    } else {
        let out = local_section_search_lie(
            model,
            bundle,
            &section,
            &model.density_ansatz,
            model.default_density_ansatz,
            probes,
            config,
        )
        .map_err(|e| e.in_stage("lie-local"))?;
        let mut rec = stage(
            "lie-local",
            if out.is_certificate() { StageStatus::Certificate } else { StageStatus::NoCertificate },
            "𝔞^S(X) = L_XΛ with Λ a local functional",
            None,
        );
        rec.outcome = Some(out.summary());
        stages.push(rec);
        match out {
            Outcome::Certificate(c) => {
                lambda_terms = c.terms.clone();
                section = section.shifted("S·exp(2πiΛ)", &c.value.to_scalar_field());
            }
            Outcome::NoCertificate(n) => {
                let note = format!(
                    "ansatz-limited at stage lie-local: no local Λ within the ansatz ({}); \
                     this is not a proof that the anomaly is obstructed",
                    n.ansatz
                );
                return Ok(VerdictReport::stopped(Verdict::Inconclusive, "lie-local", stages, note));
            }
        }
    }

    let out = local_global_search(
        model,
        bundle,
        conn,
        &section,
        &model.oneform_ansatz,
        model.default_oneform_ansatz,
        probes,
        config,
    )
    .map_err(|e| e.in_stage("global-local"))?;
    let mut rec = stage(
        "global-local",
        if out.is_certificate() { StageStatus::Certificate } else { StageStatus::NoCertificate },
        "hol_φ(γ) = ∫_γ β with β local, invariant and Dβ = curv_𝒢",
        None,
    );
    rec.outcome = Some(out.summary());
    stages.push(rec);
    let c = match out {
        Outcome::Certificate(c) => c,
        Outcome::NoCertificate(n) => {
            let note = format!(
                "ansatz-limited at stage global-local: no local β within the ansatz ({}); \
                 this is not a proof that the anomaly is obstructed",
                n.ansatz
            );
            return Ok(VerdictReport::stopped(Verdict::Inconclusive, "global-local", stages, note));
        }
    };
    let beta = c.value.to_one_form();
    let basepoint = bundle.space.center();
    let validation = validate_beta(bundle, conn, &section, &beta, config, &basepoint, config.seed)
        .map_err(|e| e.in_stage("validation"))?;
    if !validation.passed {
        return Err(Error::Consistency(format!(
            "local certificate failed generic re-validation: Dβ {:.3e}, holonomy {:.3e}, α {:.3e}, 𝔞 {:.3e}",
            validation.primitive_residual,
            validation.holonomy_residual,
            validation.section_alpha_residual,
            validation.section_anomaly_residual
        ))
        .in_stage("validation"));
    }
    stages.push(stage(
        "validation",
        StageStatus::Pass,
        "generic Dβ, holonomy and section checks agree with the local certificate",
        None,
    ));
    let mut terms: Vec<Term> = lambda_terms
        .into_iter()
        .map(|t| Term {
            label: format!("Λ: {}", t.label),
            coefficient: t.coefficient,
        })
        .collect();
    terms.extend(c.terms.iter().map(|t| Term {
        label: format!("β: {}", t.label),
        coefficient: t.coefficient,
    }));
    let cov = beta.covector(&basepoint)?;
    Ok(VerdictReport {
        verdict: Verdict::Cancels,
        exit_code: 0,
        deciding_stage: None,
        stages,
        witness: None,
        character: None,
        k_membership: None,
        beta: Some(crate::solvers::FinalBeta {
            terms,
            basepoint,
            covector_at_basepoint: cov,
        }),
        validation: Some(validation),
        note: format!("local certificate β = {}", c.value.label()),
        beta_form: Some(beta),
    })
}

fn stage(name: &str, status: StageStatus, summary: &str, residual: Option<f64>) -> StageRecord {
    StageRecord {
        stage: name.to_string(),
        status,
        summary: summary.to_string(),
        outcome: None,
        residual,
    }
}
