//! The verdict pipeline: perturbative stages, reduction to a flat
//! connection, its character, and K-membership, followed by an independent
//! re-validation of the final certificate.

use rand::Rng;
use serde::Serialize;

use super::ansatz::{FormAnsatz, ScalarAnsatz};
use super::fixed::{fixed_point_obstruction, FixedPointWitness};
use super::kmember::{k_matrix, k_membership, KMembership};
use super::outcome::{Outcome, Term};
use super::primitive::{
    bent_path_to_image, path_to_image, primitive_residual, sigma_obstruction, solve_equivariant_primitive,
    InvarianceScope, PrimitiveOptions,
};
use super::SolverConfig;
use crate::bundle::{connection_report, curvature_fields, Connection, EquivariantBundle, Section};
use crate::error::{Error, Result};
use crate::geometry::calculus::{line_integral_n, QUAD_SAMPLES};
use crate::geometry::{CircleValue, OneForm, Path, ScalarField, Word};
use crate::holonomy::{equivariant_flatness, equivariant_holonomy, flat_character, Character, FLATNESS_TOL, SPREAD_TOL};
use crate::probes::{halton_points, random_point, rng, ProbeSet};

/// Tolerance for Dβ = curv_𝒢 in the validation stage.
pub const VALIDATION_PRIMITIVE_TOL: f64 = 1e-4;

/// Circle tolerance for holonomy and section checks in the validation stage.
pub const VALIDATION_TOL: f64 = 1e-5;

/// Fresh (word, path) pairs checked by the validation stage.
pub const VALIDATION_PAIRS: usize = 20;

/// Zero searches started per Lie element.
const FIXED_POINT_STARTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Cancels,
    Obstructed,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Cancels => 0,
            Verdict::Obstructed => 2,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Cancels => "CANCELS",
            Verdict::Obstructed => "OBSTRUCTED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Pass,
    Certificate,
    NoCertificate,
    Obstructed,
    Member,
    NonMember,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome<()>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl StageRecord {
    fn new(stage: &str, status: StageStatus, summary: impl Into<String>) -> Self {
        StageRecord {
            stage: stage.to_string(),
            status,
            summary: summary.into(),
            outcome: None,
            residual: None,
        }
    }

    fn with_outcome<T>(mut self, o: &Outcome<T>) -> Self {
        self.outcome = Some(o.summary());
        self
    }

    fn with_residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }
}

/// The certified β with hol_φ(γ) = ∫_γ β.
#[derive(Debug, Clone, Serialize)]
pub struct FinalBeta {
    pub terms: Vec<Term>,
    pub basepoint: Vec<f64>,
    pub covector_at_basepoint: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// max |Dβ − curv_𝒢| and |φ*β − β| on fresh probes.
    pub primitive_residual: f64,
    pub holonomy_pairs: usize,
    /// max circle distance between hol_φ(γ) and ∫_γ β.
    pub holonomy_residual: f64,
    /// max circle distance of α^{S′}_φ from 0 for the induced section.
    pub section_alpha_residual: f64,
    /// max |𝔞^{S′}(X)| for the induced section.
    pub section_anomaly_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deciding_stage: Option<String>,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<FixedPointWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub character: Option<Character>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_membership: Option<KMembership>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<FinalBeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    pub note: String,
    #[serde(skip)]
    pub beta_form: Option<OneForm>,
}

impl VerdictReport {
    pub(crate) fn stopped(verdict: Verdict, stage: &str, stages: Vec<StageRecord>, note: String) -> Self {
        VerdictReport {
            verdict,
            exit_code: verdict.exit_code(),
            deciding_stage: Some(stage.to_string()),
            stages,
            witness: None,
            character: None,
            k_membership: None,
            beta: None,
            validation: None,
            note,
            beta_form: None,
        }
    }
}

pub struct VerdictInputs<'a> {
    pub scalar_ansatz: &'a ScalarAnsatz,
    pub form_ansatz: &'a FormAnsatz,
    /// Closed invariant forms standing in for H¹_𝒢(N).
    pub candidates: &'a [(String, OneForm)],
    pub probes: &'a ProbeSet,
    pub config: &'a SolverConfig,
}

/// S′ = S·exp(2πiθ) with θ(x) = ∫ from the basepoint to x of (ρ^S − β).
pub fn induced_section(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    beta: &OneForm,
    basepoint: &[f64],
) -> Section {
    let diff = conn.rho_in(&bundle.space, section).sub(beta);
    let base = basepoint.to_vec();
    let theta = ScalarField::new(move |x| line_integral_n(&diff, &Path::straight(&base, x), QUAD_SAMPLES));
    section.shifted(format!("{}·exp(2πiθ)", section.label), &theta)
}

fn fresh_words(bundle: &EquivariantBundle, max_len: usize) -> Vec<Word> {
    bundle
        .action
        .words_up_to(max_len.max(1))
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect()
}

/// Re-checks a certified β through the generic machinery on fresh data.
pub fn validate_beta(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    beta: &OneForm,
    config: &SolverConfig,
    basepoint: &[f64],
    seed: u64,
) -> Result<ValidationReport> {
    let space = &bundle.space;
    let fresh = halton_points(&space.sample_bounds(), 10_007, 16, seed ^ 0x7a11);
    let (_, curv) = curvature_fields(bundle, conn, section);
    let primitive = primitive_residual(bundle, &curv, beta, &fresh, true, seed ^ 0x7a12)?;

    let words = fresh_words(bundle, config.max_word_len);
    let flows = bundle.action.lie.len();
    let mut r = rng(seed ^ 0x7a13);
    let mut hol: f64 = 0.0;
    for k in 0..VALIDATION_PAIRS {
        let p = random_point(space, &mut r);
        let pick = r.random_range(0..words.len() + flows);
        if pick >= words.len() {
            // exp(tX): hol = ∫_γ ρ^S − α^S_{exp tX}(γ(0))
            let lie = pick - words.len();
            let t = r.random_range(-1.0..1.0);
            let image = bundle.action.lie[lie].flow(t, &p)?;
            let path = if k % 2 == 0 {
                path_to_image(space, &p, &image)
            } else {
                bent_path_to_image(space, &p, &image, &mut r)
            };
            let rho = conn.rho_in(space, section);
            let h = CircleValue::new(
                line_integral_n(&rho, &path, config.quad_samples)? - bundle.alpha_flow_in(section, lie, t, &p)?,
            );
            let i = CircleValue::new(line_integral_n(beta, &path, config.quad_samples)?);
            hol = hol.max(h.distance(i));
            continue;
        }
        let w = &words[pick];
        let image = bundle.action.apply(w, &p);
        let path = if k % 2 == 0 {
            path_to_image(space, &p, &image)
        } else {
            bent_path_to_image(space, &p, &image, &mut r)
        };
        let h = equivariant_holonomy(bundle, conn, section, w, &path, &format!("fresh{k}"))?;
        let i = CircleValue::new(line_integral_n(beta, &path, config.quad_samples)?);
        hol = hol.max(h.value.distance(i));
    }

    let induced = induced_section(bundle, conn, section, beta, basepoint);
    let mut alpha: f64 = 0.0;
    let mut anomaly: f64 = 0.0;
    for x in fresh.iter().take(8) {
        for g in 0..bundle.action.generators.len() {
            alpha = alpha.max(bundle.alpha(&induced, &Word::generator(g), x)?.distance(CircleValue::ZERO));
        }
        for k in 0..bundle.action.lie.len() {
            anomaly = anomaly.max(bundle.anomaly_flow(&induced, k).eval(x)?.abs());
        }
    }
    let passed = primitive < VALIDATION_PRIMITIVE_TOL && hol < VALIDATION_TOL && alpha < VALIDATION_TOL && anomaly < VALIDATION_TOL;
    Ok(ValidationReport {
        primitive_residual: primitive,
        holonomy_pairs: VALIDATION_PAIRS,
        holonomy_residual: hol,
        section_alpha_residual: alpha,
        section_anomaly_residual: anomaly,
        passed,
    })
}

fn inconclusive_note(stage: &str, ansatz: &str) -> String {
    format!(
        "ansatz-limited at stage {stage}: no certificate within the ansatz ({ansatz}); \
         this is not a proof that the anomaly is obstructed"
    )
}

/// Runs the topological pipeline in the reference section.
pub fn verdict(bundle: &EquivariantBundle, conn: &Connection, inputs: &VerdictInputs<'_>) -> Result<VerdictReport> {
    let config = inputs.config;
    let probes = inputs.probes;
    let section = Section::reference();
    let space = &bundle.space;
    let basepoint = space.center();
    let mut stages = Vec::new();

    let check = &probes.fit[..probes.fit.len().min(32)];
    let rep = connection_report(bundle, conn, &section, check).map_err(|e| e.in_stage("connection"))?;
    stages.push(
        StageRecord::new("connection", StageStatus::Pass, "equivariant curvature is closed")
            .with_residual(rep.closedness.max()),
    );

    if bundle.action.lie.is_empty() {
        stages.push(StageRecord::new("fixed-point", StageStatus::Skipped, "no Lie elements"));
    } else {
        let w = fixed_point_obstruction(bundle, conn, &section, FIXED_POINT_STARTS, config.seed, config.tol_holdout)
            .map_err(|e| e.in_stage("fixed-point"))?;
        if let Some(w) = w {
            stages.push(StageRecord::new(
                "fixed-point",
                StageStatus::Obstructed,
                format!("μ({}) = {:.6} at a zero of its fundamental field", w.lie, w.moment),
            ));
            let mut out = VerdictReport::stopped(
                Verdict::Obstructed,
                "fixed-point",
                stages,
                "ι_Xβ vanishes where X_N does, so Dβ = curv_𝒢 has no solution".into(),
            );
            out.witness = Some(w);
            return Ok(out);
        }
        stages.push(StageRecord::new("fixed-point", StageStatus::Pass, "μ vanishes at every zero found"));
    }

    // primitive β, invariant under the whole group
    let all = solve_equivariant_primitive(
        bundle,
        conn,
        &section,
        inputs.form_ansatz,
        probes,
        config,
        PrimitiveOptions::default(),
    )
    .map_err(|e| e.in_stage("primitive"))?;
    stages.push(
        StageRecord::new(
            "primitive",
            if all.is_certificate() { StageStatus::Certificate } else { StageStatus::NoCertificate },
            "Dβ = curv_𝒢 with φ*β = β for all generators",
        )
        .with_outcome(&all),
    );
    let (beta, mut terms) = match all {
        Outcome::Certificate(c) => (c.value, c.terms),
        Outcome::NoCertificate(_) => {
            let lie_only = solve_equivariant_primitive(
                bundle,
                conn,
                &section,
                inputs.form_ansatz,
                probes,
                config,
                PrimitiveOptions {
                    scope: InvarianceScope::LieOnly,
                    ..PrimitiveOptions::default()
                },
            )
            .map_err(|e| e.in_stage("primitive"))?;
            stages.push(
                StageRecord::new(
                    "primitive-lie",
                    if lie_only.is_certificate() { StageStatus::Certificate } else { StageStatus::NoCertificate },
                    "Dβ₀ = curv_𝒢 without discrete invariance",
                )
                .with_outcome(&lie_only),
            );
            let c0 = match lie_only {
                Outcome::Certificate(c) => c,
                Outcome::NoCertificate(n) => {
                    let note = inconclusive_note("primitive-lie", &n.ansatz);
                    return Ok(VerdictReport::stopped(Verdict::Inconclusive, "primitive-lie", stages, note));
                }
            };
            let sig = sigma_obstruction(bundle, &c0.value, &basepoint, inputs.scalar_ansatz, probes, config)
                .map_err(|e| e.in_stage("sigma"))?;
            stages.push(
                StageRecord::new(
                    "sigma",
                    if sig.outcome.is_certificate() { StageStatus::Certificate } else { StageStatus::NoCertificate },
                    "σ_φ = ρ∘φ − ρ mod constants",
                )
                .with_outcome(&sig.outcome)
                .with_residual(sig.spread.iter().cloned().fold(0.0, f64::max)),
            );
            match sig.outcome {
                Outcome::Certificate(c) => {
                    let mut t = c0.terms.clone();
                    t.extend(c.terms.iter().map(|x| Term {
                        label: format!("d({})", x.label),
                        coefficient: -x.coefficient,
                    }));
                    (c.value, t)
                }
                Outcome::NoCertificate(n) => {
                    let note = inconclusive_note("sigma", &n.ansatz);
                    return Ok(VerdictReport::stopped(Verdict::Inconclusive, "sigma", stages, note));
                }
            }
        }
    };

    // Ξ′ = Ξ + 2πi π*β is 𝒢-flat
    let flat = Connection::new(conn.rho_ref.sub(&beta));
    let flatness = equivariant_flatness(bundle, &flat, &section, check).map_err(|e| e.in_stage("flatten"))?;
    if flatness > FLATNESS_TOL {
        return Err(Error::NotFlat { residual: flatness }.in_stage("flatten"));
    }
    stages.push(StageRecord::new("flatten", StageStatus::Pass, "ρ′ = ρ − β is equivariantly flat").with_residual(flatness));

    let kappa = flat_character(bundle, &flat, &section, check, config.seed, SPREAD_TOL)
        .map_err(|e| e.in_stage("character"))?;
    stages.push(StageRecord::new(
        "character",
        StageStatus::Pass,
        format!(
            "κ = ({})",
            kappa
                .labels
                .iter()
                .zip(&kappa.values)
                .map(|(l, v)| format!("{l}: {v}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ));

    let labels: Vec<String> = inputs.candidates.iter().map(|(l, _)| l.clone()).collect();
    let k = k_matrix(bundle, inputs.candidates, &basepoint, check, config.seed).map_err(|e| e.in_stage("k-membership"))?;
    let km = k_membership(&kappa, &labels, &k, config.max_integer);
    stages.push(
        StageRecord::new(
            "k-membership",
            if km.member { StageStatus::Member } else { StageStatus::NonMember },
            if km.member {
                "κ lies in the span of the candidate periods mod 1"
            } else {
                "κ is not reached by the candidate periods mod 1"
            },
        )
        .with_residual(km.residual),
    );
    if !km.member {
        let mut out = VerdictReport::stopped(
            Verdict::Inconclusive,
            "k-membership",
            stages,
            format!(
                "ansatz-limited at stage k-membership: κ is not in the span of the {} candidate form(s); \
                 this is not a proof that the anomaly is obstructed",
                labels.len()
            ),
        );
        out.character = Some(kappa);
        out.k_membership = Some(km);
        return Ok(out);
    }

    let mut pieces = vec![(1.0, beta)];
    for ((label, form), l) in inputs.candidates.iter().zip(&km.lambda) {
        if l.abs() > 1e-12 {
            pieces.push((*l, form.clone()));
            terms.push(Term {
                label: label.clone(),
                coefficient: *l,
            });
        }
    }
    let beta_final = OneForm::linear_combination(&pieces);

    let validation = validate_beta(bundle, conn, &section, &beta_final, config, &basepoint, config.seed)
        .map_err(|e| e.in_stage("validation"))?;
    if !validation.passed {
        return Err(Error::Consistency(format!(
            "certificate failed re-validation: Dβ {:.3e}, holonomy {:.3e}, α {:.3e}, 𝔞 {:.3e}",
            validation.primitive_residual,
            validation.holonomy_residual,
            validation.section_alpha_residual,
            validation.section_anomaly_residual
        ))
        .in_stage("validation"));
    }
    stages.push(StageRecord::new(
        "validation",
        StageStatus::Pass,
        "Dβ = curv_𝒢, hol = ∫β on fresh pairs, induced section is equivariant",
    ));

    let cov = beta_final.covector(&basepoint)?;
    Ok(VerdictReport {
        verdict: Verdict::Cancels,
        exit_code: 0,
        deciding_stage: None,
        stages,
        witness: None,
        character: Some(kappa),
        k_membership: Some(km),
        beta: Some(FinalBeta {
            terms,
            basepoint,
            covector_at_basepoint: cov,
        }),
        validation: Some(validation),
        note: "the bundle is trivial as a 𝒢-equivariant bundle; hol_φ(γ) = ∫_γ β".into(),
        beta_form: Some(beta_final),
    })
}
