//! Invariant suites over every bundled scenario.
//!
//! Each valid scenario is checked against the cocycle law (in the reference
//! section and in a shifted one), closure and section shift of the
//! infinitesimal anomaly, the moment formula, descent, closedness of the
//! equivariant curvature, dual-method holonomy, translation, conjugation and
//! gauge invariance of holonomy, and transport of α. Negative fixtures must
//! be rejected. Inapplicable checks are recorded as skipped.

use rand::Rng;
use serde::Serialize;

use crate::bundle::conventions::{calibrate, CALIBRATION_TOL};
use crate::bundle::{
    connection_report, descent_residual, lie_cocycle_residual, max_form, AnomalyMethod, Connection,
    EquivariantBundle, Section, CLOSEDNESS_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::{CircleValue, Path, ScalarField, Topology, Word};
use crate::geometry::calculus::QUAD_SAMPLES;
use crate::holonomy::{holonomy_formula, holonomy_invariance_suite, holonomy_lift, transport_alpha, DUAL_METHOD_TOL};
use crate::locality::{local_connection_check, LOCAL_MATCH_TOL};
use crate::probes::rng;
use crate::scenario::{bundled_text, Model, ScenarioFile, BUNDLED};
use crate::solvers::{bent_path_to_image, path_to_image, SolverConfig};

pub const COCYCLE_TOL: f64 = 1e-8;
pub const CLOSURE_TOL: f64 = 1e-4;
pub const SHIFT_TOL: f64 = 1e-5;
pub const MOMENT_TOL: f64 = 1e-4;
pub const DESCENT_TOL: f64 = 1e-4;
pub const INVARIANCE_TOL: f64 = 1e-6;
pub const TRANSPORT_TOL: f64 = 1e-6;
pub const GAUGE_TOL: f64 = 1e-6;

/// A negative fixture must show a cocycle residual above this.
pub const VIOLATION_FLOOR: f64 = 1e-3;

/// Bundled scenarios whose cocycle is deliberately wrong.
pub const NEGATIVE_FIXTURES: &[&str] = &["z2_corrupted"];

/// Dual-method holonomy draws per scenario with generators.
pub const HOLONOMY_DRAWS: usize = 12;

const INVARIANCE_DRAWS: usize = 4;
const PROBES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub scenario: String,
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub tolerance: f64,
    /// `<`: residual must stay below the tolerance; `>`: above it.
    pub comparison: &'static str,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub scenarios: Vec<String>,
    pub checks: Vec<Check>,
    pub failures: usize,
    pub passed: bool,
}

struct Suite<'a> {
    scenario: &'a str,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn push(&mut self, check: &str, residual: Option<f64>, tolerance: f64, comparison: &'static str, status: CheckStatus, note: Option<String>) {
        self.checks.push(Check {
            scenario: self.scenario.to_string(),
            check: check.to_string(),
            residual,
            tolerance,
            comparison,
            status,
            note,
        });
    }

    fn below(&mut self, check: &str, r: Result<f64>, tol: f64) {
        match r {
            Ok(v) => {
                let ok = v < tol;
                self.push(check, Some(v), tol, "<", if ok { CheckStatus::Pass } else { CheckStatus::Fail }, None);
            }
            Err(e) => self.push(check, None, tol, "<", CheckStatus::Fail, Some(e.to_string())),
        }
    }

    fn skip(&mut self, check: &str, tol: f64, why: &str) {
        self.push(check, None, tol, "<", CheckStatus::Skipped, Some(why.to_string()));
    }
}

/// θ = 0.1·sin of the coordinate sum, made periodic on a torus.
pub fn gauge_shift(space: &crate::geometry::ParameterSpace) -> ScalarField {
    let scales: Vec<f64> = match space.topology() {
        Topology::Torus { periods } => periods.iter().map(|p| std::f64::consts::TAU / p).collect(),
        _ => vec![1.0; space.dimension()],
    };
    ScalarField::from_fn(move |p| 0.1 * p.iter().zip(&scales).map(|(x, s)| x * s).sum::<f64>().sin())
}

fn max_over(points: &[Vec<f64>], mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let v = f(p)?;
        worst = worst.max(if v.is_nan() { f64::INFINITY } else { v.abs() });
    }
    Ok(worst)
}

fn random_word(words: &[Word], r: &mut crate::probes::ProbeRng) -> Word {
    words[r.random_range(0..words.len())].clone()
}

/// α^S_{ab}(x) = α^S_b(x) + α^S_a(bx) mod 1 over short words.
fn product_law(b: &EquivariantBundle, s: &Section, points: &[Vec<f64>]) -> Result<f64> {
    let words = b.action.words_up_to(1);
    let mut worst: f64 = 0.0;
    for u in &words {
        for v in &words {
            for p in points.iter().take(4) {
                let lhs = b.alpha_lift_in(s, &u.mul(v), p)?;
                let rhs = b.alpha_lift_in(s, v, p)? + b.alpha_lift_in(s, u, &b.action.apply(v, p))?;
                worst = worst.max(CircleValue::new(lhs - rhs).distance(CircleValue::ZERO));
            }
        }
    }
    Ok(worst)
}

/// α^S_{exp((s+t)X)}(x) = α^S_{exp tX}(x) + α^S_{exp sX}(exp(tX)x) mod 1.
fn flow_law(b: &EquivariantBundle, sec: &Section, lie: usize, points: &[Vec<f64>], seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for p in points {
        let (s, t) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let lhs = b.alpha_flow_in(sec, lie, s + t, p)?;
        let rhs = b.alpha_flow_in(sec, lie, t, p)? + b.alpha_flow_in(sec, lie, s, &b.action.lie[lie].flow(t, p)?)?;
        worst = worst.max(CircleValue::new(lhs - rhs).distance(CircleValue::ZERO));
    }
    Ok(worst)
}

fn anomaly_checks(suite: &mut Suite<'_>, b: &EquivariantBundle, conn: &Connection, shifted: &Section, theta: &ScalarField, points: &[Vec<f64>]) {
    let reference = Section::reference();
    let n = b.action.lie.len();
    if n == 0 {
        for (c, t) in [
            ("anomaly-closure", CLOSURE_TOL),
            ("anomaly-section-shift", SHIFT_TOL),
            ("moment-formula", MOMENT_TOL),
            ("descent", DESCENT_TOL),
        ] {
            suite.skip(c, t, "no Lie elements");
        }
        return;
    }
    if n < 2 {
        suite.skip("anomaly-closure", CLOSURE_TOL, "needs two Lie elements");
    }
    for i in 0..n {
        for j in i + 1..n {
            let r = lie_cocycle_residual(b, &reference, i, j, points).and_then(|f| max_over(points, |p| f.eval(p)));
            suite.below(&format!("anomaly-closure[{i},{j}]"), r, CLOSURE_TOL);
        }
    }
    for k in 0..n {
        let label = &b.action.lie[k].label;
        let flow = b.anomaly_flow(&reference, k);
        let shifted_flow = b.anomaly_flow(shifted, k);
        let x_theta = b.lie_derivative(k, theta);
        let r = max_over(points, |p| Ok(shifted_flow.eval(p)? - (flow.eval(p)? - x_theta.eval(p)?)));
        suite.below(&format!("anomaly-section-shift[{label}]"), r, SHIFT_TOL);
        for s in [&reference, shifted] {
            let r = b
                .infinitesimal_anomaly(s, k, AnomalyMethod::MomentFormula, Some(conn))
                .and_then(|m| {
                    let f = b.anomaly_flow(s, k);
                    max_over(points, |p| Ok(f.eval(p)? - m.eval(p)?))
                });
            suite.below(&format!("moment-formula[{label},{}]", s.label), r, MOMENT_TOL);
            let r = max_form(&descent_residual(b, conn, s, k), points);
            suite.below(&format!("descent[{label},{}]", s.label), r, DESCENT_TOL);
        }
    }
}

fn holonomy_checks(suite: &mut Suite<'_>, b: &EquivariantBundle, conn: &Connection, shifted: &Section, points: &[Vec<f64>], seed: u64) {
    let words: Vec<Word> = b.action.words_up_to(2).into_iter().filter(|w| !w.is_identity()).collect();
    if words.is_empty() {
        for (c, t) in [
            ("holonomy-dual-method", DUAL_METHOD_TOL),
            ("holonomy-translation", INVARIANCE_TOL),
            ("holonomy-conjugation", INVARIANCE_TOL),
            ("holonomy-gauge", GAUGE_TOL),
            ("transport-alpha", TRANSPORT_TOL),
        ] {
            suite.skip(c, t, "no group generators");
        }
        return;
    }
    let space = &b.space;
    let reference = Section::reference();
    let mut r = rng(seed ^ 0x5e1f);
    let mut dual = Ok(0.0f64);
    let mut gauge = Ok(0.0f64);
    for k in 0..HOLONOMY_DRAWS {
        let w = random_word(&words, &mut r);
        let p = &points[k % points.len()];
        let image = b.action.apply(&w, p);
        let path = if k % 2 == 0 {
            path_to_image(space, p, &image)
        } else {
            bent_path_to_image(space, p, &image, &mut r)
        };
        let section = if k % 3 == 2 { shifted } else { &reference };
        let d = holonomy_formula(b, conn, section, &w, &path, QUAD_SAMPLES)
            .and_then(|f| Ok(f.distance(holonomy_lift(b, conn, section, &w, &path, QUAD_SAMPLES)?)));
        dual = dual.and_then(|m| Ok(m.max(d?)));
        let g = holonomy_formula(b, conn, &reference, &w, &path, QUAD_SAMPLES)
            .and_then(|h| Ok(h.distance(holonomy_formula(b, conn, shifted, &w, &path, QUAD_SAMPLES)?)));
        gauge = gauge.and_then(|m| Ok(m.max(g?)));
    }
    suite.below("holonomy-dual-method", dual, DUAL_METHOD_TOL);
    suite.below("holonomy-gauge", gauge, GAUGE_TOL);

    let mut translated = Ok(0.0f64);
    let mut conjugated = Ok(0.0f64);
    let mut transport = Ok(0.0f64);
    for k in 0..INVARIANCE_DRAWS {
        let w = random_word(&words, &mut r);
        let t = random_word(&words, &mut r);
        let p = &points[(2 * k) % points.len()];
        let q = &points[(2 * k + 1) % points.len()];
        let gamma = path_to_image(space, p, &b.action.apply(&w, p));
        let zeta = Path::straight(q, p);
        let rep = holonomy_invariance_suite(b, conn, &reference, &w, &t, &gamma, &zeta);
        match rep {
            Ok(rep) => {
                translated = translated.map(|m: f64| m.max(rep.translated));
                conjugated = conjugated.map(|m: f64| m.max(rep.conjugated));
            }
            Err(e) => {
                translated = Err(Error::Consistency(e.to_string()));
                conjugated = Err(e);
            }
        }
        let zeta = Path::straight(q, p);
        let tr = transport_alpha(b, conn, shifted, &w, p, q, &zeta)
            .and_then(|v| Ok(v.distance(b.alpha(shifted, &w, p)?)));
        transport = transport.and_then(|m| Ok(m.max(tr?)));
    }
    suite.below("holonomy-translation", translated, INVARIANCE_TOL);
    suite.below("holonomy-conjugation", conjugated, INVARIANCE_TOL);
    suite.below("transport-alpha", transport, TRANSPORT_TOL);
}

fn scenario_suite(suite: &mut Suite<'_>, model: &Model, seed: u64) {
    let b = &model.bundle;
    let conn = &model.connection;
    let config = SolverConfig {
        seed,
        probes: PROBES,
        holdout: 0,
        ..model.config.clone()
    };
    let points = model.probes(&config).fit;
    let theta = gauge_shift(&b.space);
    let shifted = Section::reference().shifted("shifted", &theta);

    suite.below(
        "cocycle-law",
        b.check_cocycle(config.max_word_len.max(2), PROBES, seed).map(|r| r.max_residual),
        COCYCLE_TOL,
    );
    suite.below("section-change-law", product_law(b, &shifted, &points), COCYCLE_TOL);
    for k in 0..b.action.lie.len() {
        let label = &b.action.lie[k].label;
        suite.below(&format!("flow-law[{label},shifted]"), flow_law(b, &shifted, k, &points, seed), COCYCLE_TOL);
    }
    anomaly_checks(suite, b, conn, &shifted, &theta, &points);
    for s in [Section::reference(), shifted.clone()] {
        let r = connection_report(b, conn, &s, &points).map(|c| c.closedness.max());
        suite.below(&format!("curvature-closedness[{}]", s.label), r, CLOSEDNESS_TOL);
    }
    holonomy_checks(suite, b, conn, &shifted, &points, seed);
    match &model.local {
        Some(l) => {
            let r = local_connection_check(&l.model, b, conn, &points).map(|rep| {
                rep.moment_residual
                    .iter()
                    .fold(rep.rho_residual.max(rep.curvature_residual), |m, v| m.max(*v))
            });
            suite.below("locality-declaration", r, LOCAL_MATCH_TOL);
        }
        None => suite.skip("locality-declaration", LOCAL_MATCH_TOL, "no [locality] section"),
    }
    if model.name() == "rotation" {
        let r = model.section(Some("tilted")).and_then(|s| calibrate(b, conn, &s, &points)).and_then(|c| {
            if c.matches_constants() {
                let k = usize::from(c.anomaly_sign < 0.0);
                let j = usize::from(c.descent_sign < 0.0);
                Ok(c.anomaly_residuals[k].max(c.descent_residuals[j]))
            } else {
                Err(Error::Consistency(format!(
                    "calibrated signs ({}, {}) differ from the frozen constants",
                    c.anomaly_sign, c.descent_sign
                )))
            }
        });
        suite.below("sign-calibration", r, CALIBRATION_TOL);
    }
}

fn negative_suite(suite: &mut Suite<'_>, text: &str, seed: u64) {
    let rejected = ScenarioFile::parse(text).and_then(|f| Model::build(&f)).is_err();
    suite.push(
        "construction-rejects",
        None,
        0.0,
        "<",
        if rejected { CheckStatus::Pass } else { CheckStatus::Fail },
        None,
    );
    let r = ScenarioFile::parse(text)
        .and_then(|f| Model::build_unchecked(&f))
        .and_then(|m| m.bundle.check_cocycle(m.config.max_word_len.max(2), PROBES, seed));
    match r {
        Ok(rep) => {
            let ok = rep.max_residual > VIOLATION_FLOOR;
            suite.push(
                "cocycle-violation-detected",
                Some(rep.max_residual),
                VIOLATION_FLOOR,
                ">",
                if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                rep.witness.map(|w| format!("{} {} at {:?}", w.check, w.word, w.point)),
            );
        }
        Err(e) => suite.push("cocycle-violation-detected", None, VIOLATION_FLOOR, ">", CheckStatus::Fail, Some(e.to_string())),
    }
}

/// Runs every suite on every bundled scenario.
pub fn selftest(seed: u64) -> SelftestReport {
    selftest_on(BUNDLED.iter().map(|(n, _)| *n), seed)
}

/// Runs the suites on the named bundled scenarios.
pub fn selftest_on<'a>(names: impl IntoIterator<Item = &'a str>, seed: u64) -> SelftestReport {
    let mut checks = Vec::new();
    let mut scenarios = Vec::new();
    for name in names {
        scenarios.push(name.to_string());
        let mut suite = Suite {
            scenario: name,
            checks: Vec::new(),
        };
        match bundled_text(name) {
            Some(text) if NEGATIVE_FIXTURES.contains(&name) => negative_suite(&mut suite, text, seed),
            Some(text) => match Model::load(text) {
                Ok(model) => scenario_suite(&mut suite, &model, seed),
                Err(e) => suite.below("build", Err(e), 0.0),
            },
            None => suite.below("build", Err(Error::InvalidInput(format!("no bundled scenario `{name}`"))), 0.0),
        }
        checks.extend(suite.checks);
    }
    let failures = checks.iter().filter(|c| c.status == CheckStatus::Fail).count();
    SelftestReport {
        seed,
        scenarios,
        checks,
        failures,
        passed: failures == 0,
    }
}
