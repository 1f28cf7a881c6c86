use super::*;
use crate::bundle::{Cocycle, Connection, EquivariantBundle, FlowCocycle, Section};
use crate::dsl::{parse_with, Context};
use crate::geometry::{GroupAction, GroupElement, LieElement, OneForm, ParameterSpace, ScalarField, VectorField};
use crate::probes::ProbeSet;

fn e(src: &str, dim: usize) -> crate::dsl::Expr {
    parse_with(src, &Context::coords(dim)).unwrap()
}

fn form(srcs: &[&str]) -> OneForm {
    let d = srcs.len();
    OneForm::from_exprs(srcs.iter().map(|s| e(s, d)).collect())
}

fn cfg() -> SolverConfig {
    SolverConfig {
        probes: 48,
        holdout: 48,
        ..SolverConfig::default()
    }
}

fn z_action() -> GroupAction {
    GroupAction {
        generators: vec![GroupElement::translation("g", vec![1.0])],
        relations: vec![],
        lie: vec![],
    }
}

fn z_with(alpha: ScalarField) -> EquivariantBundle {
    let cocycle = Cocycle {
        generators: vec![alpha],
        lie: vec![],
    };
    EquivariantBundle::new(ParameterSpace::euclidean(1, 2.0), z_action(), cocycle).unwrap()
}

fn rotation(c: f64, planted: Option<f64>) -> (EquivariantBundle, Connection) {
    let lie = LieElement::with_flow(
        "X",
        VectorField::new(|p| Ok(vec![-p[1], p[0]])),
        |t, p| Ok(vec![t.cos() * p[0] - t.sin() * p[1], t.sin() * p[0] + t.cos() * p[1]]),
    );
    let r = GroupElement::new(
        "r",
        |p| vec![1f64.cos() * p[0] - 1f64.sin() * p[1], 1f64.sin() * p[0] + 1f64.cos() * p[1]],
        |p| vec![1f64.cos() * p[0] + 1f64.sin() * p[1], -1f64.sin() * p[0] + 1f64.cos() * p[1]],
        true,
    );
    let lam = move |p: &[f64]| planted.unwrap_or(0.0) * p[0] * p[0];
    let (l2, r2) = (lie.clone(), r.clone());
    let cocycle = Cocycle {
        generators: vec![ScalarField::new(move |p| Ok(c + lam(&r2.apply(p)) - lam(p)))],
        lie: vec![FlowCocycle::new(move |t, p| Ok(c * t + lam(&l2.flow(t, p)?) - lam(p)))],
    };
    let action = GroupAction {
        generators: vec![r],
        relations: vec![],
        lie: vec![lie],
    };
    let b = EquivariantBundle::new(ParameterSpace::euclidean(2, 1.5), action, cocycle).unwrap();
    (b, Connection::new(form(&["-0.3*x2", "0.3*x1"])))
}

fn probes(b: &EquivariantBundle) -> ProbeSet {
    ProbeSet::new(&b.space, 48, 48, 7)
}

fn coefficient(terms: &[Term], label: &str) -> f64 {
    terms.iter().find(|t| t.label == label).map_or(0.0, |t| t.coefficient)
}

#[test]
fn zero_cocycle_gives_zero_theta() {
    let b = z_with(ScalarField::constant(0.0));
    let a = ScalarAnsatz::library(&b.space, 3, true);
    let out = solve_group_coboundary(&b, &Section::reference(), &a, &probes(&b), &cfg()).unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.terms.is_empty());
    assert_eq!(c.integer_lifts, vec![0]);
}

#[test]
fn planted_theta_is_recovered() {
    let theta = |x: f64| 0.2 * x.sin();
    let b = z_with(ScalarField::from_fn(move |p| theta(p[0] + 1.0) - theta(p[0])));
    let a = ScalarAnsatz::from_exprs(1, &[e("sin(x1)", 1), e("cos(x1)", 1)]);
    let out = solve_group_coboundary(&b, &Section::reference(), &a, &probes(&b), &cfg()).unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-6, "{}", c.holdout_residual);
    assert!((coefficient(&c.terms, "sin(x1)") - 0.2).abs() < 1e-8);
}

#[test]
fn half_integer_cocycle_needs_more_than_constants() {
    let b = z_with(ScalarField::constant(0.5));
    let constants = ScalarAnsatz::from_exprs(1, &[e("1", 1)]);
    let out = solve_group_coboundary(&b, &Section::reference(), &constants, &probes(&b), &cfg()).unwrap();
    match out {
        Outcome::NoCertificate(n) => {
            assert!((n.best_fit_residual - 0.5).abs() < 1e-12);
            assert!(n.note.contains("not a proof"));
        }
        Outcome::Certificate(_) => panic!("constants cannot solve θ(x+1) − θ(x) = 1/2"),
    }
    let linear = ScalarAnsatz::from_exprs(1, &[e("x1", 1)]);
    let out = solve_group_coboundary(&b, &Section::reference(), &linear, &probes(&b), &cfg()).unwrap();
    let c = out.certificate().expect("θ = x/2");
    assert!((coefficient(&c.terms, "x1") - 0.5).abs() < 1e-10);
}

#[test]
fn constant_infinitesimal_anomaly_has_no_lie_primitive() {
    let (b, conn) = rotation(0.25, None);
    let a = ScalarAnsatz::library(&b.space, 4, true);
    let out = solve_lie_coboundary(&b, &Section::reference(), &a, &probes(&b), &cfg()).unwrap();
    assert!(!out.is_certificate());
    let w = fixed_point_obstruction(&b, &conn, &Section::reference(), 8, 3, 1e-5).unwrap().expect("witness");
    assert!(w.point.iter().all(|v| v.abs() < 1e-9));
    assert!((w.moment - 0.25).abs() < 1e-6);
}

#[test]
fn planted_lambda_is_recovered() {
    let (b, _) = rotation(0.0, Some(0.1));
    let a = ScalarAnsatz::library(&b.space, 4, true);
    let out = solve_lie_coboundary(&b, &Section::reference(), &a, &probes(&b), &cfg()).unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-6, "{}", c.holdout_residual);
    let theta = solve_group_coboundary(&b, &Section::reference(), &a, &probes(&b), &cfg()).unwrap();
    assert!(theta.certificate().unwrap().holdout_residual < 1e-6);
}

#[test]
fn invariant_rho_is_its_own_primitive() {
    let (b, _) = rotation(0.0, None);
    let conn = Connection::new(form(&["-0.3*x2", "0.3*x1"]));
    let a = FormAnsatz::library(&b.space, 1);
    let out = solve_equivariant_primitive(&b, &conn, &Section::reference(), &a, &probes(&b), &cfg(), PrimitiveOptions::default())
        .unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-6);
    assert!((coefficient(&c.terms, "(x2)*dx1") + 0.3).abs() < 1e-7);
    assert!((coefficient(&c.terms, "(x1)*dx2") - 0.3).abs() < 1e-7);
}

#[test]
fn flat_trivial_bundle_has_zero_primitive() {
    let b = z_with(ScalarField::constant(0.0));
    let a = FormAnsatz::library(&b.space, 2);
    let out = solve_equivariant_primitive(
        &b,
        &Connection::flat_trivial(),
        &Section::reference(),
        &a,
        &probes(&b),
        &cfg(),
        PrimitiveOptions::default(),
    )
    .unwrap();
    assert!(out.certificate().unwrap().terms.is_empty());
}

#[test]
fn holonomy_fit_finds_half_dt() {
    let b = z_with(ScalarField::constant(0.5));
    let opts = PrimitiveOptions {
        holonomy: true,
        ..PrimitiveOptions::default()
    };
    let with_dt = FormAnsatz::from_exprs(&[vec![e("1", 1)], vec![e("x1", 1)]]);
    let out = solve_equivariant_primitive(&b, &Connection::flat_trivial(), &Section::reference(), &with_dt, &probes(&b), &cfg(), opts)
        .unwrap();
    let c = out.certificate().expect("β = dt/2");
    assert!((coefficient(&c.terms, "(1)*dx1") - 0.5).abs() < 1e-10);
    let without = FormAnsatz::from_exprs(&[vec![e("x1", 1)]]);
    let out = solve_equivariant_primitive(&b, &Connection::flat_trivial(), &Section::reference(), &without, &probes(&b), &cfg(), opts)
        .unwrap();
    assert!(!out.is_certificate());
}

#[test]
fn sigma_of_x_dx_is_not_exact_over_constants() {
    let b = z_with(ScalarField::constant(0.0));
    let beta0 = form(&["x1"]);
    let constants = ScalarAnsatz::from_exprs(1, &[e("1", 1)]);
    let r = sigma_obstruction(&b, &beta0, &[0.0], &constants, &probes(&b), &cfg()).unwrap();
    assert!(!r.outcome.is_certificate());
    let quad = ScalarAnsatz::from_exprs(1, &[e("x1", 1), e("x1^2", 1)]);
    let r = sigma_obstruction(&b, &beta0, &[0.0], &quad, &probes(&b), &cfg()).unwrap();
    let c = r.outcome.certificate().expect("ρ = x²/2");
    assert!(c.holdout_residual < 1e-6);
    assert!(r.spread[0] < 1e-9);
}

#[test]
fn sigma_removes_planted_gauge() {
    let b = z_with(ScalarField::constant(0.0));
    // ρ* = 0.5 dx, τ = 0.1 x³
    let beta0 = form(&["0.5 + 0.3*x1^2"]);
    let a = ScalarAnsatz::library(&b.space, 4, false);
    let r = sigma_obstruction(&b, &beta0, &[0.0], &a, &probes(&b), &cfg()).unwrap();
    let c = r.outcome.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-6, "{}", c.holdout_residual);
}

#[test]
fn enlarging_the_ansatz_never_hurts() {
    let theta = |x: f64| 0.2 * x.sin() + 0.05 * x * x;
    let b = z_with(ScalarField::from_fn(move |p| theta(p[0] + 1.0) - theta(p[0])));
    let p = probes(&b);
    let mut last = f64::INFINITY;
    for n in 1..=4 {
        let exprs: Vec<_> = ["x1", "x1^2", "sin(x1)", "cos(x1)"][..n].iter().map(|s| e(s, 1)).collect();
        let a = ScalarAnsatz::from_exprs(1, &exprs);
        let r = solve_group_coboundary(&b, &Section::reference(), &a, &p, &cfg()).unwrap().fit_residual();
        assert!(r <= last + 1e-12, "{r} > {last}");
        last = r;
    }
    assert!(last < 1e-9);
}

fn verdict_of(b: &EquivariantBundle, conn: &Connection, candidates: &[(String, OneForm)]) -> VerdictReport {
    let config = cfg();
    let p = ProbeSet::new(&b.space, config.probes, config.holdout, config.seed);
    let sa = ScalarAnsatz::library(&b.space, 4, true);
    let fa = FormAnsatz::library(&b.space, 1);
    verdict(
        b,
        conn,
        &VerdictInputs {
            scalar_ansatz: &sa,
            form_ansatz: &fa,
            candidates,
            probes: &p,
            config: &config,
        },
    )
    .unwrap()
}

#[test]
fn z_example_cancels_with_half_dt() {
    let b = z_with(ScalarField::constant(0.5));
    let rep = verdict_of(&b, &Connection::flat_trivial(), &[("half_dt".into(), form(&["1/2"]))]);
    assert_eq!(rep.verdict, Verdict::Cancels);
    assert!((rep.character.as_ref().unwrap().values[0].value() - 0.5).abs() < 1e-9);
    let km = rep.k_membership.as_ref().unwrap();
    assert!((km.lambda[0] - 1.0).abs() < 1e-9);
    let beta = rep.beta.as_ref().unwrap();
    assert!((beta.covector_at_basepoint[0] - 0.5).abs() < 1e-9);
    assert!(rep.validation.as_ref().unwrap().passed);
}

#[test]
fn z_example_without_candidates_is_inconclusive() {
    let b = z_with(ScalarField::constant(0.5));
    let rep = verdict_of(&b, &Connection::flat_trivial(), &[]);
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert_eq!(rep.deciding_stage.as_deref(), Some("k-membership"));
    assert!(rep.note.contains("not a proof"));
}

#[test]
fn rotation_anomaly_is_obstructed() {
    let (b, conn) = rotation(0.25, None);
    let rep = verdict_of(&b, &conn, &[]);
    assert_eq!(rep.verdict, Verdict::Obstructed);
    assert_eq!(rep.exit_code, 2);
    assert!(rep.witness.is_some());
}

#[test]
fn invariant_rotation_cancels() {
    let (b, conn) = rotation(0.0, None);
    let rep = verdict_of(&b, &conn, &[]);
    assert_eq!(rep.verdict, Verdict::Cancels, "{:?}", rep.stages);
}
