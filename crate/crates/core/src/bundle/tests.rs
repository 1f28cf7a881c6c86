use super::conventions::{calibrate, ANOMALY_SIGN, DESCENT_SIGN};
use super::*;
use crate::dsl::{parse_with, Context};
use crate::geometry::{GroupElement, LieElement, VectorField};
use crate::probes::ProbeSet;

fn sf(src: &str, dim: usize) -> ScalarField {
    ScalarField::from_expr(parse_with(src, &Context::coords(dim)).unwrap(), dim)
}

fn form(srcs: &[&str]) -> OneForm {
    let d = srcs.len();
    OneForm::from_exprs(srcs.iter().map(|s| parse_with(s, &Context::coords(d)).unwrap()).collect())
}

fn z_on_r(alpha: f64) -> EquivariantBundle {
    let action = GroupAction {
        generators: vec![GroupElement::translation("g", vec![1.0])],
        relations: vec![],
        lie: vec![],
    };
    let cocycle = Cocycle {
        generators: vec![ScalarField::constant(alpha)],
        lie: vec![],
    };
    EquivariantBundle::new(ParameterSpace::euclidean(1, 2.0), action, cocycle).unwrap()
}

fn rotation_lie() -> LieElement {
    LieElement::with_flow(
        "X",
        VectorField::new(|p| Ok(vec![-p[1], p[0]])),
        |t, p| Ok(vec![t.cos() * p[0] - t.sin() * p[1], t.sin() * p[0] + t.cos() * p[1]]),
    )
}

fn rotation(c: f64) -> (EquivariantBundle, Connection) {
    let r = GroupElement::new(
        "r",
        |p| vec![1f64.cos() * p[0] - 1f64.sin() * p[1], 1f64.sin() * p[0] + 1f64.cos() * p[1]],
        |p| vec![1f64.cos() * p[0] + 1f64.sin() * p[1], -1f64.sin() * p[0] + 1f64.cos() * p[1]],
        true,
    );
    let action = GroupAction {
        generators: vec![r],
        relations: vec![],
        lie: vec![rotation_lie()],
    };
    let cocycle = Cocycle {
        generators: vec![ScalarField::constant(c)],
        lie: vec![FlowCocycle::new(move |t, _| Ok(c * t))],
    };
    let b = EquivariantBundle::new(ParameterSpace::euclidean(2, 1.5), action, cocycle).unwrap();
    (b, Connection::new(form(&["-0.3*x2", "0.3*x1"])))
}

/// Rotation plus both translations, with a planted coboundary Λ* = 0.1 x1².
fn euclidean_plane(corrupt: bool) -> EquivariantBundle {
    let lam = |p: &[f64]| 0.1 * p[0] * p[0];
    let rot = rotation_lie();
    let t1 = LieElement::with_flow("T1", VectorField::constant(vec![1.0, 0.0]), |t, p| Ok(vec![p[0] + t, p[1]]));
    let t2 = LieElement::with_flow("T2", VectorField::constant(vec![0.0, 1.0]), |t, p| Ok(vec![p[0], p[1] + t]));
    let (r2, a1, a2) = (rot.clone(), t1.clone(), t2.clone());
    let cocycle = Cocycle {
        generators: vec![],
        lie: vec![
            FlowCocycle::new(move |t, p| Ok(0.25 * t + lam(&r2.flow(t, p)?) - lam(p))),
            FlowCocycle::new(move |t, p| {
                let extra = if corrupt { t * p[1] } else { 0.0 };
                Ok(lam(&a1.flow(t, p)?) - lam(p) + extra)
            }),
            FlowCocycle::new(move |t, p| Ok(lam(&a2.flow(t, p)?) - lam(p))),
        ],
    };
    let action = GroupAction {
        generators: vec![],
        relations: vec![],
        lie: vec![rot, t1, t2],
    };
    EquivariantBundle::new_unchecked(ParameterSpace::euclidean(2, 1.5), action, cocycle).unwrap()
}

fn tilted() -> Section {
    Section::new("tilted", sf("0.2*x1*x2 + 0.1*x1", 2))
}

fn probes(space: &ParameterSpace, n: usize) -> Vec<Vec<f64>> {
    ProbeSet::new(space, n, 0, 11).fit
}

#[test]
fn z_on_r_cocycle_is_exact() {
    let b = z_on_r(0.5);
    let rep = b.check_cocycle(4, 32, 1).unwrap();
    assert!(rep.max_residual < 1e-12);
    assert!(rep.checks > 0);
    let w = b.action.parse_word("g^3").unwrap();
    assert!(b.alpha(&Section::reference(), &w, &[0.3]).unwrap().approx_eq(CircleValue::new(1.5), 1e-12));
}

#[test]
fn homomorphism_cocycle_on_z2() {
    let action = GroupAction {
        generators: vec![
            GroupElement::translation("g", vec![1.0, 0.0]),
            GroupElement::translation("h", vec![0.0, 1.0]),
        ],
        relations: vec![],
        lie: vec![],
    };
    let mut action = action;
    action.relations = vec![action.parse_word("g*h*g^-1*h^-1").unwrap()];
    let good = Cocycle {
        generators: vec![ScalarField::constant(1.0 / 3.0), ScalarField::constant(0.25)],
        lie: vec![],
    };
    let space = ParameterSpace::euclidean(2, 2.0);
    let b = EquivariantBundle::new(space.clone(), action.clone(), good).unwrap();
    assert!(b.check_cocycle(4, 16, 2).unwrap().max_residual < 1e-12);

    let bad = Cocycle {
        generators: vec![sf("1/3 + 0.1*x2", 2), ScalarField::constant(0.25)],
        lie: vec![],
    };
    let err = EquivariantBundle::new(space.clone(), action.clone(), bad.clone()).unwrap_err();
    assert_eq!(err.kind(), "cocycle-violation");
    let b = EquivariantBundle::new_unchecked(space, action, bad).unwrap();
    let rep = b.check_cocycle(4, 16, 2).unwrap();
    assert!(rep.max_residual > 0.05, "{}", rep.max_residual);
    assert!(rep.witness.is_some());
}

#[test]
fn section_change_formula() {
    let b = z_on_r(0.5);
    let s = Section::new("sq", sf("x1^2", 1));
    for n in [-2, 1, 3] {
        let w = Word::power(0, n);
        for x in [-0.7, 0.1, 0.9] {
            let got = b.alpha(&s, &w, &[x]).unwrap();
            let want = CircleValue::new(n as f64 / 2.0 + x * x - (x + n as f64).powi(2));
            assert!(got.approx_eq(want, 1e-10));
        }
    }
    let c = Section::new("const", ScalarField::constant(0.37));
    let w = Word::generator(0);
    let a = b.alpha(&c, &w, &[0.2]).unwrap();
    assert!(a.approx_eq(CircleValue::new(0.5), 1e-12));
}

#[test]
fn anomaly_is_constant_on_rotation() {
    let (b, conn) = rotation(0.25);
    let a = b.infinitesimal_anomaly(&Section::reference(), 0, AnomalyMethod::FlowDerivative, None).unwrap();
    let m = b
        .infinitesimal_anomaly(&Section::reference(), 0, AnomalyMethod::MomentFormula, Some(&conn))
        .unwrap();
    for p in probes(&b.space, 20) {
        assert!((a.eval(&p).unwrap() - 0.25).abs() < 1e-8);
        assert!((m.eval(&p).unwrap() - 0.25).abs() < 1e-6);
    }
    assert_eq!(b.infinitesimal_anomaly(&Section::reference(), 1, AnomalyMethod::FlowDerivative, None).unwrap_err().kind(), "invalid-input");
    assert!(z_on_r(0.5)
        .infinitesimal_anomaly(&Section::reference(), 0, AnomalyMethod::FlowDerivative, None)
        .is_err());
}

#[test]
fn anomaly_methods_agree_in_a_tilted_section() {
    let (b, conn) = rotation(0.25);
    let s = tilted();
    let a = b.infinitesimal_anomaly(&s, 0, AnomalyMethod::FlowDerivative, None).unwrap();
    let m = b.infinitesimal_anomaly(&s, 0, AnomalyMethod::MomentFormula, Some(&conn)).unwrap();
    for p in probes(&b.space, 40) {
        assert!((a.eval(&p).unwrap() - m.eval(&p).unwrap()).abs() < 1e-4);
    }
}

#[test]
fn anomaly_shifts_by_lie_derivative() {
    let (b, _) = rotation(0.25);
    let s = tilted();
    let a0 = b.anomaly_flow(&Section::reference(), 0);
    let a1 = b.anomaly_flow(&s, 0);
    let lx = b.lie_derivative(0, &s.lambda);
    for p in probes(&b.space, 40) {
        let d = a1.eval(&p).unwrap() - (a0.eval(&p).unwrap() - lx.eval(&p).unwrap());
        assert!(d.abs() < 1e-5, "{d}");
    }
}

#[test]
fn calibration_fixes_house_signs() {
    let (b, conn) = rotation(0.25);
    let cal = calibrate(&b, &conn, &tilted(), &probes(&b.space, 24)).unwrap();
    assert_eq!(cal.anomaly_sign, ANOMALY_SIGN);
    assert_eq!(cal.descent_sign, DESCENT_SIGN);
    assert!(cal.matches_constants());
}

#[test]
fn lie_algebra_cocycle_closes() {
    let b = euclidean_plane(false);
    let s = Section::reference();
    let pts = probes(&b.space, 24);
    for (i, j) in [(0, 1), (0, 2), (1, 2), (1, 1)] {
        let r = lie_cocycle_residual(&b, &s, i, j, &pts).unwrap();
        for p in &pts {
            assert!(r.eval(p).unwrap().abs() < 1e-4, "({i},{j})");
        }
    }
    let bad = euclidean_plane(true);
    let r = lie_cocycle_residual(&bad, &s, 0, 1, &pts).unwrap();
    let worst = pts.iter().map(|p| r.eval(p).unwrap().abs()).fold(0.0, f64::max);
    assert!(worst > 1e-2, "{worst}");
}

#[test]
fn open_lie_basis_is_rejected() {
    let (b, _) = rotation(0.25);
    let mut action = b.action.clone();
    action.lie.push(LieElement::with_flow("T1", VectorField::constant(vec![1.0, 0.0]), |t, p| Ok(vec![p[0] + t, p[1]])));
    let mut cocycle = b.cocycle.clone();
    cocycle.lie.push(FlowCocycle::zero());
    let b2 = EquivariantBundle::new_unchecked(b.space.clone(), action, cocycle).unwrap();
    let err = lie_cocycle_residual(&b2, &Section::reference(), 0, 1, &probes(&b.space, 8)).unwrap_err();
    assert_eq!(err.kind(), "consistency");
}

#[test]
fn curvature_of_rotation_connection() {
    let (b, conn) = rotation(0.25);
    let pts = probes(&b.space, 16);
    let rep = connection_report(&b, &conn, &Section::reference(), &pts).unwrap();
    for p in &pts {
        let w = rep.curvature.omega.eval(p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((w - 0.6).abs() < 1e-6);
        let r2 = p[0] * p[0] + p[1] * p[1];
        assert!((rep.curvature.moment[0].eval(p).unwrap() - (0.25 - 0.3 * r2)).abs() < 1e-6);
    }
    assert!(rep.closedness.max() < 1e-4);

    let other = connection_report(&b, &conn, &tilted(), &pts).unwrap();
    for p in &pts {
        let (u, v) = ([0.3, -0.2], [0.5, 0.9]);
        let d = rep.curvature.omega.eval(p, &u, &v).unwrap() - other.curvature.omega.eval(p, &u, &v).unwrap();
        assert!(d.abs() < 1e-6);
        let m = rep.curvature.moment[0].eval(p).unwrap() - other.curvature.moment[0].eval(p).unwrap();
        assert!(m.abs() < 1e-6, "{m}");
    }
}

#[test]
fn flat_scenario_has_zero_curvature() {
    let b = z_on_r(0.5);
    let pts = probes(&b.space, 8);
    let rep = connection_report(&b, &Connection::flat_trivial(), &Section::reference(), &pts).unwrap();
    for p in &pts {
        assert_eq!(rep.curvature.omega.eval(p, &[1.0], &[1.0]).unwrap(), 0.0);
    }
    assert!(rep.curvature.moment.is_empty());
}

#[test]
fn inconsistent_moment_is_a_consistency_error() {
    let (b, _) = rotation(0.25);
    let bad = Connection::new(form(&["0", "x1"]));
    let pts = probes(&b.space, 8);
    assert!(connection_report(&b, &bad, &Section::reference(), &pts).is_err());
}

#[test]
fn descent_vanishes_for_invariant_connection() {
    let (b, conn) = rotation(0.25);
    let pts = probes(&b.space, 16);
    for s in [Section::reference(), tilted()] {
        let r = descent_residual(&b, &conn, &s, 0);
        assert!(max_form(&r, &pts).unwrap() < 1e-4);
    }
    let r = descent_residual(&b, &Connection::new(form(&["0", "x1"])), &Section::reference(), 0);
    assert!(max_form(&r, &pts).unwrap() > 1e-2);
    let flat = descent_residual(&b, &Connection::flat_trivial(), &Section::reference(), 0);
    assert!(max_form(&flat, &pts).unwrap() < 1e-9);
}

#[test]
fn jumps_in_the_flow_are_resolution_errors() {
    let (b, _) = rotation(0.25);
    let mut cocycle = b.cocycle.clone();
    cocycle.lie[0] = FlowCocycle::new(|t, _| Ok(if t > 0.0 { 0.4 } else { 0.0 }));
    let b2 = EquivariantBundle::new_unchecked(b.space.clone(), b.action.clone(), cocycle).unwrap();
    let err = anomaly_at(&b2, &Section::reference(), 0, &[0.1, 0.2]).unwrap_err();
    assert_eq!(err.kind(), "resolution");
}
