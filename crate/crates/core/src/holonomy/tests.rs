use proptest::prelude::*;

use super::*;
use crate::bundle::FlowCocycle;
use crate::dsl::{parse_with, Context};
use crate::geometry::{GroupElement, LieElement, VectorField};

fn form(srcs: &[&str]) -> OneForm {
    let ctx = Context::coords(srcs.len());
    OneForm::from_exprs(srcs.iter().map(|s| parse_with(s, &ctx).unwrap()).collect())
}

fn z_example() -> EquivariantBundle {
    let action = GroupAction {
        generators: vec![GroupElement::translation("g", vec![1.0])],
        relations: vec![],
        lie: vec![],
    };
    let cocycle = Cocycle {
        generators: vec![ScalarField::constant(0.5)],
        lie: vec![],
    };
    EquivariantBundle::new(ParameterSpace::euclidean(1, 2.0), action, cocycle).unwrap()
}

/// ℤ² translations of the plane with curvature 0.4 dx∧dy; the cocycle
/// α_a = 0.4·y·(shift a in x) keeps ρ = 0.4 x dy equivariant.
fn curved_plane() -> (EquivariantBundle, Connection) {
    let a = GroupElement::translation("a", vec![1.0, 0.0]);
    let b = GroupElement::translation("b", vec![0.0, 1.0]);
    let x = LieElement::with_flow("X", VectorField::constant(vec![0.0, 0.0]), |_, p| Ok(p.to_vec()));
    let action = GroupAction {
        generators: vec![a, b],
        relations: vec![],
        lie: vec![x],
    };
    let cocycle = Cocycle {
        generators: vec![ScalarField::from_fn(|p| 0.4 * p[1] + 0.1), ScalarField::constant(0.3)],
        lie: vec![FlowCocycle::zero()],
    };
    let b = EquivariantBundle::new(ParameterSpace::euclidean(2, 1.5), action, cocycle).unwrap();
    (b, Connection::new(form(&["0", "0.4*x1"])))
}

#[test]
fn z_example_holonomy_is_one_half() {
    let b = z_example();
    let gamma = Path::straight(&[0.0], &[1.0]);
    let h = equivariant_holonomy(&b, &Connection::flat_trivial(), &Section::reference(), &Word::generator(0), &gamma, "unit")
        .unwrap();
    assert!(h.value.distance(CircleValue::new(0.5)) < 1e-8);
    assert!(h.cross_check < 1e-8);
}

#[test]
fn endpoint_outside_c_phi_is_rejected() {
    let b = z_example();
    let gamma = Path::straight(&[0.0], &[0.9]);
    let err = holonomy_formula(&b, &Connection::flat_trivial(), &Section::reference(), &Word::generator(0), &gamma, 64)
        .unwrap_err();
    assert!(matches!(err, Error::NotInCPhi { .. }), "{err}");
}

#[test]
fn lift_phase_tracks_line_integral() {
    let (b, conn) = curved_plane();
    let path = Path::polyline(vec![vec![0.0, 0.0], vec![0.5, 0.3], vec![1.0, -0.2]]).unwrap();
    let lift = horizontal_lift(&b.space, &conn, &Section::reference(), &path, CircleValue::ZERO, 256).unwrap();
    let integral = line_integral_n(&conn.rho_ref, &path, 256).unwrap();
    assert!(lift.endpoint_phase.distance(CircleValue::new(integral)) < 1e-12);
    let z = lift_rk4(&conn.rho_ref, &path, 256, Complex64::new(1.0, 0.0)).unwrap();
    assert!((z.norm() - 1.0).abs() < 1e-8);
    assert!(CircleValue::new(z.arg() / TWO_PI).distance(lift.endpoint_phase) < 1e-8);
}

#[test]
fn flat_character_round_trip() {
    let space = ParameterSpace::euclidean(2, 1.5);
    let action = GroupAction {
        generators: vec![
            GroupElement::translation("a", vec![1.0, 0.0]),
            GroupElement::translation("b", vec![0.0, 1.0]),
        ],
        relations: vec![],
        lie: vec![],
    };
    let h = Character::new(action.labels(), vec![0.25, 0.7]);
    let (b, conn) = build_flat_from_character(&space, &action, &h).unwrap();
    let probes: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![-0.5, 0.7]];
    let k = flat_character(&b, &conn, &Section::reference(), &probes, 5, SPREAD_TOL).unwrap();
    for (got, want) in k.values.iter().zip(&h.values) {
        assert!(got.distance(*want) < 1e-9);
    }
    let w = action.parse_word("a*b^-2").unwrap();
    assert!(k.eval(&w).distance(CircleValue::new(0.25 - 1.4)) < 1e-9);
}

#[test]
fn invalid_characters_are_rejected() {
    let space = ParameterSpace::euclidean(1, 1.0);
    let mut action = GroupAction {
        generators: vec![GroupElement::translation("g", vec![1.0])],
        relations: vec![],
        lie: vec![],
    };
    let err = build_flat_from_character(&space, &action, &Character::new(vec![], vec![])).unwrap_err();
    assert!(matches!(err, Error::InvalidCharacter(_)));
    action.generators[0].identity_component = true;
    let err = build_flat_from_character(&space, &action, &Character::new(action.labels(), vec![0.5])).unwrap_err();
    assert!(matches!(err, Error::InvalidCharacter(_)));
}

#[test]
fn curved_connection_has_no_character() {
    let (b, conn) = curved_plane();
    let err = flat_character(&b, &conn, &Section::reference(), &[vec![0.0, 0.0]], 5, SPREAD_TOL).unwrap_err();
    assert!(matches!(err, Error::NotFlat { .. }));
}

#[test]
fn k_of_half_dt() {
    let b = z_example();
    let beta = form(&["0.5"]);
    let gamma = Path::straight(&[0.3], &[1.3]);
    let k = k_of_beta(&b, &beta, &Word::generator(0), &gamma, &[vec![0.0], vec![0.7]], 3).unwrap();
    assert!((k.period - 0.5).abs() < 1e-12);
    assert!(k.spread < 1e-12);
    let err = k_of_beta(&b, &form(&["x1"]), &Word::generator(0), &gamma, &[vec![0.0]], 3).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

#[test]
fn transport_reproduces_alpha() {
    let (b, conn) = curved_plane();
    let w = Word::generator(0);
    let (x, y) = ([0.3, -0.4], [-0.2, 0.6]);
    let zeta = Path::straight(&y, &x);
    let t = transport_alpha(&b, &conn, &Section::reference(), &w, &x, &y, &zeta).unwrap();
    let direct = b.alpha(&Section::reference(), &w, &x).unwrap();
    assert!(t.distance(direct) < 1e-9);
}

fn word_strategy() -> impl Strategy<Value = Word> {
    prop::collection::vec((0usize..2, prop_oneof![Just(-1i32), Just(1)]), 1..4).prop_map(|steps| {
        let mut w = Word::identity();
        for (g, p) in steps {
            w.push(g, p);
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lift_and_formula_agree(word in word_strategy(), start in prop::array::uniform2(-1.0f64..1.0), bend in prop::array::uniform2(-0.5f64..0.5)) {
        let (b, conn) = curved_plane();
        let end = b.action.apply(&word, &start);
        let mid: Vec<f64> = (0..2).map(|i| 0.5 * (start[i] + end[i]) + bend[i]).collect();
        let path = Path::polyline(vec![start.to_vec(), mid, end]).unwrap();
        let h = equivariant_holonomy(&b, &conn, &Section::reference(), &word, &path, "p").unwrap();
        prop_assert!(h.cross_check < DUAL_METHOD_TOL);
    }

    #[test]
    fn holonomy_is_translation_and_conjugation_invariant(
        word in word_strategy(),
        translate in word_strategy(),
        start in prop::array::uniform2(-1.0f64..1.0),
        zeta_start in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let (b, conn) = curved_plane();
        let end = b.action.apply(&word, &start);
        let gamma = Path::straight(&start, &end);
        let zeta = Path::straight(&zeta_start, &start);
        let rep = holonomy_invariance_suite(&b, &conn, &Section::reference(), &word, &translate, &gamma, &zeta).unwrap();
        prop_assert!(rep.translated < 1e-6, "translated {}", rep.translated);
        prop_assert!(rep.conjugated < 1e-6, "conjugated {}", rep.conjugated);
    }

    #[test]
    fn holonomy_is_gauge_independent(word in word_strategy(), start in prop::array::uniform2(-1.0f64..1.0), c in -1.0f64..1.0) {
        let (b, conn) = curved_plane();
        let end = b.action.apply(&word, &start);
        let gamma = Path::straight(&start, &end);
        let theta = ScalarField::from_fn(move |p| c * (p[0] * p[1]).sin());
        let shifted = Section::reference().shifted("S'", &theta);
        let h0 = holonomy_formula(&b, &conn, &Section::reference(), &word, &gamma, QUAD_SAMPLES).unwrap();
        let h1 = holonomy_formula(&b, &conn, &shifted, &word, &gamma, QUAD_SAMPLES).unwrap();
        prop_assert!(h0.distance(h1) < 1e-6, "{} vs {}", h0, h1);
    }
}
