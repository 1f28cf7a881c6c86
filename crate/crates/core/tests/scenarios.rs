//! Bundled scenario files: parse/print round trip, strictness, expected verdicts.

use eqbundle::scenario::{parse_scenario, print_scenario, Model, BUNDLED};
use eqbundle::solvers::Verdict;
use eqbundle::Error;
use proptest::prelude::*;

#[test]
fn every_bundled_file_round_trips() {
    for (name, text) in BUNDLED {
        let ast = parse_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = print_scenario(&ast).unwrap();
        let again = parse_scenario(&printed).unwrap_or_else(|e| panic!("{name} reprinted: {e}"));
        assert_eq!(ast, again, "{name}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = BUNDLED[0].1.replacen("[space]", "[space]\nflavour = 1", 1);
    assert!(matches!(parse_scenario(&text), Err(Error::Syntax { .. })));
}

#[test]
fn unresolved_names_are_semantic_errors() {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == "z_on_r_half").unwrap();
    let text = text.replacen("\"1/2\"", "\"y7 + 1\"", 1);
    match parse_scenario(&text) {
        Err(Error::Syntax { pos, .. }) | Err(Error::Semantic { pos, .. }) => assert!(pos.line > 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bundled_verdicts() {
    let expected = [
        ("z_on_r_half", Verdict::Cancels),
        ("z_on_r_periodic_candidates", Verdict::Inconclusive),
        ("trivial", Verdict::Cancels),
        ("rotation", Verdict::Obstructed),
        ("rotation_invariant", Verdict::Cancels),
        ("euclidean_plane", Verdict::Cancels),
        ("z2_character", Verdict::Cancels),
        ("torus_flat", Verdict::Cancels),
    ];
    for (name, want) in expected {
        let text = BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1;
        let m = Model::load(text).unwrap();
        assert_eq!(m.verdict(&m.config).unwrap().verdict, want, "{name}");
    }
    for (name, want) in [
        ("lattice_z_example", Verdict::Cancels),
        ("lattice_z_restricted", Verdict::Inconclusive),
        ("lattice_planted", Verdict::Cancels),
    ] {
        let text = BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1;
        let m = Model::load(text).unwrap();
        assert_eq!(m.verdict_local(&m.config).unwrap().verdict, want, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any numeric cocycle constant survives print and reparse.
    #[test]
    fn numeric_cocycles_round_trip(c in -5.0f64..5.0) {
        let (_, text) = BUNDLED.iter().find(|(n, _)| *n == "z_on_r_half").unwrap();
        let text = text.replacen("\"1/2\"", &format!("\"{c}\""), 1);
        let ast = parse_scenario(&text).unwrap();
        let again = parse_scenario(&print_scenario(&ast).unwrap()).unwrap();
        prop_assert_eq!(ast, again);
    }
}
