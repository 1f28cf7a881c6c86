use std::f64::consts::PI;

use super::*;
use crate::bundle::Section;
use crate::dsl::{parse_with, Context};
use crate::geometry::OneForm;
use crate::solvers::{Outcome, SolverConfig, Verdict};

fn d(src: &str) -> LocalDensity {
    LocalDensity::new(parse_with(src, &Context::jets(2)).unwrap())
}

fn lat(m: usize, l: f64) -> LatticeBase {
    LatticeBase::new(m, l).unwrap()
}

fn model(lattice: LatticeBase) -> FieldModel {
    FieldModel {
        lattice,
        jet_order: 2,
        generators: vec![],
        relations: vec![],
        lie: vec![],
        rho: LocalOneForm::zero(lattice),
        density_ansatz: default_density_ansatz(2, 2),
        oneform_ansatz: default_oneform_ansatz(lattice, 2),
        default_density_ansatz: true,
        default_oneform_ansatz: true,
    }
}

fn cfg() -> SolverConfig {
    SolverConfig {
        probes: 32,
        holdout: 32,
        ..SolverConfig::default()
    }
}

fn fiber(chi: &str) -> FieldLie {
    FieldLie::FiberTranslation {
        chi: parse_with(chi, &Context::jets(0)).unwrap(),
    }
}

#[test]
fn jets_converge_at_second_order() {
    let err = |m: usize| {
        let l = lat(m, 1.0);
        let s = l.sample(|x| (2.0 * PI * x).sin() + 0.3 * (4.0 * PI * x).cos());
        let jets = l.jets(&s, 2);
        (0..m)
            .map(|i| {
                let x = l.x(i);
                let d1 = 2.0 * PI * (2.0 * PI * x).cos() - 1.2 * PI * (4.0 * PI * x).sin();
                let d2 = -4.0 * PI * PI * (2.0 * PI * x).sin() - 4.8 * PI * PI * (4.0 * PI * x).cos();
                (jets[i][1] - d1).abs().max((jets[i][2] - d2).abs() / 10.0)
            })
            .fold(0.0, f64::max)
    };
    for m in [16, 32, 64] {
        let ratio = err(m) / err(2 * m);
        assert!(ratio >= 3.5, "m = {m}: ratio {ratio}");
    }
}

#[test]
fn integration_of_constants_and_unit_field() {
    let l = lat(10, 1.0);
    assert!((integrate_local(&l, &d("u"), &[1.0; 10]).unwrap() - 1.0).abs() < 1e-14);
    let l = lat(12, 3.0);
    let c = 0.7;
    let density = LocalDensity::constant(c / (l.sites() as f64 * l.spacing()));
    let s: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
    assert!((integrate_local(&l, &density, &s).unwrap() - c).abs() < 1e-14);
}

#[test]
fn integration_matches_analytic_circle_integrals() {
    // ∮ s s′ = 0, ∮ s′² = 2π², ∮ s s″ = −2π² for s = sin 2πx on a unit circle.
    let cases = [("u*u1", 0.0), ("u1^2", 2.0 * PI * PI), ("u*u2", -2.0 * PI * PI)];
    for (src, exact) in cases {
        let err = |m: usize| {
            let l = lat(m, 1.0);
            let s = l.sample(|x| (2.0 * PI * x).sin());
            (integrate_local(&l, &d(src), &s).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 0.01 * (1.0 + exact.abs()), "{src}: {e2}");
        assert!(e2 < 1e-12 || e1 / e2 >= 3.5, "{src}: {e1} then {e2}");
    }
}

#[test]
fn non_finite_density_reports_site() {
    let l = lat(8, 1.0);
    let mut s = vec![1.0; 8];
    s[5] = 0.0;
    let err = integrate_local(&l, &d("1/u"), &s).unwrap_err().to_string();
    assert!(err.contains("site 5"), "{err}");
}

#[test]
fn one_form_is_linear_in_variation() {
    let l = lat(16, 2.0);
    let beta = LocalOneForm::new(l, vec![d("u*u1"), d("sin(u)"), d("x")]);
    let mut r = crate::probes::rng(4);
    let s = l.random_field(3, &mut r);
    let a = l.random_field(3, &mut r);
    let b = l.random_field(3, &mut r);
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
    let lhs = beta.eval(&s, &sum).unwrap();
    let rhs = 2.0 * beta.eval(&s, &a).unwrap() - 0.5 * beta.eval(&s, &b).unwrap();
    assert!((lhs - rhs).abs() < 1e-12);
    let cov = beta.covector(&s).unwrap();
    let paired: f64 = cov.iter().zip(&a).map(|(c, v)| c * v).sum();
    assert!((paired - beta.eval(&s, &a).unwrap()).abs() < 1e-12);
}

#[test]
fn differential_of_a_functional_is_local() {
    let l = lat(16, 2.0);
    let f = LocalFunctional::new(l, d("u^3 + u*u1^2"));
    let df = f.differential();
    let mut r = crate::probes::rng(9);
    let s = l.random_field(3, &mut r);
    let v = l.random_field(3, &mut r);
    let h = 1e-5;
    let plus: Vec<f64> = s.iter().zip(&v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = s.iter().zip(&v).map(|(a, b)| a - h * b).collect();
    let fd = (f.value(&plus).unwrap() - f.value(&minus).unwrap()) / (2.0 * h);
    assert!((fd - df.eval(&s, &v).unwrap()).abs() < 1e-7);
    let dd = df.exterior_derivative();
    assert!(dd.eval(&s, &v, &plus).unwrap().abs() < 1e-10);
}

#[test]
fn lie_derivatives_by_flow_and_density() {
    let l = lat(16, 1.0);
    let mut r = crate::probes::rng(2);
    let s = l.random_field(3, &mut r);
    let constant = LocalFunctional::new(l, LocalDensity::constant(2.5));
    for x in [fiber("1"), FieldLie::Shift] {
        let out = lie_derivative_local(&constant, &x, &s, 1e-6).unwrap();
        assert!(out.by_flow.abs() < 1e-9 && out.by_density.abs() < 1e-12);
    }
    let square = LocalFunctional::new(l, d("u^2"));
    let out = lie_derivative_local(&square, &FieldLie::Shift, &s, 1e-6).unwrap();
    assert!(out.by_density.abs() < 1e-12);
    let out = lie_derivative_local(&square, &fiber("1"), &s, 1e-6).unwrap();
    let two_sum = 2.0 * s.iter().sum::<f64>() * l.spacing();
    assert!((out.by_density - two_sum).abs() < 1e-12);
    assert!((out.by_flow - two_sum).abs() < 1e-9);
    let wavy = LocalFunctional::new(l, d("u*u1^2"));
    lie_derivative_local(&wavy, &fiber("sin(2*pi*x)"), &s, 1e-6).unwrap();
}

fn fiber_model(l: LatticeBase, potential: &str, rho: LocalOneForm) -> FieldModel {
    FieldModel {
        lie: vec![FieldLieSpec {
            label: "X".into(),
            lie: fiber("1"),
            potential: d(potential),
        }],
        rho,
        ..model(l)
    }
}

#[test]
fn declared_local_connection_passes() {
    let l = lat(12, 1.0);
    let m = fiber_model(l, "0.2*u^2", LocalOneForm::new(l, vec![d("u"), d("u^2")]));
    let b = m.bundle().unwrap();
    let probes = m.probe_set(6, 0, 3);
    let rep = local_connection_check(&m, &b, &m.connection(), &probes.fit).unwrap();
    assert!(rep.rho_residual < 1e-12);
    assert!(rep.curvature_residual < 1e-6);
    assert!(rep.moment_residual[0] < 1e-6);
}

#[test]
fn nonlocal_connection_is_caught() {
    let l = lat(12, 1.0);
    let m = fiber_model(l, "0", LocalOneForm::new(l, vec![d("u")]));
    let b = m.bundle().unwrap();
    let n = l.sites() as f64;
    // (Σs)(Σδs)/m², which agrees with the declared u·δu/L on constant fields
    let nonlocal = Connection::new(OneForm::new(move |s: &[f64]| Ok(vec![s.iter().sum::<f64>() / (n * n); s.len()])));
    let m = FieldModel {
        rho: LocalOneForm::new(l, vec![d("u")]),
        ..m
    };
    let probes = m.probe_set(6, 0, 3);
    let err = local_connection_check(&m, &b, &nonlocal, &probes.fit).unwrap_err();
    assert!(matches!(err, crate::error::Error::LocalityDeclaration(_)), "{err}");
    assert!(err.to_string().contains("sites"));
}

#[test]
fn zero_anomaly_gives_zero_lambda() {
    let l = lat(12, 1.0);
    let m = fiber_model(l, "0", LocalOneForm::zero(l));
    let b = m.bundle().unwrap();
    let p = m.probe_set(32, 32, 7);
    let out = local_section_search_lie(&m, &b, &Section::reference(), &m.density_ansatz, true, &p, &cfg()).unwrap();
    assert!(out.certificate().unwrap().terms.is_empty());
}

#[test]
fn planted_local_lambda_is_recovered() {
    let l = lat(16, 1.0);
    let m = fiber_model(l, "0.3*u^2", LocalOneForm::zero(l));
    let b = m.bundle().unwrap();
    let p = m.probe_set(32, 32, 7);
    let out = local_section_search_lie(&m, &b, &Section::reference(), &m.density_ansatz, true, &p, &cfg()).unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-8, "{}", c.holdout_residual);
    // generic re-check on fresh fields
    let fresh = m.probe_set(0, 8, 99).holdout;
    for s in &fresh {
        let generic = crate::bundle::anomaly_at(&b, &Section::reference(), 0, s).unwrap();
        let local = lie_derivative_local(&c.value, &fiber("1"), s, 1e-6).unwrap();
        assert!((generic - local.by_flow).abs() < 1e-5);
    }
}

#[test]
fn zero_mode_anomaly_has_no_local_lambda() {
    let l = lat(16, 1.0);
    let m = fiber_model(l, "0", LocalOneForm::zero(l));
    let h = l.spacing();
    let len = l.length();
    // α_t(s) = F(s + t) − F(s) with F = Z³/(3L), Z = Σ s h, so 𝔞 = Z²
    let big_f = move |s: &[f64]| s.iter().sum::<f64>().mul_add(h, 0.0).powi(3) / (3.0 * len);
    let flow = m.action().lie[0].clone();
    let cocycle = Cocycle {
        generators: vec![],
        lie: vec![FlowCocycle::new(move |t, s| Ok(big_f(&flow.flow(t, s)?) - big_f(s)))],
    };
    let b = EquivariantBundle::new(m.space(), m.action(), cocycle).unwrap();
    let p = m.probe_set(32, 32, 7);
    let s = &p.fit[0];
    let z = s.iter().sum::<f64>() * h;
    assert!((crate::bundle::anomaly_at(&b, &Section::reference(), 0, s).unwrap() - z * z).abs() < 1e-6);
    let densities = default_density_ansatz(2, 4);
    let out = local_section_search_lie(&m, &b, &Section::reference(), &densities, true, &p, &cfg()).unwrap();
    match out {
        Outcome::NoCertificate(n) => assert!(n.best_fit_residual > 1e-3, "{}", n.best_fit_residual),
        Outcome::Certificate(c) => panic!("nonlocal anomaly fitted: {:?}", c.terms),
    }
}

fn lattice_z(forms: Option<Vec<LocalOneForm>>) -> (FieldModel, EquivariantBundle) {
    let l = lat(12, 2.0);
    let mut m = model(l);
    m.generators = vec![FieldGeneratorSpec {
        label: "g".into(),
        generator: FieldGenerator::FiberAffine {
            scale: 1.0,
            chi: parse_with("1", &Context::jets(0)).unwrap(),
        },
        identity_component: false,
        cocycle: LocalDensity::constant(0.5 / l.length()),
    }];
    if let Some(f) = forms {
        m.oneform_ansatz = f;
        m.default_oneform_ansatz = false;
    }
    let b = m.bundle().unwrap();
    (m, b)
}

#[test]
fn lattice_example_gives_half_delta_u() {
    let (m, b) = lattice_z(None);
    let p = m.probe_set(32, 32, 7);
    let out = local_global_search(&m, &b, &m.connection(), &Section::reference(), &m.oneform_ansatz, true, &p, &cfg()).unwrap();
    let c = out.certificate().expect("certificate");
    assert!(c.holdout_residual < 1e-8, "{}", c.holdout_residual);
    let expected = 0.5 / m.lattice.length();
    let cov = c.value.covector(&p.fit[0]).unwrap();
    for v in cov {
        assert!((v - expected * m.lattice.spacing()).abs() < 1e-9, "{v}");
    }
    let rep = verdict_local(&m, &b, &m.connection(), &p, &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::Cancels);
    assert!(rep.validation.unwrap().passed);
}

#[test]
fn restricted_lattice_ansatz_has_no_certificate() {
    let l = lat(12, 2.0);
    let restricted = vec![
        LocalOneForm::new(l, vec![d("u1")]),
        LocalOneForm::new(l, vec![d("u2")]),
        LocalOneForm::new(l, vec![d("u*u1")]),
    ];
    let (m, b) = lattice_z(Some(restricted));
    let p = m.probe_set(32, 32, 7);
    let out = local_global_search(&m, &b, &m.connection(), &Section::reference(), &m.oneform_ansatz, false, &p, &cfg()).unwrap();
    assert!(!out.is_certificate());
    let rep = verdict_local(&m, &b, &m.connection(), &p, &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert!(rep.note.contains("not a proof"));
}

#[test]
fn trivial_field_bundle_has_zero_beta() {
    let l = lat(10, 1.0);
    let m = model(l);
    let b = m.bundle().unwrap();
    let p = m.probe_set(16, 16, 7);
    let out = local_global_search(&m, &b, &m.connection(), &Section::reference(), &m.oneform_ansatz, true, &p, &cfg()).unwrap();
    assert!(out.certificate().unwrap().terms.is_empty());
}
