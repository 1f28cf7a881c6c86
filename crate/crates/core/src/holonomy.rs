//! Horizontal lifts, equivariant holonomy, flat characters and the k map.
//!
//! The authoritative holonomy is the closed formula
//! hol_φ(γ) = ∫_γ ρ^S − α^S_φ(γ(0)). Every evaluation also integrates the
//! lift equation dz/ds = 2πi ρ^S(γ̇) z with RK4 on the unit circle and
//! compares the endpoint with φ_𝒰 applied to the starting fiber point.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::bundle::{curvature_fields, max_contraction, Cocycle, Connection, EquivariantBundle, Section};
use crate::error::{Error, Result};
use crate::geometry::calculus::{cumulative_integral, exterior_derivative, line_integral_n, pullback_1, QUAD_SAMPLES};
use crate::geometry::{CircleValue, GroupAction, OneForm, ParameterSpace, Path, ScalarField, Word};
use crate::probes::{probe_directions, random_point, rng};

/// Maximal circle distance between lift and formula values.
pub const DUAL_METHOD_TOL: f64 = 1e-5;

/// Tolerance for γ(1) = φ(γ(0)).
pub const C_PHI_TOL: f64 = 1e-6;

/// Default spread allowed across paths for flat characters and k values.
pub const SPREAD_TOL: f64 = 1e-6;

/// Tolerance for the flatness and closedness preconditions.
pub const FLATNESS_TOL: f64 = 1e-5;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolonomyMethod {
    Lift,
    Formula,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HolonomyResult {
    pub value: CircleValue,
    pub method: HolonomyMethod,
    pub path_id: String,
    pub group_word: String,
    pub formula: CircleValue,
    pub lift: CircleValue,
    /// Circle distance between the two methods.
    pub cross_check: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub endpoint_phase: CircleValue,
    /// Phase at every path node.
    pub phase_history: Vec<CircleValue>,
}

/// Phase of the horizontal lift by cumulative quadrature of ρ^S.
pub fn horizontal_lift(
    space: &ParameterSpace,
    conn: &Connection,
    section: &Section,
    path: &Path,
    start_phase: CircleValue,
    samples: usize,
) -> Result<Lift> {
    let rho = conn.rho_in(space, section);
    let cum = cumulative_integral(&rho, path, samples)?;
    let phase_history: Vec<CircleValue> = cum.iter().map(|c| start_phase + CircleValue::new(*c)).collect();
    Ok(Lift {
        endpoint_phase: *phase_history.last().unwrap(),
        phase_history,
    })
}

/// RK4 integration of dz/ds = 2πi ρ(γ̇) z along each segment; returns z(1).
pub fn lift_rk4(rho: &OneForm, path: &Path, samples: usize, z0: Complex64) -> Result<Complex64> {
    let nodes = path.nodes();
    let total = path.length().max(f64::MIN_POSITIVE);
    let mut z = z0;
    for w in nodes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let len = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt();
        let k = (((len / total) * samples as f64).round() as usize).max(1);
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let rate = |s: f64| -> Result<f64> {
            let p: Vec<f64> = a.iter().zip(&d).map(|(x, dx)| x + s * dx).collect();
            rho.eval(&p, &d)
        };
        let h = 1.0 / k as f64;
        for j in 0..k {
            let s = j as f64 * h;
            let (r0, r1, r2) = (rate(s)?, rate(s + h / 2.0)?, rate(s + h)?);
            let f = |r: f64, z: Complex64| Complex64::new(0.0, TWO_PI * r) * z;
            let k1 = f(r0, z);
            let k2 = f(r1, z + k1 * (h / 2.0));
            let k3 = f(r1, z + k2 * (h / 2.0));
            let k4 = f(r2, z + k3 * h);
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    Ok(z)
}

fn check_c_phi(bundle: &EquivariantBundle, word: &Word, path: &Path) -> Result<()> {
    let target = bundle.action.apply(word, path.start());
    let d = bundle.space.distance(path.end(), &target);
    if !(d < C_PHI_TOL) {
        return Err(Error::NotInCPhi {
            word: bundle.action.display_word(word),
            distance: d,
        });
    }
    Ok(())
}

/// ∫_γ ρ^S − α^S_φ(γ(0)) mod 1.
pub fn holonomy_formula(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    path: &Path,
    samples: usize,
) -> Result<CircleValue> {
    check_c_phi(bundle, word, path)?;
    let rho = conn.rho_in(&bundle.space, section);
    let integral = line_integral_n(&rho, path, samples)?;
    let a = bundle.alpha_lift_in(section, word, path.start())?;
    Ok(CircleValue::new(integral - a))
}

/// Solves γ̄(1) = φ_𝒰(γ(0), 1)·exp(2πih) for h from the RK4 lift.
pub fn holonomy_lift(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    path: &Path,
    samples: usize,
) -> Result<CircleValue> {
    check_c_phi(bundle, word, path)?;
    let rho = conn.rho_in(&bundle.space, section);
    let end = lift_rk4(&rho, path, samples, Complex64::new(1.0, 0.0))?;
    let a = bundle.alpha_lift_in(section, word, path.start())?;
    let fiber = Complex64::from_polar(1.0, TWO_PI * a);
    let ratio = end / fiber;
    Ok(CircleValue::new(ratio.arg() / TWO_PI))
}

/// Both methods; the formula value is returned, the lift is a cross-check.
pub fn equivariant_holonomy(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    path: &Path,
    path_id: &str,
) -> Result<HolonomyResult> {
    equivariant_holonomy_n(bundle, conn, section, word, path, path_id, QUAD_SAMPLES)
}

pub fn equivariant_holonomy_n(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    path: &Path,
    path_id: &str,
    samples: usize,
) -> Result<HolonomyResult> {
    let formula = holonomy_formula(bundle, conn, section, word, path, samples)?;
    let lift = holonomy_lift(bundle, conn, section, word, path, samples)?;
    let cross_check = formula.distance(lift);
    if !(cross_check <= DUAL_METHOD_TOL) {
        return Err(Error::Consistency(format!(
            "lift and formula holonomy disagree by {cross_check:.3e} on word {}",
            bundle.action.display_word(word)
        )));
    }
    Ok(HolonomyResult {
        value: formula,
        method: HolonomyMethod::Formula,
        path_id: path_id.to_string(),
        group_word: bundle.action.display_word(word),
        formula,
        lift,
        cross_check,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InvarianceReport {
    pub holonomy: CircleValue,
    /// |hol_{φ′φφ′⁻¹}(φ′γ) − hol_φ(γ)|.
    pub translated: f64,
    /// |hol_φ(ζ∗γ∗(φ·ζ̄)) − hol_φ(γ)|.
    pub conjugated: f64,
}

/// Translation and conjugation invariance of hol_φ(γ).
///
/// For non-commuting φ′ the translated path lies in C^{φ′φφ′⁻¹}, so that
/// is the word used on the left-hand side.
pub fn holonomy_invariance_suite(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    translate: &Word,
    gamma: &Path,
    zeta: &Path,
) -> Result<InvarianceReport> {
    let base = holonomy_formula(bundle, conn, section, word, gamma, QUAD_SAMPLES)?;
    let action = bundle.action.clone();
    let t = translate.clone();
    let moved = gamma.refine(8).act(|p| action.apply(&t, p));
    let conj_word = translate.mul(word).mul(&translate.inverse());
    let translated = holonomy_formula(bundle, conn, section, &conj_word, &moved, QUAD_SAMPLES)?.distance(base);
    let (action, w) = (bundle.action.clone(), word.clone());
    let conj = Path::conjugate(zeta, gamma, |p| action.apply(&w, p), &bundle.space)?;
    let conjugated = holonomy_formula(bundle, conn, section, word, &conj, QUAD_SAMPLES)?.distance(base);
    Ok(InvarianceReport {
        holonomy: base,
        translated,
        conjugated,
    })
}

/// α^S_φ(y) + ∫_ζ (φ*ρ^S − ρ^S) mod 1, for ζ from y to x.
pub fn transport_alpha(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    word: &Word,
    x: &[f64],
    y: &[f64],
    zeta: &Path,
) -> Result<CircleValue> {
    let space = &bundle.space;
    let gap = space.distance(zeta.start(), y).max(space.distance(zeta.end(), x));
    if gap > C_PHI_TOL {
        return Err(Error::Composition { distance: gap });
    }
    let rho = conn.rho_in(space, section);
    let (action, w) = (bundle.action.clone(), word.clone());
    let pulled = pullback_1(space, move |p| action.apply(&w, p), &rho);
    let diff = pulled.sub(&rho);
    let a = bundle.alpha_lift_in(section, word, y)?;
    Ok(CircleValue::new(a + line_integral_n(&diff, zeta, QUAD_SAMPLES)?))
}

/// A homomorphism 𝒢/𝒢₀ → ℝ/ℤ given by its values on generators.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Character {
    pub labels: Vec<String>,
    pub values: Vec<CircleValue>,
    /// Largest spread across test paths when computed from holonomy.
    pub spread: Vec<f64>,
}

impl Character {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Self {
        let spread = vec![0.0; values.len()];
        Character {
            labels,
            values: values.into_iter().map(CircleValue::new).collect(),
            spread,
        }
    }

    pub fn eval(&self, word: &Word) -> CircleValue {
        word.letters
            .iter()
            .fold(CircleValue::ZERO, |acc, l| acc + self.values[l.generator].times(l.power as i64))
    }
}

/// Test paths from `base` to `target`: straight, then with one or two bends.
fn test_paths(space: &ParameterSpace, base: &[f64], target: &[f64], count: usize, r: &mut impl Rng) -> Vec<Path> {
    let bounds = space.sample_bounds();
    let bend = |p: Vec<f64>, r: &mut dyn rand::RngCore| -> Vec<f64> {
        p.iter()
            .zip(&bounds)
            .map(|(x, (lo, hi))| {
                let off = (r.random::<f64>() - 0.5) * 0.5 * (hi - lo);
                (x + off).clamp(*lo, *hi)
            })
            .collect()
    };
    let lerp = |w: f64| -> Vec<f64> { base.iter().zip(target).map(|(a, b)| a + w * (b - a)).collect() };
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let path = match k % 3 {
            0 => Path::straight(base, target),
            1 => Path::polyline(vec![base.to_vec(), bend(lerp(0.5), r), target.to_vec()]).unwrap(),
            _ => Path::polyline(vec![
                base.to_vec(),
                bend(lerp(1.0 / 3.0), r),
                bend(lerp(2.0 / 3.0), r),
                target.to_vec(),
            ])
            .unwrap(),
        };
        out.push(path);
    }
    out
}

/// Max |curv| and |μ| over probes; used as the flatness precondition.
pub fn equivariant_flatness(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let (_, curv) = curvature_fields(bundle, conn, section);
    let dim = bundle.dimension();
    let mut r = rng(29);
    let mut worst: f64 = 0.0;
    for p in probes {
        let dirs = probe_directions(dim, 4, &mut r);
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                worst = worst.max(curv.omega.eval(p, &dirs[i], &dirs[j])?.abs());
            }
        }
        for mu in &curv.moment {
            worst = worst.max(mu.eval(p)?.abs());
        }
    }
    Ok(worst)
}

/// κ^Ξ on generators from holonomies over 8 paths and 3 basepoints.
pub fn flat_character(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    probes: &[Vec<f64>],
    seed: u64,
    spread_tol: f64,
) -> Result<Character> {
    let flat = equivariant_flatness(bundle, conn, section, probes)?;
    if flat > FLATNESS_TOL {
        return Err(Error::NotFlat { residual: flat });
    }
    let mut r = rng(seed);
    let space = &bundle.space;
    let bases: Vec<Vec<f64>> = (0..3).map(|_| random_point(space, &mut r)).collect();
    let mut values = Vec::new();
    let mut spreads = Vec::new();
    for (g, gen) in bundle.action.generators.iter().enumerate() {
        let w = Word::generator(g);
        let mut vals = Vec::new();
        for (b, base) in bases.iter().enumerate() {
            let count = if b < 2 { 3 } else { 2 };
            let target = gen.apply(base);
            for (k, path) in test_paths(space, base, &target, count, &mut r).into_iter().enumerate() {
                let h = equivariant_holonomy(bundle, conn, section, &w, &path, &format!("b{b}p{k}"))?;
                vals.push(h.value);
            }
        }
        let spread = vals.iter().map(|v| v.distance(vals[0])).fold(0.0, f64::max);
        if spread > spread_tol {
            return Err(Error::Consistency(format!(
                "holonomy of `{}` depends on the path: spread {spread:.3e}",
                gen.label
            )));
        }
        if gen.identity_component && vals[0].distance(CircleValue::ZERO) > spread_tol {
            return Err(Error::Consistency(format!(
                "holonomy of identity-component generator `{}` is {} instead of 0",
                gen.label, vals[0]
            )));
        }
        values.push(vals[0]);
        spreads.push(spread);
    }
    Ok(Character {
        labels: bundle.action.labels(),
        values,
        spread: spreads,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct KValue {
    pub value: CircleValue,
    /// ∫_γ β as a real number; K-membership needs the real period.
    pub period: f64,
    pub spread: f64,
}

/// max |dβ|, |ι_Xβ| and |φ*β − β| over probes.
pub fn closed_invariant_residual(bundle: &EquivariantBundle, beta: &OneForm, probes: &[Vec<f64>]) -> Result<f64> {
    let space = &bundle.space;
    let dim = bundle.dimension();
    let db = exterior_derivative(space, beta);
    let mut r = rng(31);
    let mut worst: f64 = 0.0;
    for p in probes {
        let dirs = probe_directions(dim, 4, &mut r);
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                worst = worst.max(db.eval(p, &dirs[i], &dirs[j])?.abs());
            }
        }
    }
    for x in &bundle.action.lie {
        worst = worst.max(max_contraction(beta, &x.field, probes)?);
    }
    for g in &bundle.action.generators {
        let gg = g.clone();
        let pulled = pullback_1(space, move |p| gg.apply(p), beta);
        for p in probes {
            let (a, b) = (pulled.covector(p)?, beta.covector(p)?);
            for (u, v) in a.iter().zip(&b) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    Ok(worst)
}

/// k_φ^β = ∫_γ β, with alternative paths for an independence report.
pub fn k_of_beta(
    bundle: &EquivariantBundle,
    beta: &OneForm,
    word: &Word,
    gamma: &Path,
    probes: &[Vec<f64>],
    seed: u64,
) -> Result<KValue> {
    let res = closed_invariant_residual(bundle, beta, probes)?;
    if res > FLATNESS_TOL {
        return Err(Error::Precondition(format!(
            "β is not closed, basic and invariant (residual {res:.3e})"
        )));
    }
    check_c_phi(bundle, word, gamma)?;
    if bundle.action.in_identity_component(word) {
        return Ok(KValue {
            value: CircleValue::ZERO,
            period: 0.0,
            spread: 0.0,
        });
    }
    let period = line_integral_n(beta, gamma, QUAD_SAMPLES)?;
    let mut r = rng(seed);
    let mut spread: f64 = 0.0;
    for _ in 0..2 {
        let b = random_point(&bundle.space, &mut r);
        let target = bundle.action.apply(word, &b);
        for path in test_paths(&bundle.space, &b, &target, 2, &mut r) {
            let v = line_integral_n(beta, &path, QUAD_SAMPLES)?;
            spread = spread.max((v - period).abs());
        }
    }
    Ok(KValue {
        value: CircleValue::new(period),
        period,
        spread,
    })
}

/// Bundle with constant cocycle and ρ = 0 whose flat character is `h`.
///
/// The cocycle is α_φ = −h(φ): with Ξ = ϑ the holonomy is −α_φ, so this
/// choice makes κ^Ξ = h.
pub fn build_flat_from_character(
    space: &ParameterSpace,
    action: &GroupAction,
    h: &Character,
) -> Result<(EquivariantBundle, Connection)> {
    if h.values.len() != action.generators.len() {
        return Err(Error::InvalidCharacter(format!(
            "{} values for {} generators",
            h.values.len(),
            action.generators.len()
        )));
    }
    for rel in &action.relations {
        let v = h.eval(rel);
        if v.distance(CircleValue::ZERO) > 1e-9 {
            return Err(Error::InvalidCharacter(format!(
                "relation {} evaluates to {v}",
                action.display_word(rel)
            )));
        }
    }
    for (g, v) in action.generators.iter().zip(&h.values) {
        if g.identity_component && v.distance(CircleValue::ZERO) > 1e-9 {
            return Err(Error::InvalidCharacter(format!(
                "identity-component generator `{}` must map to 0",
                g.label
            )));
        }
    }
    let cocycle = Cocycle {
        generators: h.values.iter().map(|v| ScalarField::constant(-v.value())).collect(),
        lie: action.lie.iter().map(|_| crate::bundle::FlowCocycle::zero()).collect(),
    };
    let b = EquivariantBundle::new(space.clone(), action.clone(), cocycle)?;
    Ok((b, Connection::flat_trivial()))
}

#[cfg(test)]
mod tests;
