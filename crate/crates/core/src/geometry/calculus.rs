//! Quadrature and central-difference exterior calculus.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::circle::{wrap_half, CircleValue};
use super::fields::{dot, OneForm, ScalarField, TwoForm, VectorField};
use super::path::Path;
use super::space::ParameterSpace;

/// Default number of quadrature samples per path.
pub const QUAD_SAMPLES: usize = 512;

/// Two-point Gauss–Legendre nodes on [0, 1].
const GAUSS_2: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

/// Largest circle distance tolerated between neighbouring stencil values.
pub const UNWRAP_LIMIT: f64 = 0.25;

fn segment_counts(path: &Path, samples: usize) -> Vec<usize> {
    let nodes = path.nodes();
    let lens: Vec<f64> = nodes
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let total: f64 = lens.iter().sum();
    lens.iter()
        .map(|l| {
            if total > 0.0 {
                ((samples as f64 * l / total).round() as usize).max(1)
            } else {
                1
            }
        })
        .collect()
}

/// Cumulative ∫ρ along the path, one value per node (first is 0).
pub fn cumulative_integral(form: &OneForm, path: &Path, samples: usize) -> Result<Vec<f64>> {
    let nodes = path.nodes();
    let counts = segment_counts(path, samples);
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for (w, k) in nodes.windows(2).zip(counts) {
        let (a, b) = (&w[0], &w[1]);
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / k as f64).collect();
        for j in 0..k {
            for g in GAUSS_2 {
                let s = j as f64 + g;
                let m: Vec<f64> = a.iter().zip(&d).map(|(x, dx)| x + s * dx).collect();
                acc += 0.5 * form.eval(&m, &d)?;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Composite two-point Gauss quadrature of a 1-form along a piecewise-linear path.
pub fn line_integral_n(form: &OneForm, path: &Path, samples: usize) -> Result<f64> {
    Ok(*cumulative_integral(form, path, samples)?.last().unwrap())
}

pub fn line_integral(form: &OneForm, path: &Path) -> Result<f64> {
    line_integral_n(form, path, QUAD_SAMPLES)
}

fn shifted(p: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    p.iter().zip(v).map(|(a, b)| a + s * b).collect()
}

fn stencil(space: &ParameterSpace, p: &[f64], v: &[f64]) -> Result<f64> {
    let h = space.fd_step();
    let r = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) * h;
    space.check_stencil(p, r)?;
    Ok(h)
}

/// Central difference of a scalar quantity along direction `v` at `p`.
pub fn directional<F>(space: &ParameterSpace, p: &[f64], v: &[f64], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let h = stencil(space, p, v)?;
    Ok((f(&shifted(p, v, h))? - f(&shifted(p, v, -h))?) / (2.0 * h))
}

/// Central difference of a vector quantity along direction `v` at `p`.
pub fn directional_vec<F>(space: &ParameterSpace, p: &[f64], v: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let h = stencil(space, p, v)?;
    let (a, b) = (f(&shifted(p, v, h))?, f(&shifted(p, v, -h))?);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
}

/// Dg_p(v) for a point map, using minimal-image differences.
pub fn push_forward<G>(space: &ParameterSpace, g: &G, p: &[f64], v: &[f64]) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let h = stencil(space, p, v)?;
    let d = space.displacement(&g(&shifted(p, v, -h)), &g(&shifted(p, v, h)));
    Ok(d.into_iter().map(|x| x / (2.0 * h)).collect())
}

/// d of a 0-form; exact when the field carries a symbolic gradient.
pub fn gradient(space: &ParameterSpace, f: &ScalarField) -> OneForm {
    if let Some(g) = f.exact_gradient() {
        return g.clone();
    }
    let (space, f) = (space.clone(), f.clone());
    OneForm::new(move |p| {
        let mut e = vec![0.0; p.len()];
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            e[i] = 1.0;
            out.push(directional(&space, p, &e, |q| f.eval(q))?);
            e[i] = 0.0;
        }
        Ok(out)
    })
}

/// dρ(u,v) = D_u(ρ(·,v)) − D_v(ρ(·,u)) with constant extensions of u, v.
pub fn exterior_derivative(space: &ParameterSpace, rho: &OneForm) -> TwoForm {
    let (space, rho) = (space.clone(), rho.clone());
    TwoForm::new(move |p, u, v| {
        let a = directional(&space, p, u, |q| rho.eval(q, v))?;
        let b = directional(&space, p, v, |q| rho.eval(q, u))?;
        Ok(a - b)
    })
}

/// dω(u,v,w) for a 2-form, with constant extensions.
pub fn exterior_derivative_2(
    space: &ParameterSpace,
    w: &TwoForm,
    p: &[f64],
    a: &[f64],
    b: &[f64],
    c: &[f64],
) -> Result<f64> {
    let x = directional(space, p, a, |q| w.eval(q, b, c))?;
    let y = directional(space, p, b, |q| w.eval(q, a, c))?;
    let z = directional(space, p, c, |q| w.eval(q, a, b))?;
    Ok(x - y + z)
}

/// [X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i.
pub fn lie_bracket(space: &ParameterSpace, x: &VectorField, y: &VectorField) -> VectorField {
    let (space, x, y) = (space.clone(), x.clone(), y.clone());
    VectorField::new(move |p| {
        let (xv, yv) = (x.eval(p)?, y.eval(p)?);
        let dy = directional_vec(&space, p, &xv, |q| y.eval(q))?;
        let dx = directional_vec(&space, p, &yv, |q| x.eval(q))?;
        Ok(dy.iter().zip(&dx).map(|(a, b)| a - b).collect())
    })
}

/// X(f) = df(X).
pub fn lie_derivative_scalar(space: &ParameterSpace, x: &VectorField, f: &ScalarField) -> ScalarField {
    gradient(space, f).contract(x)
}

/// L_X ρ = d(ρ(X)) + ι_X dρ.
pub fn lie_derivative_1(space: &ParameterSpace, x: &VectorField, rho: &OneForm) -> OneForm {
    let rx = rho.contract(x);
    let d_rx = gradient(space, &rx);
    let ix_drho = exterior_derivative(space, rho).contract(x);
    d_rx.add(&ix_drho)
}

/// g*β: p ↦ β_{g(p)}(Dg_p ·).
pub fn pullback_1<G>(space: &ParameterSpace, g: G, beta: &OneForm) -> OneForm
where
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    let (space, beta) = (space.clone(), beta.clone());
    OneForm::new(move |p| {
        let gp = g(p);
        let cov = beta.covector(&gp)?;
        let mut e = vec![0.0; p.len()];
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            e[i] = 1.0;
            out.push(dot(&cov, &push_forward(&space, &g, p, &e)?));
            e[i] = 0.0;
        }
        Ok(out)
    })
}

/// g*ω: (p,u,v) ↦ ω_{g(p)}(Dg u, Dg v).
pub fn pullback_2<G>(space: &ParameterSpace, g: G, w: &TwoForm) -> TwoForm
where
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    let (space, w) = (space.clone(), w.clone());
    TwoForm::new(move |p, u, v| {
        let gu = push_forward(&space, &g, p, u)?;
        let gv = push_forward(&space, &g, p, v)?;
        w.eval(&g(p), &gu, &gv)
    })
}

/// The differential δα of a circle-valued field, via local unwrapping.
///
/// Fails with a resolution error when neighbouring stencil values are
/// `UNWRAP_LIMIT` or further apart on the circle. The field is checked at
/// `base` before it is returned.
pub fn circle_delta<A>(space: &ParameterSpace, alpha: A, base: &[f64]) -> Result<OneForm>
where
    A: Fn(&[f64]) -> Result<CircleValue> + Send + Sync + 'static,
{
    let space = space.clone();
    let alpha = Arc::new(alpha);
    let form = OneForm::new(move |p| {
        let h = space.fd_step();
        let centre = alpha(p)?;
        let mut e = vec![0.0; p.len()];
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            e[i] = 1.0;
            space.check_stencil(p, h)?;
            let up = alpha(&shifted(p, &e, h))?;
            let down = alpha(&shifted(p, &e, -h))?;
            let (dp, dm) = (
                wrap_half(up.value() - centre.value()),
                wrap_half(centre.value() - down.value()),
            );
            if dp.abs() >= UNWRAP_LIMIT || dm.abs() >= UNWRAP_LIMIT {
                return Err(Error::Resolution {
                    point: p.to_vec(),
                    message: format!("circle values jump by {:.3} across the stencil", dp.abs().max(dm.abs())),
                });
            }
            out.push((dp + dm) / (2.0 * h));
            e[i] = 0.0;
        }
        Ok(out)
    });
    form.covector(base)?;
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_with, Context};
    use std::f64::consts::PI;

    fn ex(s: &str) -> crate::dsl::Expr {
        parse_with(s, &Context::coords(3)).unwrap()
    }

    fn plane() -> ParameterSpace {
        ParameterSpace::euclidean(2, 2.0)
    }

    fn circle_loop(n: usize) -> Path {
        let nodes = (0..=n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        Path::polyline(nodes).unwrap()
    }

    #[test]
    fn integral_of_dt_and_half_dt() {
        let p = Path::straight(&[0.0], &[1.0]);
        let dt = OneForm::constant(vec![1.0]);
        assert!((line_integral(&dt, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((line_integral(&dt.scale(0.5), &p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circle_area_form_converges_under_refinement() {
        // x dy − y dx around the unit circle; halve the polygon step until stable.
        let form = OneForm::from_exprs(vec![ex("0 - x2"), ex("x1")]);
        let mut prev = f64::NAN;
        let mut n = 64;
        let val = loop {
            let v = line_integral_n(&form, &circle_loop(n), 4 * n).unwrap();
            if (v - prev).abs() < 5e-7 {
                break v;
            }
            prev = v;
            n *= 2;
            assert!(n < 1 << 16, "no convergence");
        };
        assert!((val - 2.0 * PI).abs() < 1e-6, "{val}");
    }

    #[test]
    fn gradient_of_coordinate() {
        let s = plane();
        let f = ScalarField::from_fn(|p| p[0]);
        let g = gradient(&s, &f).covector(&[0.3, 0.4]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-10 && g[1].abs() < 1e-10);
    }

    #[test]
    fn d_of_rotation_form() {
        let s = plane();
        let c = 0.3;
        let rho = OneForm::from_exprs(vec![ex("0 - 0.3*x2"), ex("0.3*x1")]);
        let w = exterior_derivative(&s, &rho);
        for p in [[0.1, 0.2], [-0.7, 0.5], [1.2, -1.1]] {
            let v = w.eval(&p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((v - 2.0 * c).abs() < 1e-6);
        }
    }

    #[test]
    fn bracket_examples() {
        let s = plane();
        let rot = VectorField::from_exprs(vec![ex("0 - x2"), ex("x1")]);
        let dx = VectorField::constant(vec![1.0, 0.0]);
        let dy = VectorField::constant(vec![0.0, 1.0]);
        let b = lie_bracket(&s, &rot, &dx).eval(&[0.4, -0.3]).unwrap();
        assert!(b[0].abs() < 1e-6 && (b[1] + 1.0).abs() < 1e-6);
        let z = lie_bracket(&s, &dx, &dy).eval(&[0.4, -0.3]).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
        let xx = lie_bracket(&s, &rot, &rot).eval(&[0.4, -0.3]).unwrap();
        assert!(xx.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn circle_delta_of_linear_lift() {
        let s = ParameterSpace::euclidean(1, 5.0);
        let d = circle_delta(&s, |p| Ok(CircleValue::new(0.3 * p[0])), &[0.0]).unwrap();
        for x in [-3.0, -0.1, 0.0, 2.7] {
            assert!((d.covector(&[x]).unwrap()[0] - 0.3).abs() < 1e-6);
        }
        let c = circle_delta(&s, |_| Ok(CircleValue::new(0.7)), &[0.0]).unwrap();
        assert_eq!(c.covector(&[1.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn circle_delta_rejects_coarse_stencils() {
        let s = ParameterSpace::euclidean(1, 5.0);
        let r = circle_delta(&s, |p| Ok(CircleValue::new(3000.0 * p[0])), &[0.0]);
        assert!(matches!(r, Err(Error::Resolution { .. })));
    }

    #[test]
    fn winding_map_has_integer_period() {
        use super::super::space::Topology;
        let s = ParameterSpace::new(
            2,
            Topology::Torus {
                periods: vec![1.0, 1.0],
            },
            1e-4,
        )
        .unwrap();
        let d = circle_delta(&s, |p| Ok(CircleValue::new(2.0 * p[0] + 0.1 * (2.0 * PI * p[1]).sin())), &[0.0, 0.0])
            .unwrap();
        let loop_x = Path::straight(&[0.0, 0.3], &[1.0, 0.3]);
        let v = line_integral(&d, &loop_x).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
        let loop_y = Path::straight(&[0.2, 0.0], &[0.2, 1.0]);
        assert!(line_integral(&d, &loop_y).unwrap().abs() < 1e-6);
    }

    #[test]
    fn box_domain_errors_propagate() {
        use super::super::space::Topology;
        let s = ParameterSpace::new(
            1,
            Topology::Box {
                bounds: vec![(0.0, 1.0)],
            },
            1e-4,
        )
        .unwrap();
        let f = ScalarField::from_fn(|p| p[0] * p[0]);
        let g = gradient(&s, &f);
        assert!(g.covector(&[0.5]).is_ok());
        assert!(matches!(g.covector(&[0.0]), Err(Error::Domain { .. })));
    }
}
