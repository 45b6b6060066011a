//! Independent oracles and identity checks.
//!
//! The embedded oracles compute mean curvature from an explicit embedding
//! of the tube in Euclidean or Minkowski space by finite differences; they
//! share nothing with [`crate::geometry`] beyond plain grids.

use crate::domain::{BaseDomain, RadiusField};
use crate::flow::{lagrangian_speed, laplacian_identity, split_rhs};
use crate::geometry::{
    ambient_density, grad_norm_inverse, grad_norm_relation, mean_curvature, radius_ceiling, tube_density,
};
use crate::kernels::{
    kernel_co, kernel_cot, kernel_sinc, kernel_tan, preset_catalogue, space_form, Curvature, Provenance,
    SpaceModel,
};
use crate::domain::derivatives;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("degenerate embedding metric at s = {s}")]
    Degenerate { s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
    pub seed: Option<u64>,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, errors: &[f64], tolerance: f64, seed: Option<u64>) -> Self {
        let max_error = errors.iter().fold(0.0_f64, |m, e| if e.is_nan() { f64::NAN } else { m.max(*e) });
        Self {
            name: name.into(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
            samples: errors.len(),
            seed,
        }
    }

    /// A check with a per-sample tolerance, reported as the worst ratio of
    /// error to tolerance.
    fn scaled(name: impl Into<String>, pairs: &[(f64, f64)], seed: Option<u64>) -> Self {
        let ratios: Vec<f64> = pairs.iter().map(|(e, tol)| e / tol).collect();
        Self::new(name, &ratios, 1.0, seed)
    }
}

/// Classical mean curvature of the tube of radius `r` about a totally
/// geodesic `p`-dimensional subspace of the unit `(n+1)`-sphere or
/// hyperbolic space: `(n-p) cot r - p tan r`, resp. `(n-p) coth r + p tanh r`.
pub fn spaceform_tube_oracle(n: u32, p: u32, curvature: Curvature, r: f64) -> f64 {
    let (nv, nh) = ((n - p) as f64, p as f64);
    match curvature {
        Curvature::Compact => nv / r.tan() - nh * r.tan(),
        Curvature::Noncompact => nv / r.tanh() + nh * r.tanh(),
    }
}

/// The same quantity from Jacobi fields: along a normal geodesic the
/// principal curvatures are `J'/J` for `J'' = -κ J`, with `J(0) = 0,
/// J'(0) = 1` in the fibre directions and `J(0) = 1, J'(0) = 0` along the
/// base. Integrated by classical RK4.
pub fn jacobi_tube_oracle(n: u32, p: u32, curvature: Curvature, r: f64) -> f64 {
    let kappa = curvature.epsilon();
    let steps = (4000.0 * r.max(1.0)).ceil() as usize;
    let h = r / steps as f64;
    let integrate = |mut y: [f64; 2]| {
        let f = |y: [f64; 2]| [y[1], -kappa * y[0]];
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        y
    };
    let v = integrate([0.0, 1.0]);
    let hz = integrate([1.0, 0.0]);
    (n - p) as f64 * v[1] / v[0] + p as f64 * hz[1] / hz[0]
}

const FD_STEP: f64 = 1e-4;
const THETA: f64 = 0.3;

type Vec4 = [f64; 4];

fn sub(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn scale(a: Vec4, c: f64) -> Vec4 {
    [a[0] * c, a[1] * c, a[2] * c, a[3] * c]
}

fn add(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vector Euclidean-orthogonal to `a`, `b`, `c` in R^4.
fn cross4(a: Vec4, b: Vec4, c: Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&j| j != k).collect();
        let minor = [
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [b[cols[0]], b[cols[1]], b[cols[2]]],
            [c[cols[0]], c[cols[1]], c[cols[2]]],
        ];
        *o = if k % 2 == 0 { det3(minor) } else { -det3(minor) };
    }
    out
}

/// Mean curvature of a two-parameter hypersurface `X(s, θ)` of a
/// three-dimensional space form embedded in R^4 with bilinear form `dot`,
/// whose unit normal is orthogonal to the position vector. The normal is
/// oriented along `outward`, and the sign fixed so a thin tube is positive.
fn embedded_curvature<X, D>(x: X, dot: D, lorentz: bool, s: f64, outward: Vec4) -> Result<f64, OracleError>
where
    X: Fn(f64, f64) -> Vec4,
    D: Fn(Vec4, Vec4) -> f64,
{
    let (e, t) = (FD_STEP, THETA);
    let c = x(s, t);
    let xs = scale(sub(x(s + e, t), x(s - e, t)), 0.5 / e);
    let xt = scale(sub(x(s, t + e), x(s, t - e)), 0.5 / e);
    let xss = scale(add(sub(x(s + e, t), scale(c, 2.0)), x(s - e, t)), 1.0 / (e * e));
    let xtt = scale(add(sub(x(s, t + e), scale(c, 2.0)), x(s, t - e)), 1.0 / (e * e));
    let xst = scale(
        sub(sub(x(s + e, t + e), x(s + e, t - e)), sub(x(s - e, t + e), x(s - e, t - e))),
        0.25 / (e * e),
    );
    let mut normal = cross4(c, xs, xt);
    if lorentz {
        normal[0] = -normal[0];
    }
    let norm2 = dot(normal, normal);
    if !(norm2 > 0.0) {
        return Err(OracleError::Degenerate { s });
    }
    normal = scale(normal, 1.0 / norm2.sqrt());
    if dot(normal, outward) < 0.0 {
        normal = scale(normal, -1.0);
    }
    let (g11, g12, g22) = (dot(xs, xs), dot(xs, xt), dot(xt, xt));
    let det = g11 * g22 - g12 * g12;
    if !(det > 0.0) {
        return Err(OracleError::Degenerate { s });
    }
    let (h11, h12, h22) = (dot(xss, normal), dot(xst, normal), dot(xtt, normal));
    let trace = (g22 * h11 - 2.0 * g12 * h12 + g11 * h22) / det;
    Ok(-trace)
}

/// Mean curvature of the surface of revolution `(s, r(s) cos θ, r(s) sin θ)`
/// in Euclidean 3-space at each grid point; a cylinder gives `+1/r`.
pub fn embedded_revolution_oracle<F: Fn(f64) -> f64>(profile: F, s: &[f64]) -> Result<Vec<f64>, OracleError> {
    let x = |s: f64, t: f64| {
        let r = profile(s);
        [0.0, s, r * t.cos(), r * t.sin()]
    };
    let dot = |a: Vec4, b: Vec4| a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
    s.iter()
        .map(|&si| {
            if !(profile(si) > 0.0) {
                return Err(OracleError::Degenerate { s: si });
            }
            // The surface sits in the hyperplane x0 = 0; (1, 0, 0, 0) plays the
            // role of the position vector for the cross product.
            let outward = [0.0, 0.0, THETA.cos(), THETA.sin()];
            embedded_curvature(
                |s, t| add(x(s, t), [1.0, 0.0, 0.0, 0.0]),
                dot,
                false,
                si,
                outward,
            )
        })
        .collect()
}

/// Mean curvature of the tube `r(s)` about a closed geodesic of the unit
/// 3-sphere in R^4 (compact) or of hyperbolic 3-space on the hyperboloid
/// in Minkowski space (non-compact); `s` is arclength on the geodesic.
pub fn embedded_spaceform_oracle<F: Fn(f64) -> f64>(
    curvature: Curvature,
    profile: F,
    s: &[f64],
) -> Result<Vec<f64>, OracleError> {
    let compact = curvature == Curvature::Compact;
    let point = |s: f64, r: f64, t: f64| -> Vec4 {
        if compact {
            [r.cos() * s.cos(), r.cos() * s.sin(), r.sin() * t.cos(), r.sin() * t.sin()]
        } else {
            [r.cosh() * s.cosh(), r.cosh() * s.sinh(), r.sinh() * t.cos(), r.sinh() * t.sin()]
        }
    };
    let radial = |s: f64, r: f64, t: f64| -> Vec4 {
        if compact {
            [-r.sin() * s.cos(), -r.sin() * s.sin(), r.cos() * t.cos(), r.cos() * t.sin()]
        } else {
            [r.sinh() * s.cosh(), r.sinh() * s.sinh(), r.cosh() * t.cos(), r.cosh() * t.sin()]
        }
    };
    let dot = move |a: Vec4, b: Vec4| {
        let first = if compact { a[0] * b[0] } else { -a[0] * b[0] };
        first + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    };
    s.iter()
        .map(|&si| {
            let r = profile(si);
            if !(r > 0.0) {
                return Err(OracleError::Degenerate { s: si });
            }
            embedded_curvature(|s, t| point(s, profile(s), t), dot, !compact, si, radial(si, r, THETA))
        })
        .collect()
}

/// Algebraic identities over seeded random samples:
/// gradient-norm roundtrip, the Laplacian split of the evolution equation,
/// the density ordering `ψ ≥ ψ̄`, and the kernel identities.
pub fn identity_suite(model: &SpaceModel, samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_hi = match model.curvature() {
        Curvature::Compact => radius_ceiling(model, None).unwrap_or(model.r_cut()),
        Curvature::Noncompact => 3.0_f64.min(model.r_cut()),
    };
    let tol = 1e-12;
    let mut roundtrip = Vec::with_capacity(samples);
    let mut split = Vec::with_capacity(samples);
    let mut density = Vec::with_capacity(samples);
    let mut tan_cot = Vec::new();
    let mut pythagoras = Vec::new();
    for i in 0..samples {
        let r = rng.gen_range(0.0..r_hi).max(1e-6);
        let g = if i % 10 == 0 { 0.0 } else { rng.gen_range(0.0..5.0) };
        let hbar = rng.gen_range(-5.0..5.0);
        let rho = rng.gen_range(-5.0..5.0);
        let eval = || -> Result<(f64, f64, f64), crate::kernels::KernelError> {
            let big = grad_norm_relation(model, r, g)?;
            let back = grad_norm_inverse(model, r, big)?;
            let lhs = split_rhs(model, r, g, hbar, rho)? + laplacian_identity(model, r, g)?;
            let speed = lagrangian_speed(model, r, g, hbar, rho)?;
            let psi = tube_density(model, r, g)?;
            let bar = ambient_density(model, r)?;
            let density_err = if g == 0.0 { (psi - bar).abs() } else { (bar - psi).max(0.0) };
            Ok(((back - g).abs(), (lhs - speed).abs(), density_err))
        };
        let (a, b, c) = eval().unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        roundtrip.push(a);
        split.push(b);
        density.push(c);

        for &k in model.ratios() {
            let kb = k * model.b();
            let (Ok(t), Ok(ct), Ok(co), Ok(sc)) = (
                kernel_tan(model, k, r),
                kernel_cot(model, k, r),
                kernel_co(model, k, r),
                kernel_sinc(model, k, r),
            ) else {
                tan_cot.push((f64::NAN, tol));
                continue;
            };
            tan_cot.push(((t * ct - model.epsilon() * kb * kb).abs(), tol * (kb * kb).max(1.0)));
            let sn = kb * r * sc;
            let lhs = co * co + model.epsilon() * sn * sn;
            // cosh² and sinh² grow together; their difference is only as
            // accurate as their size.
            pythagoras.push(((lhs - 1.0).abs(), tol * (co * co).max(1.0)));
        }
    }
    let seed = Some(seed);
    vec![
        OracleReport::new("grad-norm roundtrip", &roundtrip, tol, seed),
        OracleReport::new("laplacian split", &split, tol, seed),
        OracleReport::new("density ordering", &density, tol, seed),
        OracleReport::scaled("kernel tan*cot", &tan_cot, seed),
        OracleReport::scaled("kernel co^2 + eps sin^2", &pythagoras, seed),
    ]
}

/// Constant-radius curvature of every space-form model with `n <= max_n`
/// against the classical formula, on `radii` radii each.
pub fn spaceform_constant_radius_check(curvature: Curvature, max_n: u32, radii: usize) -> OracleReport {
    let domain = BaseDomain::flat(1.0, 8).expect("fixed grid");
    let mut errors = Vec::new();
    for n in 2..=max_n {
        for p in 1..n {
            let model = space_form(n, p, curvature).expect("valid space form");
            for j in 0..radii {
                let frac = (j as f64 + 0.5) / radii as f64;
                let r = match curvature {
                    Curvature::Compact => frac * 0.5 * PI * 0.999,
                    Curvature::Noncompact => 0.05 + frac * 4.95,
                };
                let field = RadiusField::new(vec![r; 8], f64::INFINITY).expect("positive radius");
                let rho = mean_curvature(&model, &domain, &field, &derivatives(&domain, &field));
                let err = match rho {
                    Ok(rho) => (rho[3] - spaceform_tube_oracle(n, p, curvature, r)).abs(),
                    Err(_) => f64::NAN,
                };
                errors.push(err);
            }
        }
    }
    OracleReport::new(format!("space-form constant radius ({curvature})"), &errors, 1e-12, None)
}

/// Classical formula against the Jacobi-field integration.
pub fn jacobi_check(curvature: Curvature) -> OracleReport {
    let mut errors = Vec::new();
    for (n, p) in [(2, 1), (3, 1), (4, 2), (6, 5)] {
        for j in 0..20 {
            let frac = (j as f64 + 0.5) / 20.0;
            let r = match curvature {
                Curvature::Compact => frac * 1.4,
                Curvature::Noncompact => frac * 3.0,
            };
            let want = jacobi_tube_oracle(n, p, curvature, r);
            errors.push((spaceform_tube_oracle(n, p, curvature, r) - want).abs() / want.abs().max(1.0));
        }
    }
    OracleReport::new(format!("jacobi fields ({curvature})"), &errors, 1e-9, None)
}

/// Smooth profiles on `[0, 1]` even about both ends. The finite-difference
/// error of `r''` is about `h² |r''''| / 12`, so these keep `|r''''|` modest.
pub fn flat_limit_profiles() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("single mode", |s| 0.5 + 0.1 * (PI * s).cos()),
        ("two modes", |s| 0.7 + 0.05 * (PI * s).cos() + 0.02 * (2.0 * PI * s).cos()),
        ("large slope", |s| 0.45 + 0.25 * (PI * s).cos()),
    ]
}

/// Tube curvature with `b = 1e-6` against the Euclidean surface of
/// revolution, tolerance `1e-4 + 5 h²`.
pub fn flat_limit_check(nodes: usize) -> Vec<OracleReport> {
    let model = SpaceModel::new(Curvature::Compact, 1e-6, vec![1.0], [0, 1, 0], &[(1.0, 1)], 1.0, None)
        .expect("valid flat model");
    let domain = BaseDomain::flat(1.0, nodes).expect("valid grid");
    let tol = 1e-4 + 5.0 * domain.h() * domain.h();
    flat_limit_profiles()
        .into_iter()
        .map(|(name, f)| {
            let values: Vec<f64> = domain.s().iter().map(|&s| f(s)).collect();
            let field = RadiusField::new(values, model.r_cut()).expect("profile inside the cut radius");
            let rho = mean_curvature(&model, &domain, &field, &derivatives(&domain, &field));
            let oracle = embedded_revolution_oracle(f, domain.s());
            let errors: Vec<f64> = match (rho, oracle) {
                (Ok(rho), Ok(oracle)) => rho.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).collect(),
                _ => vec![f64::NAN],
            };
            OracleReport::new(format!("flat limit, {name}"), &errors, tol, None)
        })
        .collect()
}

/// Non-constant tubes about a geodesic in the unit 3-sphere and hyperbolic
/// 3-space against their embeddings, tolerance `1e-4 + 5 h²`.
pub fn curved_embedding_check(curvature: Curvature, nodes: usize) -> OracleReport {
    let model = space_form(2, 1, curvature).expect("valid space form");
    let length = 2.0;
    let domain = BaseDomain::flat(length, nodes).expect("valid grid");
    let profile = |s: f64| 0.6 + 0.08 * (PI * s / length).cos() - 0.04 * (2.0 * PI * s / length).cos();
    let values: Vec<f64> = domain.s().iter().map(|&s| profile(s)).collect();
    let field = RadiusField::new(values, model.r_cut()).expect("profile inside the cut radius");
    let rho = mean_curvature(&model, &domain, &field, &derivatives(&domain, &field));
    let oracle = embedded_spaceform_oracle(curvature, profile, domain.s());
    let errors: Vec<f64> = match (rho, oracle) {
        (Ok(rho), Ok(oracle)) => rho.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).collect(),
        _ => vec![f64::NAN],
    };
    let tol = 1e-4 + 5.0 * domain.h() * domain.h();
    OracleReport::new(format!("embedded tube ({curvature})"), &errors, tol, None)
}

/// Everything `check` runs: identities for each complete preset, the
/// constant-radius and Jacobi oracles, and the embedded-surface oracles.
pub fn check_suite(seed: u64, samples: usize) -> Vec<OracleReport> {
    let mut out = Vec::new();
    for preset in preset_catalogue() {
        if preset.provenance != Provenance::SpaceFormDerived {
            continue;
        }
        let Ok(model) = preset.model() else { continue };
        for mut report in identity_suite(&model, samples, seed) {
            report.name = format!("{}: {}", preset.name, report.name);
            out.push(report);
        }
    }
    for curvature in [Curvature::Compact, Curvature::Noncompact] {
        out.push(spaceform_constant_radius_check(curvature, 6, 100));
        out.push(jacobi_check(curvature));
        out.push(curved_embedding_check(curvature, 201));
    }
    out.extend(flat_limit_check(201));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classical_formula_examples() {
        assert_abs_diff_eq!(spaceform_tube_oracle(2, 1, Curvature::Compact, PI / 4.0), 0.0, epsilon = 1e-15);
        let r = 1e-6;
        assert_abs_diff_eq!(spaceform_tube_oracle(3, 1, Curvature::Compact, r) * r, 2.0, epsilon = 1e-9);
        let far = spaceform_tube_oracle(2, 1, Curvature::Noncompact, 30.0);
        assert_abs_diff_eq!(far, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_agrees_with_classical_formula() {
        for curvature in [Curvature::Compact, Curvature::Noncompact] {
            assert!(jacobi_check(curvature).passed);
        }
    }

    #[test]
    fn revolution_oracle_examples() {
        let s: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let cyl = embedded_revolution_oracle(|_| 0.8, &s).unwrap();
        assert!(cyl.iter().all(|h| (h - 1.25).abs() < 1e-6));
        let big_r = 2.0;
        let sphere = embedded_revolution_oracle(|s: f64| (big_r * big_r - s * s).sqrt(), &s).unwrap();
        assert!(sphere.iter().all(|h| (h - 2.0 / big_r).abs() < 1e-6), "{sphere:?}");
        assert!(embedded_revolution_oracle(|_| 0.0, &s).is_err());
    }

    #[test]
    fn spaceform_embedding_at_constant_radius() {
        let s = [0.1, 0.7];
        for r in [0.3, PI / 4.0, 1.2] {
            let want = spaceform_tube_oracle(2, 1, Curvature::Compact, r);
            for h in embedded_spaceform_oracle(Curvature::Compact, |_| r, &s).unwrap() {
                assert!((h - want).abs() < 1e-6, "{h} vs {want}");
            }
            let want = spaceform_tube_oracle(2, 1, Curvature::Noncompact, r);
            for h in embedded_spaceform_oracle(Curvature::Noncompact, |_| r, &s).unwrap() {
                assert!((h - want).abs() < 1e-6, "{h} vs {want}");
            }
        }
    }

    #[test]
    fn identity_suite_is_deterministic() {
        let m = space_form(3, 1, Curvature::Noncompact).unwrap();
        assert_eq!(identity_suite(&m, 200, 7), identity_suite(&m, 200, 7));
    }

    #[test]
    fn report_flags_nan_as_failure() {
        let r = OracleReport::new("x", &[0.0, f64::NAN], 1.0, None);
        assert!(!r.passed);
    }
}
