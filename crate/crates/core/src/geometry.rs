//! Closed-form geometry of a tube of radius `r(s)`: mean curvature,
//! densities, area, average mean curvature, enclosed volume and the
//! a-priori radius bound.

use crate::domain::{derivatives, BaseDomain, Derivatives, DomainError, RadiusField};
use crate::kernels::{kernel_co, kernel_cot, kernel_sinc, kernel_tan, Curvature, KernelError, SpaceModel};
use thiserror::Error;

/// Relative distance kept from the cut radius in compact models.
pub const CUT_MARGIN: f64 = 1e-3;
const DELTA_CELLS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("value {y} outside the invertible range [0, {max}] of delta")]
    Range { y: f64, max: f64 },
    #[error("non-compact models need a finite radius limit r_max")]
    MissingRadiusLimit,
    #[error("radius limit {0} must be positive and finite")]
    BadRadiusLimit(f64),
}

/// Volume of the unit `m`-sphere, `2 π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn sphere_volume(m: u32) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = if m % 2 == 0 { 2.0 } else { two_pi };
    let mut j = if m % 2 == 0 { 0 } else { 1 };
    while j < m {
        j += 2;
        v *= two_pi / (j - 1) as f64;
    }
    v
}

/// `co(k0, r) / sqrt(co(k0, r)² + g²)`, the cosine of the angle between the
/// tube normal and the radial direction.
pub fn monitor_u(model: &SpaceModel, r: f64, g: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    Ok(co / co.hypot(g))
}

/// Squared gradient norm of the radius on the tube, `g² (co² + g²)`.
pub fn grad_norm_relation(model: &SpaceModel, r: f64, g: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    Ok(g * g * (co * co + g * g))
}

/// Inverse of [`grad_norm_relation`]: the non-negative `g` with
/// `g² (co² + g²) = big_g`.
pub fn grad_norm_inverse(model: &SpaceModel, r: f64, big_g: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    let c2 = co * co;
    // 2G / (co² + sqrt(co⁴ + 4G)) equals the root ½(sqrt(co⁴ + 4G) - co²)
    // without its cancellation.
    let g2 = 2.0 * big_g / (c2 + (c2 * c2 + 4.0 * big_g).sqrt());
    Ok(g2.max(0.0).sqrt())
}

fn vertical_sinc_product(model: &SpaceModel, r: f64) -> Result<f64, KernelError> {
    let mut p = 1.0;
    for (k, &m) in model.mult_vertical().iter().enumerate() {
        if m > 0 {
            p *= kernel_sinc(model, k as f64, r)?.powi(m as i32);
        }
    }
    Ok(p)
}

/// `ψ_r`: the tube volume density relative to `r^{m^V} dv_B dv_{S^{m^V}}`.
pub fn tube_density(model: &SpaceModel, r: f64, g: f64) -> Result<f64, KernelError> {
    let mut p = vertical_sinc_product(model, r)?;
    for blk in model.horizontal_blocks() {
        let m = model.transverse_mult(blk.ratio);
        if m > 0 {
            p *= kernel_co(model, blk.ratio, r)?.powi(m as i32);
        }
    }
    let co0 = kernel_co(model, model.k0(), r)?;
    Ok(p * co0.hypot(g))
}

/// `ψ̄`: the ambient volume density in normal polar coordinates.
pub fn ambient_density(model: &SpaceModel, s: f64) -> Result<f64, KernelError> {
    let mut p = vertical_sinc_product(model, s)?;
    for blk in model.horizontal_blocks() {
        if blk.mult > 0 {
            p *= kernel_co(model, blk.ratio, s)?.powi(blk.mult as i32);
        }
    }
    Ok(p)
}

/// Mean curvature at one node given `r`, `g = r'`, `r''` and the
/// transverse Hessian trace `hess = Σ m̃_k Γ_k r'`.
///
/// Sign convention: a constant-radius tube has curvature
/// `Σ m_k^V cot_k - Σ m_k^H tan_k`, positive for thin tubes.
pub fn mean_curvature_at(model: &SpaceModel, r: f64, g: f64, r2: f64, hess: f64) -> Result<f64, KernelError> {
    let k0 = model.k0();
    let co0 = kernel_co(model, k0, r)?;
    let c2 = co0 * co0;
    let g2 = g * g;
    let s2 = c2 + g2;
    let u = co0 / s2.sqrt();

    let mut vertical = 0.0;
    for (k, &m) in model.mult_vertical().iter().enumerate() {
        if m > 0 {
            vertical += m as f64 * kernel_cot(model, k as f64, r)?;
        }
    }
    let mut horizontal = 0.0;
    for blk in model.horizontal_blocks() {
        let m = model.transverse_mult(blk.ratio);
        if m > 0 {
            horizontal += m as f64 * kernel_tan(model, blk.ratio, r)?;
        }
    }
    let t0 = kernel_tan(model, k0, r)?;

    let normal = t0 * (c2 + 2.0 * g2) / s2;
    Ok(u * (vertical - horizontal - normal - r2 / s2 - hess / c2))
}

/// Per-node mean curvature of the tube over the whole grid.
pub fn mean_curvature(
    model: &SpaceModel,
    domain: &BaseDomain,
    field: &RadiusField,
    der: &Derivatives,
) -> Result<Vec<f64>, KernelError> {
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let (g, r2) = (der.d1[i], der.d2[i]);
            mean_curvature_at(model, r, g, r2, domain.transverse_hessian(model, i, g, r2))
        })
        .collect()
}

/// Everything the flow needs at one instant, per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySample {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub r2: Vec<f64>,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
    /// `r^{m^V} ψ`.
    pub area_integrand: Vec<f64>,
    /// `r^{m^V} ρ ψ`.
    pub avg_numerator_integrand: Vec<f64>,
}

impl GeometrySample {
    pub fn evaluate(model: &SpaceModel, domain: &BaseDomain, field: &RadiusField) -> Result<Self, KernelError> {
        let der = derivatives(domain, field);
        let rho = mean_curvature(model, domain, field, &der)?;
        let r = field.values().to_vec();
        let mv = model.dim_vertical() as i32;
        let n = r.len();
        let mut psi = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut area_integrand = Vec::with_capacity(n);
        let mut avg_numerator_integrand = Vec::with_capacity(n);
        for i in 0..n {
            let p = tube_density(model, r[i], der.d1[i])?;
            let a = r[i].powi(mv) * p;
            psi.push(p);
            u.push(monitor_u(model, r[i], der.d1[i])?);
            area_integrand.push(a);
            avg_numerator_integrand.push(a * rho[i]);
        }
        Ok(Self { r, g: der.d1, r2: der.d2, rho, psi, u, area_integrand, avg_numerator_integrand })
    }

    pub fn area(&self, model: &SpaceModel, domain: &BaseDomain) -> f64 {
        sphere_volume(model.dim_vertical()) * domain.quadrature(&self.area_integrand)
    }

    pub fn average_mean_curvature(&self, domain: &BaseDomain) -> f64 {
        domain.quadrature(&self.avg_numerator_integrand) / domain.quadrature(&self.area_integrand)
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn tube_area(model: &SpaceModel, domain: &BaseDomain, field: &RadiusField) -> Result<f64, KernelError> {
    Ok(GeometrySample::evaluate(model, domain, field)?.area(model, domain))
}

pub fn average_mean_curvature(
    model: &SpaceModel,
    domain: &BaseDomain,
    field: &RadiusField,
) -> Result<f64, KernelError> {
    Ok(GeometrySample::evaluate(model, domain, field)?.average_mean_curvature(domain))
}

/// Tabulated `δ(y) = ∫_0^y s^{m^V} ψ̄(s) ds` on `[0, ceiling]`.
///
/// Node values come from adaptive Simpson over each cell, and `δ(y)` adds
/// the partial cell integral to the node below `y`. The inverse brackets
/// its root on a cubic Hermite interpolant through the nodes (exact
/// derivatives, Fritsch–Carlson limiter) before a Newton polish.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    model: SpaceModel,
    step: f64,
    ys: Vec<f64>,
    slopes: Vec<(f64, f64)>,
}

impl DeltaTable {
    pub fn new(model: &SpaceModel, ceiling: f64) -> Result<Self, GeometryError> {
        if !(ceiling.is_finite() && ceiling > 0.0 && ceiling < model.r_cut()) {
            return Err(GeometryError::BadRadiusLimit(ceiling));
        }
        let step = ceiling / DELTA_CELLS as f64;
        let f = |s: f64| delta_derivative(model, s);
        let mut ys = Vec::with_capacity(DELTA_CELLS + 1);
        let mut d = Vec::with_capacity(DELTA_CELLS + 1);
        ys.push(0.0);
        d.push(f(0.0)?);
        // Neumaier-compensated running sum of the cell integrals.
        let (mut acc, mut comp) = (0.0_f64, 0.0_f64);
        for i in 0..DELTA_CELLS {
            let a = i as f64 * step;
            let b = if i + 1 == DELTA_CELLS { ceiling } else { (i + 1) as f64 * step };
            let cell = adaptive_simpson(&f, a, b)?;
            let t = acc + cell;
            comp += if acc.abs() >= cell.abs() { (acc - t) + cell } else { (cell - t) + acc };
            acc = t;
            ys.push(acc + comp);
            d.push(f(b)?);
        }
        let slopes = (0..DELTA_CELLS)
            .map(|i| {
                let secant = (ys[i + 1] - ys[i]) / step;
                let (mut dl, mut dr) = (d[i], d[i + 1]);
                if secant > 0.0 {
                    let (alpha, beta) = (dl / secant, dr / secant);
                    let norm = alpha.hypot(beta);
                    if norm > 3.0 {
                        dl *= 3.0 / norm;
                        dr *= 3.0 / norm;
                    }
                } else {
                    dl = 0.0;
                    dr = 0.0;
                }
                (dl, dr)
            })
            .collect();
        Ok(Self { model: model.clone(), step, ys, slopes })
    }

    pub fn ceiling(&self) -> f64 {
        self.step * DELTA_CELLS as f64
    }

    /// `δ(ceiling)`, the largest invertible value.
    pub fn max_value(&self) -> f64 {
        self.ys[DELTA_CELLS]
    }

    fn cell_eval(&self, i: usize, y: f64) -> f64 {
        let t = (y - i as f64 * self.step) / self.step;
        let (dl, dr) = self.slopes[i];
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * self.step * dl + h01 * self.ys[i + 1] + h11 * self.step * dr
    }

    pub fn delta(&self, y: f64) -> Result<f64, GeometryError> {
        let ceiling = self.ceiling();
        if !(0.0..=ceiling).contains(&y) {
            return Err(GeometryError::Range { y, max: ceiling });
        }
        let i = ((y / self.step) as usize).min(DELTA_CELLS - 1);
        let x = i as f64 * self.step;
        if y == x {
            return Ok(self.ys[i]);
        }
        let f = |s: f64| delta_derivative(&self.model, s);
        Ok(self.ys[i] + adaptive_simpson(&f, x, y)?)
    }

    /// `δ'(y) = y^{m^V} ψ̄(y)`.
    pub fn derivative(&self, y: f64) -> Result<f64, GeometryError> {
        delta_derivative(&self.model, y)
    }

    /// Root of `δ(x) = v`: bisection on the interpolant, then Newton on the
    /// exact `δ`.
    pub fn inverse(&self, v: f64) -> Result<f64, GeometryError> {
        let max = self.max_value();
        if !(v >= 0.0 && v <= max) {
            return Err(GeometryError::Range { y: v, max });
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        if v == max {
            return Ok(self.ceiling());
        }
        // First node with ys > v; the root lies in the cell before it.
        let i = self.ys.partition_point(|&y| y <= v).clamp(1, DELTA_CELLS) - 1;
        let (cell_lo, cell_hi) = (i as f64 * self.step, (i + 1) as f64 * self.step);
        let (mut lo, mut hi) = (cell_lo, cell_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cell_eval(i, mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..4 {
            let slope = self.derivative(x)?;
            if !(slope > 0.0) {
                break;
            }
            let next = (x - (self.delta(x)? - v) / slope).clamp(cell_lo, cell_hi);
            let done = (next - x).abs() <= 1e-16 * x;
            x = next;
            if done {
                break;
            }
        }
        Ok(x)
    }
}

fn delta_derivative(model: &SpaceModel, s: f64) -> Result<f64, GeometryError> {
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(s.powi(model.dim_vertical() as i32) * ambient_density(model, s)?)
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64) -> Result<f64, GeometryError>
where
    F: Fn(f64) -> Result<f64, GeometryError>,
{
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = 1e-15 * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, GeometryError>
where
    F: Fn(f64) -> Result<f64, GeometryError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Largest admissible radius: just inside the cut radius for compact
/// models, the user limit `r_max` otherwise.
pub fn radius_ceiling(model: &SpaceModel, r_max: Option<f64>) -> Result<f64, GeometryError> {
    if let Some(limit) = r_max {
        if !(limit.is_finite() && limit > 0.0) {
            return Err(GeometryError::BadRadiusLimit(limit));
        }
    }
    let cut = model.r_cut();
    let inner = if cut.is_finite() { cut * (1.0 - CUT_MARGIN) } else { f64::INFINITY };
    let ceiling = match (model.curvature(), r_max) {
        (_, Some(limit)) => limit.min(inner),
        (Curvature::Compact, None) => inner,
        (Curvature::Noncompact, None) if inner.is_finite() => inner,
        (Curvature::Noncompact, None) => return Err(GeometryError::MissingRadiusLimit),
    };
    Ok(ceiling)
}

/// Model, base domain and `δ` table bundled for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGeometry {
    model: SpaceModel,
    domain: BaseDomain,
    delta: DeltaTable,
}

impl TubeGeometry {
    pub fn new(model: SpaceModel, domain: BaseDomain, r_max: Option<f64>) -> Result<Self, GeometryError> {
        let ceiling = radius_ceiling(&model, r_max)?;
        let delta = DeltaTable::new(&model, ceiling)?;
        Ok(Self { model, domain, delta })
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn domain(&self) -> &BaseDomain {
        &self.domain
    }

    pub fn delta_table(&self) -> &DeltaTable {
        &self.delta
    }

    pub fn ceiling(&self) -> f64 {
        self.delta.ceiling()
    }

    /// Builds a field checked against the ceiling.
    pub fn field(&self, values: Vec<f64>) -> Result<RadiusField, DomainError> {
        RadiusField::new(values, self.ceiling())
    }

    pub fn sample(&self, field: &RadiusField) -> Result<GeometrySample, KernelError> {
        GeometrySample::evaluate(&self.model, &self.domain, field)
    }

    pub fn mean_curvature(&self, field: &RadiusField) -> Result<Vec<f64>, KernelError> {
        mean_curvature(&self.model, &self.domain, field, &derivatives(&self.domain, field))
    }

    pub fn tube_area(&self, field: &RadiusField) -> Result<f64, KernelError> {
        tube_area(&self.model, &self.domain, field)
    }

    pub fn average_mean_curvature(&self, field: &RadiusField) -> Result<f64, KernelError> {
        average_mean_curvature(&self.model, &self.domain, field)
    }

    pub fn delta(&self, y: f64) -> Result<f64, GeometryError> {
        self.delta.delta(y)
    }

    pub fn delta_inverse(&self, v: f64) -> Result<f64, GeometryError> {
        self.delta.inverse(v)
    }

    /// `v_{m^V} ∫_B δ(r) dv_B`.
    pub fn enclosed_volume(&self, field: &RadiusField) -> Result<f64, GeometryError> {
        let d: Vec<f64> = field.values().iter().map(|&r| self.delta.delta(r)).collect::<Result<_, _>>()?;
        Ok(sphere_volume(self.model.dim_vertical()) * self.domain.quadrature(&d))
    }

    /// A-priori bound on the radius along the flow from the initial area and
    /// enclosed volume. [`GeometryError::Range`] means the bound exceeds the
    /// ceiling and constrains nothing.
    pub fn radius_upper_bound(&self, area0: f64, vol0: f64) -> Result<f64, GeometryError> {
        let vv = sphere_volume(self.model.dim_vertical());
        let vh = sphere_volume(self.model.dim_horizontal() - 1);
        let arg = vol0 / (vv * self.domain.vol_b()) + area0 / (vv * vh);
        self.delta.inverse(arg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BaseDomain;
    use crate::kernels::space_form;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn s3() -> SpaceModel {
        space_form(2, 1, Curvature::Compact).unwrap()
    }

    fn h3() -> SpaceModel {
        space_form(2, 1, Curvature::Noncompact).unwrap()
    }

    #[test]
    fn sphere_volumes() {
        assert_eq!(sphere_volume(0), 2.0);
        assert_abs_diff_eq!(sphere_volume(1), 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(sphere_volume(2), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(3), 2.0 * PI * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(4), 8.0 * PI * PI / 3.0, epsilon = 1e-13);
        // v_m = 2π v_{m-2} / (m - 1) checked against the Gamma formula at m = 7.
        assert_abs_diff_eq!(sphere_volume(7), PI.powi(4) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn monitor_examples() {
        let m = s3();
        assert_eq!(monitor_u(&m, 0.4, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(monitor_u(&m, PI / 3.0, 0.5).unwrap(), 0.5_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn grad_norm_examples() {
        let flat_k0 = SpaceModel::new(Curvature::Compact, 1.0, vec![1.0], [0, 1, 0], &[(0.0, 1)], 0.0, None)
            .unwrap();
        assert_eq!(grad_norm_relation(&flat_k0, 0.3, 1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(grad_norm_inverse(&flat_k0, 0.3, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(grad_norm_inverse(&flat_k0, 0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn densities() {
        let m = s3();
        let r = FRAC_PI_4;
        let expected = r.sin() / r * r.cos();
        assert_abs_diff_eq!(tube_density(&m, r, 0.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(ambient_density(&m, r).unwrap(), 0.636_619_772_367_581_3, epsilon = 1e-15);
        assert_abs_diff_eq!(ambient_density(&m, 1e-9).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_radius_curvature() {
        let m = s3();
        assert_abs_diff_eq!(mean_curvature_at(&m, FRAC_PI_4, 0.0, 0.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let h = h3();
        for r in [0.1_f64, 0.7, 2.0] {
            let want = 1.0 / r.tanh() + r.tanh();
            assert_abs_diff_eq!(mean_curvature_at(&h, r, 0.0, 0.0, 0.0).unwrap(), want, epsilon = 1e-13);
        }
    }

    #[test]
    fn flat_limit_matches_graph_formula() {
        let m = SpaceModel::new(Curvature::Compact, 1e-6, vec![1.0], [0, 1, 0], &[(1.0, 1)], 1.0, None).unwrap();
        let (r, g, r2): (f64, f64, f64) = (0.8, 0.3, -0.5);
        let w = (1.0 + g * g).sqrt();
        let want = 1.0 / (r * w) - r2 / w.powi(3);
        assert_abs_diff_eq!(mean_curvature_at(&m, r, g, r2, 0.0).unwrap(), want, epsilon = 1e-10);
    }

    fn clifford_geometry(nodes: usize) -> TubeGeometry {
        TubeGeometry::new(s3(), BaseDomain::flat(2.0 * PI, nodes).unwrap(), None).unwrap()
    }

    #[test]
    fn clifford_tube_area_and_average() {
        let geo = clifford_geometry(65);
        let f = geo.field(vec![FRAC_PI_4; 65]).unwrap();
        assert_abs_diff_eq!(geo.tube_area(&f).unwrap(), 2.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(geo.average_mean_curvature(&f).unwrap(), 0.0, epsilon = 1e-14);
        let doubled = TubeGeometry::new(s3(), geo.domain().scaled_weight(2.0).unwrap(), None).unwrap();
        assert_abs_diff_eq!(doubled.tube_area(&f).unwrap(), 4.0 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn delta_table_matches_closed_form() {
        // For the S^1-tube in S^3, δ(y) = sin²(y) / 2.
        let geo = clifford_geometry(17);
        for i in 0..=300 {
            let y = geo.ceiling() * i as f64 / 300.0;
            assert_abs_diff_eq!(geo.delta(y).unwrap(), 0.5 * y.sin().powi(2), epsilon = 1e-13);
        }
        assert_eq!(geo.delta_inverse(0.0).unwrap(), 0.0);
        let top = geo.delta_table().max_value();
        assert_eq!(geo.delta_inverse(top).unwrap(), geo.ceiling());
        assert!(matches!(geo.delta_inverse(top * 1.01), Err(GeometryError::Range { .. })));
        let h = TubeGeometry::new(h3(), BaseDomain::flat(1.0, 9).unwrap(), Some(4.0)).unwrap();
        for y in [0.01_f64, 1.0, 3.9] {
            let want = 0.5 * y.sinh().powi(2);
            let got = h.delta(y).unwrap();
            assert!((got - want).abs() <= 1e-13 * want.max(1.0), "{y}: {got} vs {want}");
        }
    }

    #[test]
    fn enclosed_volume_of_constant_field() {
        let geo = clifford_geometry(33);
        let c = 0.6;
        let f = geo.field(vec![c; 33]).unwrap();
        let want = 2.0 * PI * 2.0 * PI * 0.5 * c.sin().powi(2);
        assert_abs_diff_eq!(geo.enclosed_volume(&f).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn flat_limit_volume_is_solid_of_revolution() {
        let m = SpaceModel::new(Curvature::Compact, 1e-6, vec![1.0], [0, 1, 0], &[(1.0, 1)], 1.0, None).unwrap();
        let domain = BaseDomain::flat(1.0, 101).unwrap();
        let geo = TubeGeometry::new(m, domain.clone(), Some(3.0)).unwrap();
        let values: Vec<f64> = domain.s().iter().map(|s| 1.0 + 0.2 * (PI * s).cos()).collect();
        let f = geo.field(values.clone()).unwrap();
        let sq: Vec<f64> = values.iter().map(|r| r * r).collect();
        let want = PI * domain.quadrature(&sq);
        assert_abs_diff_eq!(geo.enclosed_volume(&f).unwrap(), want, epsilon = 1e-9);
    }

    #[test]
    fn radius_bound_cases() {
        let geo = clifford_geometry(65);
        let f = geo.field(vec![0.5; 65]).unwrap();
        let vol = geo.enclosed_volume(&f).unwrap();
        // Zero area recovers the equilibrium radius.
        assert_abs_diff_eq!(geo.radius_upper_bound(0.0, vol).unwrap(), 0.5, epsilon = 1e-10);
        // The full bound for this data exceeds the cut radius.
        let area = geo.tube_area(&f).unwrap();
        assert!(matches!(geo.radius_upper_bound(area, vol), Err(GeometryError::Range { .. })));

        let h = TubeGeometry::new(h3(), BaseDomain::flat(2.0 * PI, 65).unwrap(), Some(5.0)).unwrap();
        let f = h.field(vec![0.5; 65]).unwrap();
        let bound = h
            .radius_upper_bound(h.tube_area(&f).unwrap(), h.enclosed_volume(&f).unwrap())
            .unwrap();
        assert!(bound >= 0.5 && bound < 5.0, "bound {bound}");
    }

    #[test]
    fn noncompact_needs_radius_limit() {
        let domain = BaseDomain::flat(1.0, 9).unwrap();
        assert_eq!(TubeGeometry::new(h3(), domain, None), Err(GeometryError::MissingRadiusLimit));
    }

    #[test]
    fn radial_axis_uses_curvature_limit() {
        // Round 3-sphere of radius R in R^4 as a tube over a disk:
        // r(s) = sqrt(R² - s²) has mean curvature 3/R, including the axis.
        let m = SpaceModel::new(Curvature::Compact, 1e-7, vec![1.0], [1, 0, 0], &[(1.0, 2)], 1.0, None)
            .unwrap();
        let big_r = 2.0;
        let domain = BaseDomain::radial(crate::domain::Warp::Flat, 1.0, 201, 2).unwrap();
        let values: Vec<f64> = domain.s().iter().map(|s| (big_r * big_r - s * s).sqrt()).collect();
        let geo = TubeGeometry::new(m, domain.clone(), Some(10.0)).unwrap();
        let rho = geo.mean_curvature(&geo.field(values).unwrap()).unwrap();
        for (i, rho) in rho.iter().enumerate().take(200) {
            assert!((rho - 3.0 / big_r).abs() < 1e-4, "node {i}: {rho}");
        }
    }

    proptest! {
        #[test]
        fn average_is_a_weighted_mean(
            amps in prop::collection::vec(-0.1..0.1f64, 3),
        ) {
            let geo = clifford_geometry(33);
            let values: Vec<f64> = geo
                .domain()
                .s()
                .iter()
                .map(|&s| 0.6 + amps[0] * (s / 2.0).cos() + amps[1] * s.cos() + amps[2] * (1.5 * s).cos())
                .collect();
            let f = geo.field(values).unwrap();
            let sample = geo.sample(&f).unwrap();
            let hbar = sample.average_mean_curvature(geo.domain());
            let lo = sample.rho.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sample.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= hbar && hbar <= hi + 1e-12);
            for (&u, &g) in sample.u.iter().zip(&sample.g) {
                prop_assert!(u > 0.0 && u <= 1.0);
                prop_assert_eq!(u == 1.0, g == 0.0);
            }
        }

        #[test]
        fn u_decreases_in_gradient(r in 0.01..1.5f64, g in 0.0..5.0f64, dg in 1e-3..1.0f64) {
            let m = s3();
            prop_assert!(monitor_u(&m, r, g + dg).unwrap() < monitor_u(&m, r, g).unwrap());
        }

        #[test]
        fn tube_density_dominates_ambient(r in 0.01..1.5f64, g in 0.0..5.0f64) {
            for m in [s3(), h3()] {
                let psi = tube_density(&m, r, g).unwrap();
                let bar = ambient_density(&m, r).unwrap();
                prop_assert!(psi >= bar * (1.0 - 1e-15));
                if g == 0.0 {
                    prop_assert!((psi - bar).abs() <= 1e-15 * bar);
                }
            }
        }

        #[test]
        fn grad_norm_roundtrip(r in 0.01..1.5f64, g in 0.0..10.0f64) {
            for m in [s3(), h3()] {
                let big = grad_norm_relation(&m, r, g).unwrap();
                let back = grad_norm_inverse(&m, r, big).unwrap();
                prop_assert!((back - g).abs() <= 1e-12 * g.max(1.0));
            }
        }

        #[test]
        fn delta_inverse_roundtrip(x in 1e-4..1.5f64) {
            let geo = clifford_geometry(9);
            let y = geo.delta(x).unwrap();
            prop_assert!((geo.delta_inverse(y).unwrap() - x).abs() <= 1e-10);
        }

        #[test]
        fn bound_is_monotone(a in 0.0..1.0f64, v in 0.0..1.0f64, da in 0.0..0.5f64, dv in 0.0..0.5f64) {
            let geo = TubeGeometry::new(h3(), BaseDomain::flat(2.0 * PI, 9).unwrap(), Some(5.0)).unwrap();
            let b0 = geo.radius_upper_bound(a, v).unwrap();
            prop_assert!(geo.radius_upper_bound(a + da, v).unwrap() >= b0);
            prop_assert!(geo.radius_upper_bound(a, v + dv).unwrap() >= b0);
        }
    }
}
