//! One-dimensional reduction of the base domain.
//!
//! The base is an interval `[0, L]` in the coordinate along the gradient
//! direction of the radius. Transverse directions are folded into a volume
//! weight `ω(s)` and per-block Hessian trace coefficients `Γ_k(s)`.

use crate::kernels::SpaceModel;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const MIN_NODES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("need at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("volume weight must be positive and finite, got {value} at node {node}")]
    BadWeight { node: usize, value: f64 },
    #[error("spherical radial domain needs L < pi, got {0}")]
    SphericalTooLong(f64),
    #[error("radius must be positive and finite, got {value} at node {node}")]
    BadRadius { node: usize, value: f64 },
    #[error("radius {value} at node {node} reaches the limit {limit}")]
    RadiusAboveLimit { node: usize, value: f64, limit: f64 },
}

/// Warping function `w(s)` of a radial base: geodesic polar coordinates in
/// a flat, spherical or hyperbolic base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Warp {
    Flat,
    Spherical,
    Hyperbolic,
}

impl Warp {
    fn w(self, s: f64) -> f64 {
        match self {
            Warp::Flat => s,
            Warp::Spherical => s.sin(),
            Warp::Hyperbolic => s.sinh(),
        }
    }

    /// `w'(s)/w(s)`.
    fn log_derivative(self, s: f64) -> f64 {
        match self {
            Warp::Flat => 1.0 / s,
            Warp::Spherical => 1.0 / s.tan(),
            Warp::Hyperbolic => 1.0 / s.tanh(),
        }
    }
}

/// Transverse Hessian trace coefficients. `blocks` override `common` for
/// individual root ratios; blocks absent from both contribute zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GammaMap {
    pub common: Option<Vec<f64>>,
    pub blocks: Vec<(f64, Vec<f64>)>,
}

impl GammaMap {
    fn lookup(&self, k: f64) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|(ratio, _)| (ratio - k).abs() <= 1e-12 * ratio.abs().max(1.0))
            .map(|(_, v)| v.as_slice())
            .or(self.common.as_deref())
    }

    fn check_len(&self, expected: usize) -> Result<(), DomainError> {
        let lens = self.common.iter().chain(self.blocks.iter().map(|(_, v)| v));
        for v in lens {
            if v.len() != expected {
                return Err(DomainError::LengthMismatch { what: "gamma", got: v.len(), expected });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseDomain {
    length: f64,
    h: f64,
    s: Vec<f64>,
    omega: Vec<f64>,
    weights: Vec<f64>,
    gamma: GammaMap,
    axis: bool,
    vol_b: f64,
}

impl BaseDomain {
    /// `ω ≡ 1`, `Γ ≡ 0`.
    pub fn flat(length: f64, nodes: usize) -> Result<Self, DomainError> {
        Self::from_table(length, vec![1.0; nodes.max(1)], GammaMap::default())
    }

    /// Geodesic ball of radius `L` in a `dim`-dimensional base, `s` the
    /// distance to the centre: `ω = v_{dim-1} w(s)^{dim-1}`, `Γ_k = w'/w` for
    /// every block. Node 0 is the axis, where `ω` may vanish.
    pub fn radial(warp: Warp, length: f64, nodes: usize, dim: u32) -> Result<Self, DomainError> {
        Self::check_grid(length, nodes)?;
        if warp == Warp::Spherical && length >= PI {
            return Err(DomainError::SphericalTooLong(length));
        }
        let h = length / (nodes - 1) as f64;
        let v = crate::geometry::sphere_volume(dim.saturating_sub(1));
        let omega: Vec<f64> = (0..nodes)
            .map(|i| {
                let s = i as f64 * h;
                v * warp.w(s).powi(dim as i32 - 1)
            })
            .collect();
        let mut gamma: Vec<f64> = (0..nodes).map(|i| warp.log_derivative(i as f64 * h)).collect();
        gamma[0] = f64::NAN;
        Self::assemble(length, omega, GammaMap { common: Some(gamma), blocks: Vec::new() }, true)
    }

    /// User-supplied weight and Hessian coefficients on `omega.len()` nodes.
    pub fn from_table(length: f64, omega: Vec<f64>, gamma: GammaMap) -> Result<Self, DomainError> {
        Self::check_grid(length, omega.len())?;
        Self::assemble(length, omega, gamma, false)
    }

    fn check_grid(length: f64, nodes: usize) -> Result<(), DomainError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(DomainError::BadLength(length));
        }
        if nodes < MIN_NODES {
            return Err(DomainError::TooFewNodes(nodes));
        }
        Ok(())
    }

    fn assemble(length: f64, omega: Vec<f64>, gamma: GammaMap, axis: bool) -> Result<Self, DomainError> {
        let n = omega.len();
        gamma.check_len(n)?;
        for (i, &w) in omega.iter().enumerate() {
            let ok = w.is_finite() && (w > 0.0 || (axis && i == 0 && w == 0.0));
            if !ok {
                return Err(DomainError::BadWeight { node: i, value: w });
            }
        }
        let h = length / (n - 1) as f64;
        let s = (0..n).map(|i| i as f64 * h).collect();
        let weights: Vec<f64> = omega
            .iter()
            .enumerate()
            .map(|(i, w)| if i == 0 || i == n - 1 { 0.5 * h * w } else { h * w })
            .collect();
        let vol_b = pairwise_sum(&weights);
        Ok(Self { length, h, s, omega, weights, gamma, axis, vol_b })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> usize {
        self.s.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> &GammaMap {
        &self.gamma
    }

    /// Whether node 0 is a polar axis with singular `Γ`.
    pub fn has_axis(&self) -> bool {
        self.axis
    }

    pub fn vol_b(&self) -> f64 {
        self.vol_b
    }

    /// Trapezoid weights times `ω`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same grid with `ω` scaled by `factor`.
    pub fn scaled_weight(&self, factor: f64) -> Result<Self, DomainError> {
        let omega = self.omega.iter().map(|w| w * factor).collect();
        Self::assemble(self.length, omega, self.gamma.clone(), self.axis)
    }

    /// `Σ_k m̃_k Γ_k(s_i) r'(s_i)`, the transverse Hessian trace. At a polar
    /// axis `Γ_k r'` is replaced by its limit `r''`.
    pub fn transverse_hessian(&self, model: &SpaceModel, i: usize, g: f64, r2: f64) -> f64 {
        let mut acc = 0.0;
        for blk in model.horizontal_blocks() {
            let m = model.transverse_mult(blk.ratio);
            if m == 0 {
                continue;
            }
            if let Some(gamma) = self.gamma.lookup(blk.ratio) {
                let term = if self.axis && i == 0 { r2 } else { gamma[i] * g };
                acc += m as f64 * term;
            }
        }
        acc
    }

    /// `∫ f ω ds` by the composite trapezoid rule.
    pub fn quadrature(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.weights.len());
        let terms: Vec<f64> = f.iter().zip(&self.weights).map(|(f, w)| f * w).collect();
        pairwise_sum(&terms)
    }

    /// Index of the cell containing `s`, or `None` outside `[0, L]`.
    pub fn locate(&self, s: f64) -> Option<usize> {
        if !(0.0..=self.length).contains(&s) {
            return None;
        }
        Some(((s / self.h).floor() as usize).min(self.nodes() - 2))
    }

    /// Four-point Lagrange interpolation of nodal values at `s`.
    pub fn interpolate(&self, values: &[f64], s: f64) -> Option<f64> {
        let cell = self.locate(s)?;
        let n = self.nodes();
        let start = cell.saturating_sub(1).min(n - 4);
        let t = s / self.h;
        let mut acc = 0.0;
        for j in start..start + 4 {
            let mut basis = 1.0;
            for m in start..start + 4 {
                if m != j {
                    basis *= (t - m as f64) / (j as f64 - m as f64);
                }
            }
            acc += basis * values[j];
        }
        Some(acc)
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// How to build a [`BaseDomain`] once the model is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Flat { length: f64, nodes: usize },
    Radial { warp: Warp, length: f64, nodes: usize },
    Table { length: f64, omega: Vec<f64>, #[serde(default)] gamma: GammaMap },
}

impl DomainSpec {
    pub fn build(&self, model: &SpaceModel) -> Result<BaseDomain, DomainError> {
        match self {
            DomainSpec::Flat { length, nodes } => BaseDomain::flat(*length, *nodes),
            DomainSpec::Radial { warp, length, nodes } => {
                BaseDomain::radial(*warp, *length, *nodes, model.dim_horizontal())
            }
            DomainSpec::Table { length, omega, gamma } => {
                BaseDomain::from_table(*length, omega.clone(), gamma.clone())
            }
        }
    }
}

/// Initial radius profile on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum ProfileSpec {
    Constant { c: f64 },
    /// `c + a cos(m π s / L)`.
    Cosine { c: f64, a: f64, #[serde(default = "one")] m: u32 },
    /// `c + a (cos(m π s / L) - cos(3 m π s / L) / 9)`: the cosine mode with
    /// its endpoint curvature cancelled.
    FlatCosine { c: f64, a: f64, #[serde(default = "one")] m: u32 },
    Table { values: Vec<f64> },
}

fn one() -> u32 {
    1
}

impl ProfileSpec {
    pub fn sample(&self, domain: &BaseDomain) -> Result<Vec<f64>, DomainError> {
        let l = domain.length();
        let wave = |m: u32, s: f64| (m as f64 * PI * s / l).cos();
        let values: Vec<f64> = match self {
            ProfileSpec::Constant { c } => vec![*c; domain.nodes()],
            ProfileSpec::Cosine { c, a, m } => domain.s().iter().map(|&s| c + a * wave(*m, s)).collect(),
            ProfileSpec::FlatCosine { c, a, m } => domain
                .s()
                .iter()
                .map(|&s| c + a * (wave(*m, s) - wave(3 * m, s) / 9.0))
                .collect(),
            ProfileSpec::Table { values } => {
                if values.len() != domain.nodes() {
                    return Err(DomainError::LengthMismatch {
                        what: "profile table",
                        got: values.len(),
                        expected: domain.nodes(),
                    });
                }
                values.clone()
            }
        };
        Ok(values)
    }

    /// Replaces the base radius and amplitude where the profile has them.
    pub fn with_params(&self, base: Option<f64>, amplitude: Option<f64>) -> Self {
        let mut out = self.clone();
        match &mut out {
            ProfileSpec::Constant { c } => {
                if let Some(b) = base {
                    *c = b;
                }
            }
            ProfileSpec::Cosine { c, a, .. } | ProfileSpec::FlatCosine { c, a, .. } => {
                if let Some(b) = base {
                    *c = b;
                }
                if let Some(x) = amplitude {
                    *a = x;
                }
            }
            ProfileSpec::Table { .. } => {}
        }
        out
    }
}

/// `(r', r'')` at the left and right end of the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointDerivatives {
    pub left: [f64; 2],
    pub right: [f64; 2],
}

impl EndpointDerivatives {
    pub fn max_abs(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl ProfileSpec {
    /// Exact for the analytic profiles; one-sided differences of third
    /// (`r'`) and second (`r''`) order for tables.
    pub fn endpoint_derivatives(&self, domain: &BaseDomain) -> Result<EndpointDerivatives, DomainError> {
        let l = domain.length();
        let at = |a: f64, m: u32, flat: bool| {
            let k = m as f64 * PI / l;
            let d1 = |s: f64| {
                let base = -a * k * (k * s).sin();
                if flat { base + a * k / 3.0 * (3.0 * k * s).sin() } else { base }
            };
            let d2 = |s: f64| {
                let base = -a * k * k * (k * s).cos();
                if flat { base + a * k * k * (3.0 * k * s).cos() } else { base }
            };
            EndpointDerivatives { left: [d1(0.0), d2(0.0)], right: [d1(l), d2(l)] }
        };
        Ok(match self {
            ProfileSpec::Constant { .. } => EndpointDerivatives { left: [0.0; 2], right: [0.0; 2] },
            ProfileSpec::Cosine { a, m, .. } => at(*a, *m, false),
            ProfileSpec::FlatCosine { a, m, .. } => at(*a, *m, true),
            ProfileSpec::Table { .. } => {
                let v = self.sample(domain)?;
                let h = domain.h();
                let one_sided = |r: [f64; 4]| {
                    [
                        (-11.0 * r[0] + 18.0 * r[1] - 9.0 * r[2] + 2.0 * r[3]) / (6.0 * h),
                        (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) / (h * h),
                    ]
                };
                let n = v.len();
                let left = one_sided([v[0], v[1], v[2], v[3]]);
                let right = one_sided([v[n - 1], v[n - 2], v[n - 3], v[n - 4]]);
                // Differencing inward from the right end flips the sign of r'.
                EndpointDerivatives { left, right: [-right[0], right[1]] }
            }
        })
    }
}

/// Endpoint second-derivative residuals `2 (r_1 - r_0) / h²` and
/// `2 (r_{n-2} - r_{n-1}) / h²` left by the mirror ghosts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResidual {
    pub left: f64,
    pub right: f64,
}

impl BoundaryResidual {
    pub fn max_abs(&self) -> f64 {
        self.left.abs().max(self.right.abs())
    }
}

/// Radius values on the grid with mirror ghost nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusField {
    values: Vec<f64>,
    ghosts: [f64; 2],
}

impl RadiusField {
    /// Validates `0 < r_i < limit` and sets the ghosts.
    pub fn new(values: Vec<f64>, limit: f64) -> Result<Self, DomainError> {
        if values.len() < MIN_NODES {
            return Err(DomainError::TooFewNodes(values.len()));
        }
        for (i, &r) in values.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(DomainError::BadRadius { node: i, value: r });
            }
            if r >= limit {
                return Err(DomainError::RadiusAboveLimit { node: i, value: r, limit });
            }
        }
        let mut field = Self { values, ghosts: [0.0; 2] };
        field.enforce_boundary();
        Ok(field)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ghosts(&self) -> [f64; 2] {
        self.ghosts
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Mirror ghosts `r_{-1} = r_1`, `r_n = r_{n-2}`, so `r' = 0` at both ends.
    pub fn enforce_boundary(&mut self) {
        let n = self.values.len();
        self.ghosts = [self.values[1], self.values[n - 2]];
    }

    pub fn boundary_residual(&self, h: f64) -> BoundaryResidual {
        let v = &self.values;
        let n = v.len();
        BoundaryResidual {
            left: (self.ghosts[0] - 2.0 * v[0] + v[1]) / (h * h),
            right: (v[n - 2] - 2.0 * v[n - 1] + self.ghosts[1]) / (h * h),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Second-order central differences using the ghost nodes at the ends.
pub fn derivatives(domain: &BaseDomain, field: &RadiusField) -> Derivatives {
    let v = field.values();
    let n = v.len();
    let h = domain.h();
    let at = |i: isize| -> f64 {
        if i < 0 {
            field.ghosts[0]
        } else if i as usize >= n {
            field.ghosts[1]
        } else {
            v[i as usize]
        }
    };
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n as isize {
        let (l, c, r) = (at(i - 1), at(i), at(i + 1));
        d1.push((r - l) / (2.0 * h));
        d2.push((r - 2.0 * c + l) / (h * h));
    }
    Derivatives { d1, d2 }
}
