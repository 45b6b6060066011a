//! Scalar reduction of the symmetric-space geometry.
//!
//! A [`SpaceModel`] carries the only data the solver needs from the Lie
//! theory: the sign of the sectional curvature, the root length `b`, the
//! ratio set `K`, the vertical/horizontal multiplicities and the eigenblock
//! `k0` containing the gradient of the radius. Every curvature quantity is
//! then a combination of the four root kernels below, each evaluated at
//! `sqrt(eps) * k * b * r` with the `k = 0` limit hard-coded.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Arguments `k*b*r` below this use truncated series.
const SERIES_THRESHOLD: f64 = 1e-4;
/// Relative distance to a trigonometric pole treated as singular.
const POLE_TOL: f64 = 1e-12;
/// Ratios closer than this are the same root block.
const RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("radius {r} outside the admissible interval (0, {r_cut})")]
    Domain { r: f64, r_cut: f64 },
    #[error("kernel singular at k = {k}, r = {r}")]
    Pole { k: f64, r: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("root length b must be positive and finite, got {0}")]
    NonPositiveB(f64),
    #[error("ratio set K must be non-empty with positive finite entries")]
    BadRatios,
    #[error("horizontal multiplicity given for k = {0}, which is not in K or 0")]
    UnknownHorizontalBlock(f64),
    #[error("total vertical multiplicity must be at least 1")]
    NoVerticalDirections,
    #[error("total horizontal multiplicity must be at least 1")]
    NoHorizontalDirections,
    #[error("k0 = {0} is not in K or 0")]
    K0NotInRatios(f64),
    #[error("eigenblock k0 = {0} has zero horizontal multiplicity")]
    EmptyK0Block(f64),
    #[error("cut radius {r_cut} invalid: compact models need 0 < r_cut <= {max}")]
    BadCutRadius { r_cut: f64, max: f64 },
    #[error("preset `{0}` needs user-supplied multiplicities")]
    MissingMultiplicities(String),
}

/// Compact type (`eps = +1`, circular kernels) or non-compact type
/// (`eps = -1`, hyperbolic kernels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Compact,
    Noncompact,
}

impl Curvature {
    pub fn epsilon(self) -> f64 {
        match self {
            Curvature::Compact => 1.0,
            Curvature::Noncompact => -1.0,
        }
    }
}

impl std::fmt::Display for Curvature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Curvature::Compact => "compact",
            Curvature::Noncompact => "noncompact",
        })
    }
}

impl std::str::FromStr for Curvature {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compact" | "+1" | "1" => Ok(Curvature::Compact),
            "noncompact" | "non-compact" | "-1" => Ok(Curvature::Noncompact),
            other => Err(format!("unknown curvature type `{other}`")),
        }
    }
}

/// One horizontal root block `p_{k beta} ∩ p'` and its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizontalBlock {
    pub ratio: f64,
    pub mult: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceModel {
    curvature: Curvature,
    b: f64,
    ratios: Vec<f64>,
    mult_vertical: [u32; 3],
    horizontal: Vec<HorizontalBlock>,
    k0: f64,
    r_cut: f64,
}

/// Default cut radius: `pi / (2 b k_max)` for compact models, which keeps
/// every `cos(k b r)` positive; `+inf` for non-compact ones.
pub fn default_r_cut(curvature: Curvature, b: f64, ratios: &[f64]) -> f64 {
    match curvature {
        Curvature::Compact => FRAC_PI_2 / (b * max_ratio(ratios)),
        Curvature::Noncompact => f64::INFINITY,
    }
}

fn max_ratio(ratios: &[f64]) -> f64 {
    ratios.iter().copied().fold(1.0_f64, f64::max)
}

fn same_ratio(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATIO_TOL * a.abs().max(b.abs()).max(1.0)
}

impl SpaceModel {
    /// Builds and validates a model. Horizontal blocks not listed get
    /// multiplicity zero; `r_cut = None` selects [`default_r_cut`].
    pub fn new(
        curvature: Curvature,
        b: f64,
        ratios: Vec<f64>,
        mult_vertical: [u32; 3],
        mult_horizontal: &[(f64, u32)],
        k0: f64,
        r_cut: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(ModelError::NonPositiveB(b));
        }
        if ratios.is_empty() || ratios.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(ModelError::BadRatios);
        }
        let mut ratios = ratios;
        ratios.sort_by(f64::total_cmp);
        ratios.dedup_by(|a, b| same_ratio(*a, *b));

        let mut horizontal: Vec<HorizontalBlock> = std::iter::once(0.0)
            .chain(ratios.iter().copied())
            .map(|ratio| HorizontalBlock { ratio, mult: 0 })
            .collect();
        for &(k, m) in mult_horizontal {
            let block = horizontal
                .iter_mut()
                .find(|blk| same_ratio(blk.ratio, k))
                .ok_or(ModelError::UnknownHorizontalBlock(k))?;
            block.mult += m;
        }

        if mult_vertical.iter().sum::<u32>() < 1 {
            return Err(ModelError::NoVerticalDirections);
        }
        if horizontal.iter().map(|blk| blk.mult).sum::<u32>() < 1 {
            return Err(ModelError::NoHorizontalDirections);
        }
        let k0_block = horizontal
            .iter()
            .find(|blk| same_ratio(blk.ratio, k0))
            .ok_or(ModelError::K0NotInRatios(k0))?;
        if k0_block.mult < 1 {
            return Err(ModelError::EmptyK0Block(k0));
        }
        let k0 = k0_block.ratio;

        let r_cut = r_cut.unwrap_or_else(|| default_r_cut(curvature, b, &ratios));
        match curvature {
            Curvature::Compact => {
                let max = FRAC_PI_2 / (b * max_ratio(&ratios));
                if !(r_cut > 0.0 && r_cut <= max * (1.0 + 1e-12)) {
                    return Err(ModelError::BadCutRadius { r_cut, max });
                }
            }
            Curvature::Noncompact => {
                if r_cut.is_nan() || r_cut <= 0.0 {
                    return Err(ModelError::BadCutRadius { r_cut, max: f64::INFINITY });
                }
            }
        }

        Ok(Self { curvature, b, ratios, mult_vertical, horizontal, k0, r_cut })
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn epsilon(&self) -> f64 {
        self.curvature.epsilon()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Largest entry of `K ∪ {1}`.
    pub fn k_max(&self) -> f64 {
        max_ratio(&self.ratios)
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    /// `m_k^V` for `k = 0, 1, 2`.
    pub fn mult_vertical(&self) -> [u32; 3] {
        self.mult_vertical
    }

    /// Horizontal blocks for `k ∈ K ∪ {0}`, `k = 0` first.
    pub fn horizontal_blocks(&self) -> &[HorizontalBlock] {
        &self.horizontal
    }

    pub fn mult_horizontal(&self, k: f64) -> u32 {
        self.horizontal
            .iter()
            .find(|blk| same_ratio(blk.ratio, k))
            .map_or(0, |blk| blk.mult)
    }

    /// `m^V = Σ_k m_k^V`.
    pub fn dim_vertical(&self) -> u32 {
        self.mult_vertical.iter().sum()
    }

    /// `m^H = Σ_k m_k^H`.
    pub fn dim_horizontal(&self) -> u32 {
        self.horizontal.iter().map(|blk| blk.mult).sum()
    }

    /// Horizontal multiplicity with the gradient direction removed from
    /// the `k0` block (`m_{k0}^H - 1` there, `m_k^H` elsewhere).
    pub fn transverse_mult(&self, k: f64) -> u32 {
        let m = self.mult_horizontal(k);
        if same_ratio(k, self.k0) {
            m - 1
        } else {
            m
        }
    }

    pub fn is_k0(&self, k: f64) -> bool {
        same_ratio(k, self.k0)
    }

    /// Rebuilds the model with a different root length, rescaling a default
    /// cut radius accordingly.
    pub fn with_b(&self, b: f64) -> Result<Self, ModelError> {
        let default = default_r_cut(self.curvature, self.b, &self.ratios);
        let r_cut = if self.r_cut == default { None } else { Some(self.r_cut) };
        let horizontal: Vec<(f64, u32)> =
            self.horizontal.iter().map(|blk| (blk.ratio, blk.mult)).collect();
        Self::new(
            self.curvature,
            b,
            self.ratios.clone(),
            self.mult_vertical,
            &horizontal,
            self.k0,
            r_cut,
        )
    }

    fn check_radius(&self, r: f64) -> Result<(), KernelError> {
        if r.is_finite() && r > 0.0 && r < self.r_cut {
            Ok(())
        } else {
            Err(KernelError::Domain { r, r_cut: self.r_cut })
        }
    }
}

fn near_multiple_of(x: f64, period: f64, offset: f64) -> bool {
    let m = ((x - offset) / period).round();
    (x - offset - m * period).abs() <= POLE_TOL * x.abs().max(1.0)
}

/// `cos(sqrt(eps) k b r)`: `cos(kbr)` or `cosh(kbr)`; exactly 1 at `k = 0`.
pub fn kernel_co(model: &SpaceModel, k: f64, r: f64) -> Result<f64, KernelError> {
    model.check_radius(r)?;
    if k == 0.0 {
        return Ok(1.0);
    }
    let x = k * model.b * r;
    Ok(match model.curvature {
        Curvature::Compact => x.cos(),
        Curvature::Noncompact => x.cosh(),
    })
}

/// `sqrt(eps) k b / tan(sqrt(eps) k b r)`: `kb cot(kbr)` or `kb coth(kbr)`;
/// `1/r` at `k = 0`.
pub fn kernel_cot(model: &SpaceModel, k: f64, r: f64) -> Result<f64, KernelError> {
    model.check_radius(r)?;
    if k == 0.0 {
        return Ok(1.0 / r);
    }
    let kb = k * model.b;
    let x = kb * r;
    // x cot x and x coth x are evaluated as a whole, then divided by r.
    let x_cot_x = match model.curvature {
        Curvature::Compact => {
            if x < SERIES_THRESHOLD {
                let x2 = x * x;
                1.0 - x2 / 3.0 - x2 * x2 / 45.0
            } else {
                if near_multiple_of(x, PI, 0.0) {
                    return Err(KernelError::Pole { k, r });
                }
                x / x.tan()
            }
        }
        Curvature::Noncompact => {
            if x < SERIES_THRESHOLD {
                let x2 = x * x;
                1.0 + x2 / 3.0 - x2 * x2 / 45.0
            } else {
                x / x.tanh()
            }
        }
    };
    Ok(x_cot_x / r)
}

/// `sqrt(eps) k b tan(sqrt(eps) k b r)`: `kb tan(kbr)` or `-kb tanh(kbr)`;
/// 0 at `k = 0`.
pub fn kernel_tan(model: &SpaceModel, k: f64, r: f64) -> Result<f64, KernelError> {
    model.check_radius(r)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let kb = k * model.b;
    let x = kb * r;
    Ok(match model.curvature {
        Curvature::Compact => {
            if x < SERIES_THRESHOLD {
                kb * x * (1.0 + x * x / 3.0)
            } else {
                if near_multiple_of(x, PI, FRAC_PI_2) {
                    return Err(KernelError::Pole { k, r });
                }
                kb * x.tan()
            }
        }
        Curvature::Noncompact => {
            if x < SERIES_THRESHOLD {
                -kb * x * (1.0 - x * x / 3.0)
            } else {
                -kb * x.tanh()
            }
        }
    })
}

/// `sin(sqrt(eps) k b r) / (sqrt(eps) k b r)`: `sin(x)/x` or `sinh(x)/x`;
/// 1 at `k = 0`.
pub fn kernel_sinc(model: &SpaceModel, k: f64, r: f64) -> Result<f64, KernelError> {
    model.check_radius(r)?;
    if k == 0.0 {
        return Ok(1.0);
    }
    let x = k * model.b * r;
    let x2 = x * x;
    Ok(match model.curvature {
        Curvature::Compact => {
            if x < SERIES_THRESHOLD {
                1.0 - x2 / 6.0 + x2 * x2 / 120.0
            } else {
                x.sin() / x
            }
        }
        Curvature::Noncompact => {
            if x < SERIES_THRESHOLD {
                1.0 + x2 / 6.0 + x2 * x2 / 120.0
            } else {
                x.sinh() / x
            }
        }
    })
}

/// `sqrt(eps) k b sin(2 sqrt(eps) k b r)`: `kb sin(2kbr)` or
/// `-kb sinh(2kbr)`; 0 at `k = 0`.
pub fn kernel_sin2(model: &SpaceModel, k: f64, r: f64) -> Result<f64, KernelError> {
    model.check_radius(r)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let kb = k * model.b;
    let x = 2.0 * kb * r;
    Ok(match model.curvature {
        Curvature::Compact => kb * x.sin(),
        Curvature::Noncompact => -kb * x.sinh(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Multiplicities follow from the classical space-form tube geometry.
    SpaceFormDerived,
    /// Root data from the rank-two tables; multiplicities must be supplied.
    TableConfig,
}

/// Model data with optional multiplicities, completed by the user for the
/// table presets.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTemplate {
    pub curvature: Curvature,
    pub b: f64,
    pub ratios: Vec<f64>,
    pub k0: f64,
    pub mult_vertical: Option<[u32; 3]>,
    pub mult_horizontal: Option<Vec<(f64, u32)>>,
    pub r_cut: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub provenance: Provenance,
    pub template: ModelTemplate,
}

impl Preset {
    /// The complete model, or [`ModelError::MissingMultiplicities`] for a
    /// table stub.
    pub fn model(&self) -> Result<SpaceModel, ModelError> {
        match (&self.template.mult_vertical, &self.template.mult_horizontal) {
            (Some(v), Some(h)) => self.model_with(*v, h),
            _ => Err(ModelError::MissingMultiplicities(self.name.clone())),
        }
    }

    /// Completes the template with explicit multiplicities.
    pub fn model_with(
        &self,
        mult_vertical: [u32; 3],
        mult_horizontal: &[(f64, u32)],
    ) -> Result<SpaceModel, ModelError> {
        let t = &self.template;
        SpaceModel::new(
            t.curvature,
            t.b,
            t.ratios.clone(),
            mult_vertical,
            mult_horizontal,
            t.k0,
            t.r_cut,
        )
    }
}

/// Tube over a totally geodesic `p`-dimensional subspace of the
/// `(n+1)`-dimensional sphere (compact) or hyperbolic space (non-compact)
/// with unit curvature: `K = {1}`, `m_1^V = n - p`, `m_1^H = p`, `k0 = 1`.
pub fn space_form(n: u32, p: u32, curvature: Curvature) -> Result<SpaceModel, ModelError> {
    if p < 1 || p >= n {
        return Err(if p >= n {
            ModelError::NoVerticalDirections
        } else {
            ModelError::NoHorizontalDirections
        });
    }
    SpaceModel::new(curvature, 1.0, vec![1.0], [0, n - p, 0], &[(1.0, p)], 1.0, None)
}

fn space_form_preset(n: u32, p: u32, curvature: Curvature) -> Preset {
    let (name, description) = match curvature {
        Curvature::Compact => (
            format!("sphere-n{n}-p{p}"),
            format!("tube over a great S^{p} in S^{}", n + 1),
        ),
        Curvature::Noncompact => (
            format!("hyperbolic-n{n}-p{p}"),
            format!("tube over a totally geodesic H^{p} in H^{}", n + 1),
        ),
    };
    Preset {
        name,
        description,
        provenance: Provenance::SpaceFormDerived,
        template: ModelTemplate {
            curvature,
            b: 1.0,
            ratios: vec![1.0],
            k0: 1.0,
            mult_vertical: Some([0, n - p, 0]),
            mult_horizontal: Some(vec![(1.0, p)]),
            r_cut: None,
        },
    }
}

fn table_stub(name: &str, description: &str, curvature: Curvature, ratios: &[f64], k0: f64) -> Preset {
    Preset {
        name: name.to_string(),
        description: description.to_string(),
        provenance: Provenance::TableConfig,
        template: ModelTemplate {
            curvature,
            b: 1.0,
            ratios: ratios.to_vec(),
            k0,
            mult_vertical: None,
            mult_horizontal: None,
            r_cut: None,
        },
    }
}

/// Built-in presets: space forms for `1 <= p < n <= 4` in both curvature
/// signs, then the rank-two meridian rows (compact) and their non-compact
/// duals as configuration stubs.
pub fn preset_catalogue() -> Vec<Preset> {
    let mut out = Vec::new();
    for curvature in [Curvature::Compact, Curvature::Noncompact] {
        for n in 2..=4 {
            for p in 1..n {
                out.push(space_form_preset(n, p, curvature));
            }
        }
    }

    use Curvature::{Compact, Noncompact};
    let rows: [(&str, &str, Curvature, &[f64], f64); 12] = [
        ("su3-so3", "SU(3)/SO(3), F = S^1·S^2 (meridian), umbrella RP^2, D = TS^1", Compact, &[1.0, 2.0], 2.0),
        ("su6-sp3", "SU(6)/Sp(3), F = S^1·S^5 (meridian), umbrella QP^2, D = TS^1", Compact, &[1.0, 2.0], 2.0),
        ("su3", "SU(3), F = S^1·S^3 (meridian), umbrella CP^2, D = TS^1", Compact, &[1.0, 2.0], 2.0),
        ("e6-f4", "E6/F4, F = S^1·S^9 (meridian), umbrella OP^2, D = TS^1", Compact, &[1.0, 2.0], 2.0),
        ("sp2-a", "Sp(2), F = Sp(1)×Sp(1) (meridian), umbrella S^4, D = the flat TSp(1)", Compact, &[1.0], 0.0),
        ("sp2-b", "Sp(2), F = Sp(1)×Sp(1) (meridian), umbrella S^4, D = the curved TSp(1)", Compact, &[1.0], 1.0),
        ("sl3r-so3", "SL(3,R)/SO(3), F = H^1×H^2, umbrella H^2, D = TH^1", Noncompact, &[1.0, 2.0], 2.0),
        ("su6star-sp3", "SU*(6)/Sp(3), F = H^1×H^5, umbrella QH^2, D = TH^1", Noncompact, &[1.0, 2.0], 2.0),
        ("sl3r", "SL(3,R), F = H^1×H^3, umbrella CH^2, D = TH^1", Noncompact, &[1.0, 2.0], 2.0),
        ("e6-26-f4", "E6^-26/F4, F = H^1×H^9, umbrella OH^2, D = TH^1", Noncompact, &[1.0, 2.0], 2.0),
        ("sp2c-a", "Sp(2,C), F = Sp(1,C)×Sp(1,C), umbrella H^4, D = the flat TSp(1,C)", Noncompact, &[1.0], 0.0),
        ("sp2c-b", "Sp(2,C), F = Sp(1,C)×Sp(1,C), umbrella H^4, D = the curved TSp(1,C)", Noncompact, &[1.0], 1.0),
    ];
    out.extend(
        rows.iter()
            .map(|(name, desc, curv, ratios, k0)| table_stub(name, desc, *curv, ratios, *k0)),
    );
    out
}

pub fn find_preset(name: &str) -> Option<Preset> {
    preset_catalogue().into_iter().find(|p| p.name == name)
}
