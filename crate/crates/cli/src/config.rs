//! Run configuration: a TOML file with `model`, `domain`, `initial`, `flow`,
//! `output` and, for sweeps, `sweep` sections.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tubeflow_core::domain::EndpointDerivatives;
use tubeflow_core::flow::DtControl;
use tubeflow_core::kernels::find_preset;
use tubeflow_core::{Curvature, DomainSpec, FlowSettings, ProfileSpec, RunConfig, Scheme, SpaceModel};

/// Endpoint tolerance for `r' = r'' = 0` on the initial profile.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Documented configuration with every default spelled out.
pub const DEFAULT_CONFIG: &str = r#"# tubeflow configuration. Every key below shows its default.

[model]
# A preset from `tubeflow presets`. Table presets also need the
# multiplicities below; any key given here overrides the preset.
preset = "sphere-n2-p1"
# Without a preset, give everything explicitly:
# curvature = "compact"             # or "noncompact"
# b = 1.0                           # root scale
# ratios = [1.0]                    # root ratios K
# k0 = 1.0                          # ratio of the block holding grad r
# mult_vertical = [0, 1, 0]         # fibre multiplicities for k = 1/2, 1, 2
# mult_horizontal = [[1.0, 1]]      # (ratio, multiplicity) base blocks
# r_cut = 1.5707963267948966        # defaults to the first pole

[domain]
kind = "flat"                       # "flat", "radial" (with warp) or "table"
length = 6.283185307179586
nodes = 129
# warp = "spherical"                # radial only: "flat", "spherical", "hyperbolic"
# omega = [...]                     # table only: weights per node
# gamma = { common = [...] }        # table only: transverse Hessian traces

[initial]
# "constant" (c), "cosine" (c + a cos(m pi s / L)),
# "flat-cosine" (c + a (cos(m pi s / L) - cos(3 m pi s / L) / 9)) or "table" (values).
# The profile must satisfy r' = r'' = 0 at both ends; the plain cosine
# does not.
profile = "flat-cosine"
c = 0.6
a = 0.02
m = 1

[flow]
scheme = "rk4"                      # "rk4", "explicit-euler" or "imex"
# dt = 1e-3                         # fixed step; omit for CFL control
cfl = 0.5                           # step = cfl * h^2 * min u^2 / (2 Lambda)
t_end = 1.0
steady_tol = 1e-10                  # stop when sup |r_t| drops below
u_floor = 1e-3                      # tube is lost when min u falls below
record_every = 1                    # series row cadence in steps
snapshot_every = 0                  # 0 keeps only the first and last
conserve_project = false            # rescale to the initial volume each step
# r_max = 5.0                       # required for noncompact models
strict_boundary = true              # reject profiles violating r' = r'' = 0

[output]
directory = "tubeflow-out"
plots = true

# Sweeps only: Cartesian product over the listed values.
# [sweep]
# b = [0.5, 1.0]
# amplitude = [0.0, 0.01]
# r0 = [0.6]
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub domain: DomainSpec,
    pub initial: ProfileSpec,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Option<String>,
    pub curvature: Option<Curvature>,
    pub b: Option<f64>,
    pub ratios: Option<Vec<f64>>,
    pub k0: Option<f64>,
    pub mult_vertical: Option<[u32; 3]>,
    pub mult_horizontal: Option<Vec<(f64, u32)>>,
    pub r_cut: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub scheme: Scheme,
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_end: f64,
    pub steady_tol: f64,
    pub u_floor: f64,
    pub record_every: usize,
    pub snapshot_every: usize,
    pub conserve_project: bool,
    pub r_max: Option<f64>,
    pub strict_boundary: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        let s = FlowSettings::default();
        let cfl = match s.dt {
            DtControl::Cfl { factor } => factor,
            DtControl::Fixed { .. } => 0.5,
        };
        Self {
            scheme: s.scheme,
            dt: None,
            cfl,
            t_end: s.t_end,
            steady_tol: s.steady_tol,
            u_floor: s.u_floor,
            record_every: s.record_every,
            snapshot_every: s.snapshot_every,
            conserve_project: s.conserve_project,
            r_max: None,
            strict_boundary: true,
        }
    }
}

impl FlowSection {
    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            scheme: self.scheme,
            dt: match self.dt {
                Some(dt) => DtControl::Fixed { dt },
                None => DtControl::Cfl { factor: self.cfl },
            },
            t_end: self.t_end,
            steady_tol: self.steady_tol,
            u_floor: self.u_floor,
            record_every: self.record_every,
            snapshot_every: self.snapshot_every,
            conserve_project: self.conserve_project,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("tubeflow-out"), plots: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub b: Option<Vec<f64>>,
    pub amplitude: Option<Vec<f64>>,
    pub r0: Option<Vec<f64>>,
}

fn pick<T>(what: &str, own: Option<T>, preset: Option<T>) -> Result<T> {
    own.or(preset).with_context(|| format!("model: `{what}` is required without a preset"))
}

impl ModelSection {
    pub fn resolve(&self) -> Result<SpaceModel> {
        let template = match &self.preset {
            Some(name) => Some(
                find_preset(name)
                    .with_context(|| format!("unknown preset `{name}` (see `tubeflow presets`)"))?
                    .template,
            ),
            None => None,
        };
        let t = template.as_ref();
        let curvature = pick("curvature", self.curvature, t.map(|t| t.curvature))?;
        let b = pick("b", self.b, t.map(|t| t.b))?;
        let ratios = pick("ratios", self.ratios.clone(), t.map(|t| t.ratios.clone()))?;
        let k0 = pick("k0", self.k0, t.map(|t| t.k0))?;
        let mult_vertical = pick("mult_vertical", self.mult_vertical, t.and_then(|t| t.mult_vertical))?;
        let mult_horizontal =
            pick("mult_horizontal", self.mult_horizontal.clone(), t.and_then(|t| t.mult_horizontal.clone()))?;
        let r_cut = self.r_cut.or(t.and_then(|t| t.r_cut));
        SpaceModel::new(curvature, b, ratios, mult_vertical, &mult_horizontal, k0, r_cut).context("invalid model")
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid configuration {}", path.display()))
    }

    /// The solver configuration, after checking the endpoint conditions on
    /// the initial profile. Returns a warning when they fail and
    /// `strict_boundary` is off.
    pub fn run_config(&self) -> Result<(RunConfig, Option<String>)> {
        let model = self.model.resolve()?;
        let settings = self.flow.settings();
        settings.validate()?;
        let domain = self.domain.build(&model).context("invalid domain")?;
        let ends = self.initial.endpoint_derivatives(&domain).context("invalid initial profile")?;
        let mut warning = None;
        if ends.max_abs() > BOUNDARY_TOL {
            let msg = boundary_message(&ends);
            if self.flow.strict_boundary {
                bail!("{msg}");
            }
            warning = Some(msg);
        }
        let config = RunConfig {
            model,
            domain: self.domain.clone(),
            profile: self.initial.clone(),
            settings,
            r_max: self.flow.r_max,
        };
        Ok((config, warning))
    }
}

fn boundary_message(ends: &EndpointDerivatives) -> String {
    format!(
        "initial profile violates r' = r'' = 0 at the ends: boundary residual {:.3e} exceeds {BOUNDARY_TOL:e} \
         (left r' = {:.3e}, r'' = {:.3e}; right r' = {:.3e}, r'' = {:.3e})",
        ends.max_abs(),
        ends.left[0],
        ends.left[1],
        ends.right[0],
        ends.right[1],
    )
}
