//! Eulerian time integration of the radius function.
//!
//! The tube moves with normal speed `H̄ - ρ`. Written over the fixed base,
//! the radius evolves by `r_t = (H̄ - ρ) / u`, where `H̄` is the average mean
//! curvature of the current tube and `u` the tube-preservation monitor.

use crate::domain::{DomainError, DomainSpec, ProfileSpec, RadiusField};
use crate::geometry::{sphere_volume, GeometryError, GeometrySample, TubeGeometry};
use crate::kernels::{kernel_co, kernel_sin2, kernel_tan, KernelError, SpaceModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_DT: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid flow settings: {0}")]
    Settings(String),
    #[error("tube lost at t = {t}: min u = {min_u} below the floor {floor}")]
    TubeLost { t: f64, min_u: f64, floor: f64 },
    #[error("radius overflow at t = {t}: r = {max_r} reached the limit {limit}")]
    RadiusOverflow { t: f64, max_r: f64, limit: f64 },
    #[error("non-positive radius {value} at node {node}, t = {t}")]
    NonPositiveRadius { t: f64, node: usize, value: f64 },
    #[error("time step {dt} underflow at t = {t}")]
    StepSizeUnderflow { t: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
    /// Diffusive part implicit, remainder explicit. Experimental: does not
    /// conserve the discrete volume exactly.
    Imex,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit-euler" | "euler" => Ok(Scheme::ExplicitEuler),
            "rk4" => Ok(Scheme::Rk4),
            "imex" => Ok(Scheme::Imex),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtControl {
    Fixed { dt: f64 },
    /// `dt = factor · h² · min u² / (2 Λ)`.
    Cfl { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    pub scheme: Scheme,
    pub dt: DtControl,
    pub t_end: f64,
    /// Stop once `sup |r_t|` falls below this; 0 disables the check.
    pub steady_tol: f64,
    pub u_floor: f64,
    /// Record a series row every this many steps.
    pub record_every: usize,
    /// Record a snapshot every this many steps; 0 keeps only the first and
    /// last.
    pub snapshot_every: usize,
    /// Rescale the radius after every step to restore the initial enclosed
    /// volume.
    pub conserve_project: bool,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt: DtControl::Cfl { factor: 0.5 },
            t_end: 1.0,
            steady_tol: 1e-10,
            u_floor: 1e-3,
            record_every: 1,
            snapshot_every: 0,
            conserve_project: false,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::Settings(m.to_string()));
        match self.dt {
            DtControl::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => return bad("dt must be positive"),
            DtControl::Cfl { factor } if !(factor > 0.0 && factor <= 1.0) => {
                return bad("CFL factor must lie in (0, 1]")
            }
            _ => {}
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad("t_end must be finite and non-negative");
        }
        if !(self.steady_tol >= 0.0) {
            return bad("steady_tol must be non-negative");
        }
        if !(self.u_floor >= 0.0 && self.u_floor < 1.0) {
            return bad("u_floor must lie in [0, 1)");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: SpaceModel,
    pub domain: DomainSpec,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub settings: FlowSettings,
    /// Required for non-compact models; optional cap otherwise.
    #[serde(default)]
    pub r_max: Option<f64>,
}

/// Right-hand side together with the geometry it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsEval {
    pub rhs: Vec<f64>,
    pub hbar: f64,
    pub sample: GeometrySample,
}

impl RhsEval {
    pub fn sup_norm(&self) -> f64 {
        self.rhs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `r_t = (H̄ - ρ) / u` at every node.
pub fn eulerian_rhs(geom: &TubeGeometry, field: &RadiusField) -> Result<RhsEval, KernelError> {
    let sample = geom.sample(field)?;
    let hbar = sample.average_mean_curvature(geom.domain());
    let rhs = sample.rho.iter().zip(&sample.u).map(|(rho, u)| (hbar - rho) / u).collect();
    Ok(RhsEval { rhs, hbar, sample })
}

/// Closed-form Laplacian of the radius on the tube, in terms of the base
/// gradient `g`: `-g² σ / (co² + g²)` with `σ = kb sin(2kbr)` (compact) or
/// `-kb sinh(2kbr)` (non-compact) at `k = k0`.
pub fn laplacian_identity(model: &SpaceModel, r: f64, g: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    let sigma = kernel_sin2(model, model.k0(), r)?;
    Ok(-g * g * sigma / (co * co + g * g))
}

/// Radius speed in the tube's own parametrization, `u (H̄ - ρ)`.
pub fn lagrangian_speed(model: &SpaceModel, r: f64, g: f64, hbar: f64, rho: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    Ok(co / co.hypot(g) * (hbar - rho))
}

/// Right-hand side of the evolution equation with the Laplacian split off,
/// assembled from `co` and `tan` kernels only: `u (H̄ - ρ) + 2 g² co² T / (co² + g²)`.
pub fn split_rhs(model: &SpaceModel, r: f64, g: f64, hbar: f64, rho: f64) -> Result<f64, KernelError> {
    let co = kernel_co(model, model.k0(), r)?;
    let t = kernel_tan(model, model.k0(), r)?;
    let s2 = co * co + g * g;
    Ok(co / s2.sqrt() * (hbar - rho) + 2.0 * g * g * co * co * t / s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub area: f64,
    pub vol_d: f64,
    pub hbar: f64,
    pub min_u: f64,
    pub max_r: f64,
    /// A-priori radius bound; `+inf` when it exceeds the ceiling.
    pub bound: f64,
    pub sup_rhs: f64,
    pub boundary_hess_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub field: RadiusField,
    pub eval: RhsEval,
    pub diagnostics: Diagnostics,
    /// Enclosed volume of the initial state.
    pub vol0: f64,
}

impl FlowState {
    pub fn hbar(&self) -> f64 {
        self.eval.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTEnd,
    SteadyState,
    TubeLost,
    RadiusOverflow,
    NonPositiveRadius,
    StepSizeUnderflow,
    EvaluationError,
}

impl Termination {
    pub fn is_success(self) -> bool {
        matches!(self, Termination::ReachedTEnd | Termination::SteadyState)
    }

    fn from_error(e: &FlowError) -> Self {
        match e {
            FlowError::TubeLost { .. } => Termination::TubeLost,
            FlowError::RadiusOverflow { .. } => Termination::RadiusOverflow,
            FlowError::NonPositiveRadius { .. } => Termination::NonPositiveRadius,
            FlowError::StepSizeUnderflow { .. } => Termination::StepSizeUnderflow,
            _ => Termination::EvaluationError,
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub area: f64,
    pub vol_d: f64,
    pub hbar: f64,
    pub min_u: f64,
    pub max_r: f64,
    pub bound: f64,
    pub sup_rhs: f64,
    pub boundary_hess_residual: f64,
}

impl SeriesRow {
    fn from_state(state: &FlowState) -> Self {
        let d = state.diagnostics;
        Self {
            t: state.t,
            area: d.area,
            vol_d: d.vol_d,
            hbar: d.hbar,
            min_u: d.min_u,
            max_r: d.max_r,
            bound: d.bound,
            sup_rhs: d.sup_rhs,
            boundary_hess_residual: d.boundary_hess_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl Snapshot {
    fn from_state(state: &FlowState, s: &[f64]) -> Self {
        Self {
            t: state.t,
            s: s.to_vec(),
            r: state.field.values().to_vec(),
            rho: state.eval.sample.rho.clone(),
            u: state.eval.sample.u.clone(),
        }
    }

    /// `max |r - mean r|`.
    pub fn deviation(&self) -> f64 {
        let mean = self.r.iter().sum::<f64>() / self.r.len() as f64;
        self.r.iter().fold(0.0, |m, r| m.max((r - mean).abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub message: Option<String>,
    pub steps: usize,
}

impl RunReport {
    /// Largest relative deviation of the enclosed volume from its initial
    /// value over the recorded rows.
    pub fn volume_drift(&self) -> f64 {
        let v0 = self.rows[0].vol_d;
        self.rows.iter().fold(0.0, |m, row| m.max((row.vol_d - v0).abs() / v0.abs()))
    }

    pub fn first_snapshot(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a report always holds the initial snapshot")
    }
}

/// Integrator bound to one geometry and one set of settings.
#[derive(Debug, Clone)]
pub struct Flow {
    geom: TubeGeometry,
    settings: FlowSettings,
}

impl Flow {
    pub fn new(geom: TubeGeometry, settings: FlowSettings) -> Result<Self, FlowError> {
        settings.validate()?;
        Ok(Self { geom, settings })
    }

    pub fn geometry(&self) -> &TubeGeometry {
        &self.geom
    }

    pub fn settings(&self) -> &FlowSettings {
        &self.settings
    }

    fn field_at(&self, values: Vec<f64>, t: f64) -> Result<RadiusField, FlowError> {
        self.geom.field(values).map_err(|e| match e {
            DomainError::BadRadius { node, value } => FlowError::NonPositiveRadius { t, node, value },
            DomainError::RadiusAboveLimit { value, limit, .. } => {
                FlowError::RadiusOverflow { t, max_r: value, limit }
            }
            other => FlowError::Domain(other),
        })
    }

    fn evaluate(&self, t: f64, field: RadiusField, bound: Option<f64>, vol0: Option<f64>) -> Result<FlowState, FlowError> {
        let eval = eulerian_rhs(&self.geom, &field)?;
        let area = eval.sample.area(self.geom.model(), self.geom.domain());
        let vol_d = self.geom.enclosed_volume(&field)?;
        let bound = match bound {
            Some(b) => b,
            None => match self.geom.radius_upper_bound(area, vol_d) {
                Ok(b) => b,
                Err(GeometryError::Range { .. }) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            },
        };
        let diagnostics = Diagnostics {
            area,
            vol_d,
            hbar: eval.hbar,
            min_u: eval.sample.min_u(),
            max_r: field.max(),
            bound,
            sup_rhs: eval.sup_norm(),
            boundary_hess_residual: field.boundary_residual(self.geom.domain().h()).max_abs(),
        };
        let min_u = diagnostics.min_u;
        let state = FlowState { t, field, eval, diagnostics, vol0: vol0.unwrap_or(vol_d) };
        if min_u < self.settings.u_floor {
            return Err(FlowError::TubeLost { t, min_u, floor: self.settings.u_floor });
        }
        Ok(state)
    }

    /// State at `t = 0`; fixes the reference volume and the radius bound.
    pub fn initial_state(&self, values: Vec<f64>) -> Result<FlowState, FlowError> {
        let field = self.field_at(values, 0.0)?;
        self.evaluate(0.0, field, None, None)
    }

    /// Largest stable explicit step, `factor · h² · min u² / (2 Λ)` with
    /// `Λ = max_i max_k 1 / co(k, r_i)²` over `k ∈ K ∪ {0}`.
    pub fn cfl_dt(&self, state: &FlowState, factor: f64) -> Result<f64, KernelError> {
        let model = self.geom.model();
        let mut lambda: f64 = 1.0;
        for &r in state.field.values() {
            for &k in model.ratios() {
                let co = kernel_co(model, k, r)?;
                lambda = lambda.max(1.0 / (co * co));
            }
        }
        let h = self.geom.domain().h();
        let min_u = state.diagnostics.min_u;
        Ok(factor * h * h * min_u * min_u / (2.0 * lambda))
    }

    /// Next step size, clamped so the run lands on `t_end`.
    pub fn choose_dt(&self, state: &FlowState) -> Result<f64, FlowError> {
        let dt = match self.settings.dt {
            DtControl::Fixed { dt } => dt,
            DtControl::Cfl { factor } => self.cfl_dt(state, factor)?,
        };
        if dt < MIN_DT {
            return Err(FlowError::StepSizeUnderflow { t: state.t, dt });
        }
        Ok(dt.min(self.settings.t_end - state.t))
    }

    fn stage(&self, base: &[f64], k: &[f64], scale: f64, t: f64) -> Result<(RadiusField, RhsEval), FlowError> {
        let values = base.iter().zip(k).map(|(r, k)| r + scale * k).collect();
        let field = self.field_at(values, t)?;
        let eval = eulerian_rhs(&self.geom, &field)?;
        Ok((field, eval))
    }

    /// Advances by one step of size `dt`.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
        if !(dt >= MIN_DT) {
            return Err(FlowError::StepSizeUnderflow { t: state.t, dt });
        }
        let t1 = state.t + dt;
        let r0 = state.field.values();
        let k1 = &state.eval.rhs;
        let values: Vec<f64> = match self.settings.scheme {
            Scheme::ExplicitEuler => r0.iter().zip(k1).map(|(r, k)| r + dt * k).collect(),
            Scheme::Rk4 => {
                let (_, e2) = self.stage(r0, k1, 0.5 * dt, state.t + 0.5 * dt)?;
                let (_, e3) = self.stage(r0, &e2.rhs, 0.5 * dt, state.t + 0.5 * dt)?;
                let (_, e4) = self.stage(r0, &e3.rhs, dt, t1)?;
                (0..r0.len())
                    .map(|i| r0[i] + dt / 6.0 * (k1[i] + 2.0 * e2.rhs[i] + 2.0 * e3.rhs[i] + e4.rhs[i]))
                    .collect()
            }
            Scheme::Imex => self.imex_values(state, dt),
        };
        let mut field = self.field_at(values, t1)?;
        if self.settings.conserve_project {
            field = self.project_volume(field, state.vol0, t1)?;
        }
        self.evaluate(t1, field, Some(state.diagnostics.bound), Some(state.vol0))
    }

    /// `(I - dt D L) r¹ = r⁰ + dt (rhs - D L r⁰)` with `D = 1 / (co² + g²)`
    /// and `L` the mirrored three-point Laplacian.
    fn imex_values(&self, state: &FlowState, dt: f64) -> Vec<f64> {
        let r = state.field.values();
        let n = r.len();
        let h2 = self.geom.domain().h().powi(2);
        let sample = &state.eval.sample;
        let model = self.geom.model();
        let d: Vec<f64> = r
            .iter()
            .zip(&sample.g)
            .map(|(&ri, &g)| {
                let co = kernel_co(model, model.k0(), ri).unwrap_or(1.0);
                1.0 / (co * co + g * g)
            })
            .collect();
        let lap = &sample.r2;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let c = dt * d[i] / h2;
            diag[i] = 1.0 + 2.0 * c;
            if i == 0 {
                upper[i] = -2.0 * c;
            } else if i == n - 1 {
                lower[i] = -2.0 * c;
            } else {
                lower[i] = -c;
                upper[i] = -c;
            }
            rhs[i] = r[i] + dt * (state.eval.rhs[i] - d[i] * lap[i]);
        }
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    }

    /// Uniform rescaling `r ↦ λ r` with `Vol(λ r) = vol0`, by Newton on `λ`.
    fn project_volume(&self, field: RadiusField, vol0: f64, t: f64) -> Result<RadiusField, FlowError> {
        let base = field.values().to_vec();
        let vv = sphere_volume(self.geom.model().dim_vertical());
        let table = self.geom.delta_table();
        let mut lambda = 1.0;
        let mut current = field;
        for _ in 0..8 {
            let vol = self.geom.enclosed_volume(&current)?;
            let resid = vol - vol0;
            if resid.abs() <= 1e-15 * vol0.abs() {
                break;
            }
            let dv: Vec<f64> = base
                .iter()
                .map(|&r| Ok(table.derivative(lambda * r)? * r))
                .collect::<Result<_, GeometryError>>()?;
            let slope = vv * self.geom.domain().quadrature(&dv);
            lambda -= resid / slope;
            current = self.field_at(base.iter().map(|r| lambda * r).collect(), t)?;
        }
        Ok(current)
    }
}

/// Thomas algorithm; the systems built here are diagonally dominant.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Builds the geometry and initial state described by `config`.
pub fn prepare(config: &RunConfig) -> Result<(Flow, FlowState), FlowError> {
    let domain = config.domain.build(&config.model)?;
    let values = config.profile.sample(&domain)?;
    let geom = TubeGeometry::new(config.model.clone(), domain, config.r_max)?;
    let flow = Flow::new(geom, config.settings.clone())?;
    let state = flow.initial_state(values)?;
    Ok((flow, state))
}

/// Integrates until `t_end`, a steady state, or a failure. Configuration
/// problems are returned as errors; failures of the flow itself end the run
/// and are reported in [`RunReport::termination`].
pub fn run(config: &RunConfig) -> Result<RunReport, FlowError> {
    let domain = config.domain.build(&config.model)?;
    let values = config.profile.sample(&domain)?;
    let geom = TubeGeometry::new(config.model.clone(), domain, config.r_max)?;
    let flow = Flow::new(geom, config.settings.clone())?;
    let state = match flow.initial_state(values) {
        Ok(state) => state,
        Err(e @ (FlowError::TubeLost { .. } | FlowError::RadiusOverflow { .. } | FlowError::NonPositiveRadius { .. })) => {
            return Ok(RunReport {
                rows: Vec::new(),
                snapshots: Vec::new(),
                termination: Termination::from_error(&e),
                message: Some(e.to_string()),
                steps: 0,
            })
        }
        Err(e) => return Err(e),
    };
    Ok(flow.run_from(state))
}

impl Flow {
    /// Integrates from `state` according to the settings.
    pub fn run_from(&self, mut state: FlowState) -> RunReport {
        let s = self.geom.domain().s().to_vec();
        let settings = &self.settings;
        let mut rows = vec![SeriesRow::from_state(&state)];
        let mut snapshots = vec![Snapshot::from_state(&state, &s)];
        let mut steps = 0usize;
        let mut message = None;
        let t_tol = 1e-12 * settings.t_end.max(1.0);
        let termination = loop {
            if state.t >= settings.t_end - t_tol {
                break Termination::ReachedTEnd;
            }
            if state.diagnostics.sup_rhs < settings.steady_tol {
                break Termination::SteadyState;
            }
            let next = self.choose_dt(&state).and_then(|dt| self.step(&state, dt));
            match next {
                Ok(new) => state = new,
                Err(e) => {
                    message = Some(e.to_string());
                    break Termination::from_error(&e);
                }
            }
            steps += 1;
            if steps % settings.record_every == 0 {
                rows.push(SeriesRow::from_state(&state));
            }
            if settings.snapshot_every > 0 && steps % settings.snapshot_every == 0 {
                snapshots.push(Snapshot::from_state(&state, &s));
            }
        };
        if rows.last().map(|row| row.t) != Some(state.t) {
            rows.push(SeriesRow::from_state(&state));
        }
        if snapshots.last().map(|snap| snap.t) != Some(state.t) {
            snapshots.push(Snapshot::from_state(&state, &s));
        }
        RunReport { rows, snapshots, termination, message, steps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{space_form, Curvature};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn config(profile: ProfileSpec, settings: FlowSettings) -> RunConfig {
        RunConfig {
            model: space_form(2, 1, Curvature::Compact).unwrap(),
            domain: DomainSpec::Flat { length: 2.0 * PI, nodes: 65 },
            profile,
            settings,
            r_max: None,
        }
    }

    #[test]
    fn laplacian_example() {
        let m = space_form(2, 1, Curvature::Compact).unwrap();
        assert_abs_diff_eq!(laplacian_identity(&m, FRAC_PI_4, 1.0).unwrap(), -2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(laplacian_identity(&m, 0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_profile_is_a_fixed_point() {
        for scheme in [Scheme::ExplicitEuler, Scheme::Rk4, Scheme::Imex] {
            let settings = FlowSettings { scheme, t_end: 0.01, steady_tol: 0.0, ..Default::default() };
            let (flow, state) = prepare(&config(ProfileSpec::Constant { c: 0.6 }, settings)).unwrap();
            assert!(state.diagnostics.sup_rhs <= 1e-13);
            let next = flow.step(&state, 1e-3).unwrap();
            for &r in next.field.values() {
                assert_abs_diff_eq!(r, 0.6, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn zero_end_time_gives_single_row() {
        let settings = FlowSettings { t_end: 0.0, ..Default::default() };
        let report = run(&config(ProfileSpec::Cosine { c: 0.6, a: 0.02, m: 1 }, settings)).unwrap();
        assert_eq!(report.termination, Termination::ReachedTEnd);
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn constant_profile_reaches_steady_state() {
        let report = run(&config(ProfileSpec::Constant { c: 0.6 }, FlowSettings::default())).unwrap();
        assert_eq!(report.termination, Termination::SteadyState);
        assert_eq!(report.steps, 0);
    }

    #[test]
    fn perturbed_run_decreases_area_and_keeps_volume() {
        let settings = FlowSettings { t_end: 0.1, ..Default::default() };
        let report = run(&config(ProfileSpec::Cosine { c: 0.6, a: 0.02, m: 1 }, settings)).unwrap();
        assert_eq!(report.termination, Termination::ReachedTEnd);
        for w in report.rows.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].area <= w[0].area + 1e-10);
        }
        assert!(report.volume_drift() < 1e-8, "drift {}", report.volume_drift());
    }

    #[test]
    fn zero_gradient_node_moves_at_curvature_gap() {
        let (_, state) = prepare(&config(
            ProfileSpec::Cosine { c: 0.6, a: 0.02, m: 1 },
            FlowSettings::default(),
        ))
        .unwrap();
        let e = &state.eval;
        assert_eq!(e.sample.g[0], 0.0);
        assert_eq!(e.rhs[0], e.hbar - e.sample.rho[0]);
    }

    #[test]
    fn large_gradient_near_cut_terminates_cleanly() {
        let settings = FlowSettings { t_end: 1.0, u_floor: 0.2, ..Default::default() };
        let cfg = config(ProfileSpec::Cosine { c: 1.2, a: 0.35, m: 6 }, settings);
        let report = run(&cfg).unwrap();
        assert!(
            matches!(report.termination, Termination::TubeLost | Termination::RadiusOverflow),
            "{:?}",
            report.termination
        );
        assert!(report.rows.iter().all(|r| r.max_r.is_finite()));
    }

    #[test]
    fn projection_restores_volume() {
        let settings = FlowSettings {
            scheme: Scheme::Imex,
            t_end: 0.05,
            conserve_project: true,
            ..Default::default()
        };
        let report = run(&config(ProfileSpec::Cosine { c: 0.6, a: 0.02, m: 1 }, settings)).unwrap();
        assert!(report.volume_drift() < 1e-13, "drift {}", report.volume_drift());
    }

    #[test]
    fn tridiagonal_solver() {
        let x = solve_tridiagonal(&[0.0, -1.0, -1.0], &[4.0, 4.0, 4.0], &[-1.0, -1.0, 0.0], &[3.0, 2.0, 3.0]);
        for v in x {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn settings_validation() {
        let bad = FlowSettings { dt: DtControl::Cfl { factor: 1.5 }, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = FlowSettings { dt: DtControl::Fixed { dt: 0.0 }, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(FlowSettings::default().validate().is_ok());
    }
}
