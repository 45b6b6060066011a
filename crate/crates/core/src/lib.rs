//! Volume-preserving mean curvature flow of tubes of non-constant radius
//! over reflective submanifolds of symmetric spaces.
//!
//! The flow is reduced to a nonlocal parabolic equation for the radius
//! function `r(s)` on a one-dimensional base interval:
//!
//! * [`kernels`] holds the scalar model data and the root kernels,
//! * [`domain`] discretizes the base and the radius field,
//! * [`geometry`] evaluates mean curvature, area, enclosed volume and the
//!   a-priori radius bound,
//! * [`flow`] integrates the evolution and monitors its invariants,
//! * [`verify`] provides independent oracles for all of the above.

pub mod domain;
pub mod flow;
pub mod geometry;
pub mod kernels;
pub mod lagrangian;
pub mod verify;

pub use domain::{BaseDomain, DomainSpec, ProfileSpec, RadiusField, Warp};
pub use flow::{FlowSettings, RunConfig, RunReport, Scheme, Termination};
pub use geometry::TubeGeometry;
pub use kernels::{Curvature, Preset, SpaceModel};
