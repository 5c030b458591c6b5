//! Numerical engine for the compact pairwise approximation of SIS epidemics
//! on networks with heterogeneous degree distributions.
//!
//! The crate covers the model right-hand sides ([`system`]), adaptive
//! integration ([`integrator`]), construction of the disease-free and
//! endemic equilibria ([`equilibria`]), local stability and transcritical
//! bifurcation analysis ([`stability`]), and the monotone-iteration
//! certificate for global stability of the disease-free state
//! ([`certificate`]).

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod degree;
pub mod eigen;
pub mod equilibria;
pub mod error;
pub mod integrator;
pub mod stability;
pub mod system;

pub use degree::{AssumptionReport, DegreeClass, DegreeDistribution, EpidemicParams, Moments};
pub use error::{Error, Result};
pub use integrator::{IntegrationConfig, OdeSystem, Trajectory};
pub use system::{CompactPairwise, CpState, ReducedState, ThetaState};
