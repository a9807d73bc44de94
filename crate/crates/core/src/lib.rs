//! Position-domain geometry screening for GBAS.
//!
//! The library simulates a Ground-Based Augmentation System ground facility
//! that must keep ionospheric gradient threats from silently corrupting
//! aircraft position solutions. Each minute it examines every satellite
//! subset an aircraft might use, finds the subsets whose worst-case vertical
//! error exceeds the tolerable error limit, and inflates broadcast integrity
//! parameters until every such subset advertises a vertical protection level
//! at or above the alert limit, rendering it unusable.
//!
//! Three inflation strategies are provided:
//!
//! * [`inflation::sigma_vig_inflation`] — raise the broadcast ionospheric
//!   gradient sigma in small steps until all unsafe subsets are screened.
//! * [`inflation::targeted_inflation`] — per grid combination, inflate the
//!   ephemeris decorrelation parameter P_k via one LP and fall back to a
//!   per-satellite sigma LP where that is infeasible.
//! * [`inflation::optimal_sigma_prgnd_inflation`] — a single linear program
//!   over all grid combinations that minimizes the all-in-view VPL impact,
//!   followed by an increment-and-recheck adjustment.
//!
//! The numeric kernels are generic over the scalar type through [`Real`];
//! the simulation layer and the bundled configs run in `f64` (see the
//! `*64` aliases at the crate root).

pub mod config;
pub mod constellation;
pub mod error_models;
pub mod geometry;
pub mod inflation;
mod linalg;
pub mod lp_solver;
pub mod report;
pub mod scalar;
pub mod screening;
pub mod simulator;

mod error;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete aliases for the default double-precision simulation stack.
pub type AlmanacEntry64 = constellation::AlmanacEntry<f64>;
pub type SiteLocation64 = constellation::SiteLocation<f64>;
pub type SatelliteView64 = constellation::SatelliteView<f64>;
pub type GeometryMatrix64 = geometry::GeometryMatrix<f64>;
pub type ProjectionRow64 = geometry::ProjectionRow<f64>;
pub type IntegrityConstants64 = geometry::IntegrityConstants<f64>;
pub type SigmaBudget64 = error_models::SigmaBudget<f64>;
pub type ScreeningCombo64 = error_models::ScreeningCombo<f64>;
pub type ThreatModel64 = error_models::ThreatModel<f64>;
pub type LimitTable64 = error_models::LimitTable<f64>;
pub type LinearProgram64 = lp_solver::LinearProgram<f64>;
pub type LpOutcome64 = lp_solver::LpOutcome<f64>;
pub type SubsetVerdict64 = screening::SubsetVerdict<f64>;
pub type ScreeningContext64 = screening::ScreeningContext<f64>;
pub type BroadcastParams64 = inflation::BroadcastParams<f64>;
pub type InflationResult64 = inflation::InflationResult<f64>;
