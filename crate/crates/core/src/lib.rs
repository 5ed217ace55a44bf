//! Simulation and numerical verification toolkit for critical branching
//! processes in i.i.d. random environments.
//!
//! The deterministic numerics (generating functions, walk statistics,
//! extinction schedules, J-functionals) are generic over [`Real`]; Monte
//! Carlo estimators accumulate in `f64`. The `*F64` / `*F32` aliases below
//! fix the scalar for callers that do not care.

pub mod branching;
pub mod conditioned;
pub mod error;
pub mod genealogy;
pub mod lattice;
pub mod limit_law;
pub mod offspring;
pub mod parallel;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use branching::{EnvironmentPath, ExtinctionSchedule, JFunctionals, PopulationTrajectory, ReducedObservation};
pub use conditioned::{HarmonicEstimate, Renewal, RenewalKind, RenewalOptions};
pub use error::{Error, Result};
pub use limit_law::{LimitLawSpec, LimitRoute};
pub use offspring::{EnvironmentModel, OffspringFamily, OffspringKind, OffspringLaw};
pub use rng::StreamSeeder;
pub use scalar::Real;
pub use stats::{EmpiricalCdf, Estimate, KsResult};
pub use walk::{IncrementLaw, PathStatistics, StableParams, WalkPath};

pub type OffspringLawF64 = OffspringLaw<f64>;
pub type OffspringLawF32 = OffspringLaw<f32>;
pub type EnvironmentModelF64 = EnvironmentModel<f64>;
pub type EnvironmentModelF32 = EnvironmentModel<f32>;
pub type IncrementLawF64 = IncrementLaw<f64>;
pub type IncrementLawF32 = IncrementLaw<f32>;
pub type StableParamsF64 = StableParams<f64>;
pub type StableParamsF32 = StableParams<f32>;
pub type WalkPathF64 = WalkPath<f64>;
pub type WalkPathF32 = WalkPath<f32>;
pub type EnvironmentPathF64 = EnvironmentPath<f64>;
pub type EnvironmentPathF32 = EnvironmentPath<f32>;
