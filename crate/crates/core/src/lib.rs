//! Battery modeling and estimation workbench.
//!
//! The crate couples three modeling paradigms for lithium-ion cells:
//!
//! * an enhanced single-particle model (`espm`) with electrolyte mass and
//!   charge conservation, extensible with degradation mechanisms
//!   (`degradation`) and a two-phase core-shell positive particle
//!   (`coreshell`);
//! * simulation-in-the-loop parameter identification (`identification`)
//!   built on a bound-constrained differential-evolution optimizer;
//! * data-driven state-of-health estimation (`soh`) with bagged Gaussian
//!   process regression, and a learned hysteresis compensator (`hybrid`)
//!   composed with the physics voltage.
//!
//! All solvers are deterministic for a fixed seed; random streams are fanned
//! out from a single root seed via [`seeds::subseed`].

pub mod config;
pub mod constants;
pub mod coreshell;
pub mod degradation;
pub mod drivecycle;
pub mod espm;
pub mod grid;
pub mod hybrid;
pub mod identification;
pub mod numeric;
pub mod ocp;
pub mod params;
pub mod seeds;
pub mod soh;
pub mod state;
pub mod timeseries;

pub use grid::SpatialGrid;
pub use ocp::{OcpBranches, OcpTable};
pub use params::CellParameters;
pub use state::CellState;
pub use timeseries::TimeSeries;
