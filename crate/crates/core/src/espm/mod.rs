//! Enhanced single-particle model: solid and electrolyte mass transport,
//! electrolyte charge transport, interfacial kinetics, and the assembled
//! terminal voltage, integrated by [`simulate::Simulator`].

pub mod electrolyte;
pub mod kinetics;
pub mod simulate;
pub mod solid;

use thiserror::Error;

pub use kinetics::{
    effective_transport, exchange_current_density, overpotential, soc, terminal_voltage,
    VoltageTerms,
};
pub use simulate::{SimulationOptions, SimulationOutput, Simulator};

#[derive(Debug, Error, PartialEq)]
pub enum EspmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("linear solve degenerated ({0})")]
    Singular(&'static str),
    #[error("solid concentration left [0, c_max] beyond tolerance at node {node}: {value}")]
    Saturation { node: usize, value: f64 },
    #[error("electrolyte concentration became non-positive at cell {cell}: {value}")]
    Depletion { cell: usize, value: f64 },
    #[error("step failed at t = {time} s after {substeps} sub-step refinements: {source}")]
    StepFailed {
        time: f64,
        substeps: u32,
        #[source]
        source: Box<EspmError>,
    },
    #[error("core-shell: {0}")]
    CoreShell(#[from] crate::coreshell::CoreShellError),
}
