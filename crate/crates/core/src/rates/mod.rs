//! Discrete-time interest rate models.

pub mod inflation;
pub mod info;
pub mod kernel;
pub mod lattice;

pub use inflation::InflationModel;
pub use info::{InfoKernelSpec, KernelFactor};
pub use kernel::{KernelModel, RationalModelSpec};
pub use lattice::{ScenarioTree, Values};
