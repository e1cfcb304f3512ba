//! Spectral split-operator simulation of electron displacement by
//! single-cycle pulses.
//!
//! Fields live on uniform grids whose inner axis is a periodic `z`. The
//! cylindrical model stores `u = sqrt(2 pi rho) psi` on a staggered `rho`
//! axis expanded in the eigenbasis of the radial operator, so every
//! kinetic factor is diagonal and the propagator is unitary to round-off.

pub mod error;
pub mod grid;
pub mod io;
pub mod models;
pub mod pulse;
pub mod radial;
pub mod retrieval;
pub mod solver;
pub mod spectral;
pub mod wavefield;

pub use error::{Error, Result};
pub use grid::{build_grid, Axis, Boundary, CoordinateSystem, Grid, SpectralSpace, VolumeElement};
pub use models::{HydrogenicLabel, PotentialField, PotentialLabel, Spin, SuperpositionSpec};
pub use pulse::{Direction, PulseTrain, SingleCyclePulse};
pub use retrieval::{
    fit_phase, fit_table, fit_theta, pz_model, scan, scan_by_linearity, PhaseFit, ScanProblem,
    ScanSpec, ScanTable, ThetaFit,
};
pub use solver::{
    eigensolve_1d, propagate, relax, Mode, PropagationPlan, Propagator, RecordSpec, RelaxOptions,
    Trajectory,
};
pub use spectral::Transformer;
pub use wavefield::{DensityTrace, Representation, SpectralOps, WaveField};
