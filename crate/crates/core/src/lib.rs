//! Compile small fully connected networks into phased mass-action reaction
//! networks, simulate them, and check the chemistry against a floating-point
//! reference.

pub mod analysis;
pub mod compiler;
pub mod crn;
pub mod error;
pub mod integrator;
pub mod oracle;
pub mod oscillator;
pub mod presets;
pub mod training;
pub mod weights;

pub use crn::{add_catalyst, Complex, Crn, CrnBuilder, PhaseTag, Reaction, Role, SpeciesId, SpeciesRegistry, State};
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, Method, PhaseSchedule, Recording, Trajectory};
pub use oscillator::OscillatorSpec;
pub use weights::{WeightSet, Weights};
pub use compiler::{compile, compile_feedforward, BfcnnProgram, NetSpec, TrainSpec};
pub use oracle::Sample;
