//! Simulation and reconstruction toolkit for three-outcome Stern-Gerlach and
//! EPRB experiments.
//!
//! The forward direction generates event-level data from a source matrix and
//! magnet settings; the inverse direction rebuilds the source matrix, beam
//! projectors, and unitary evolution purely from event statistics, and tests
//! whether a multi-setting dataset is representable by any single source at
//! all.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod matrix;
pub mod projectors;
pub mod rng;
pub mod spin;
pub mod tomography;

mod lstsq;
#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
pub use experiment::{
    EventLog, ExperimentConfig, ExperimentKind, FrequencyTable, MomentSet, PairFrequencies,
    PairMoments, SingleFrequencies, SingleMoments,
};
pub use matrix::{C64, ComplexMatrix, Spectrum};
pub use projectors::ProjectorSet;
pub use spin::{AxisAngle, Direction, OperatorBasis, SpinTriple};
pub use tomography::{
    ExpansionCoefficients, Observation, PairObservation, Reconstruction, SeparabilityReport,
    SourceState,
};
pub use dynamics::{EvolutionReport, HamiltonianSchedule, PropagatorSolution};
