//! Signal-space CoSaMP over overcomplete DFT dictionaries.
//!
//! * [`dictionary`]: the `n x d` DFT frame, its gram profile and cyclic
//!   support sets.
//! * [`separation`]: dominance factors, Gershgorin isometry bounds and
//!   recovery constants for well-separated supports.
//! * [`projection`]: approximate `s`-sparse projections (OMP, CoSaMP, basis
//!   pursuit, exhaustive oracle).
//! * [`recovery`]: the signal-space CoSaMP loop.
//! * [`sensing`]: measurement ensembles, structured sparse signals, noise and
//!   metrics.
//! * [`harness`]: the reproducible experiments behind the CLI.

pub mod dictionary;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod projection;
pub mod recovery;
pub mod sensing;
pub mod separation;

pub use dictionary::{cyclic_distance, Dictionary, SupportSet};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, RMatrix, C64};
pub use separation::{BoundMode, DominanceReport, SeparationProfile};
pub use projection::{Backend, ProjectionConfig, ProjectionOutcome};
pub use recovery::{recover, RecoveryConfig, SSCoSaMPState};
pub use sensing::{CoefficientModel, SensingInstance, SignalStructure};
pub use harness::{ExperimentKind, ExperimentSpec, ResultTable, Rows, RunOptions};
