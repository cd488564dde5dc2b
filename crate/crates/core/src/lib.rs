//! Simulation engine for remote state preparation of qudits over EPR pairs.
//!
//! Alice and Bob share `L` EPR pairs. Alice knows a target qudit, measures
//! her half of the channel in a basis built from it, and sends a classical
//! message; Bob applies a local correction. Three protocols are provided:
//!
//! * [`EquatorialProtocol`]: qudits with equal-magnitude amplitudes, exact on
//!   success with probability `s / 2^L`.
//! * [`RealMinProtocol`]: arbitrary real qudits with `s ≤ 8`, always exact,
//!   using the minimum number of pairs.
//! * [`SeparableProtocol`]: larger real qudits that factor across groups of
//!   at most three qubits.
//!
//! All of them implement [`Protocol`], so [`run_exhaustive`],
//! [`run_sampled`] and [`monte_carlo`] drive any of them.

pub mod channel;
pub mod equatorial;
pub mod error;
pub mod linalg;
pub mod realspace;
pub mod separable;
pub mod states;

pub use channel::{
    monte_carlo, run, run_exhaustive, run_sampled, teleport_cost, BranchRecord, BranchTable,
    CbitMode, ClassicalMessage, EprChannel, MeasureMode, MonteCarloSummary, Protocol,
    ProtocolTranscript, RunOutput, TranscriptExport,
};
pub use equatorial::EquatorialProtocol;
pub use error::{Result, RspError};
pub use linalg::{ComplexMatrix, DensityMatrix, StateVector, C64};
pub use realspace::{CorrectionStyle, RealMinProtocol};
pub use separable::{
    separability_measure, Grouping, GroupingPolicy, SeparabilityReport, SeparableProtocol,
    UsCatalog, UsTransform,
};
pub use states::{embed, PhaseMode, QuditSpec};
