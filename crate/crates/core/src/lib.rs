//! Exact Fock-space simulation of a linear-optics entanglement concentration
//! protocol for concatenated GHZ states.
//!
//! States are sparse superpositions over photon-number basis states of
//! labelled spatial modes with H/V polarization. Optical elements act as
//! creation-operator substitutions, so bunching and bosonic factors come out
//! exactly.

pub mod analysis;
pub mod correction;
pub mod error;
pub mod exec;
pub mod fock;
pub mod measurement;
pub mod optics;
pub mod output;
pub mod protocol;
pub mod reference;
pub mod verify;

pub use analysis::{oracle_enumerate, run_sweep, run_sweep_with, Column, OracleReport, SweepRow, SweepSpec};
pub use correction::{correction_for, correction_table, correction_table_with, CorrectionTable};
pub use error::{Error, Result};
pub use exec::Execution;
pub use fock::{FockBasisState, ModeId, ModeRegistry, PhotonState, Polarization};
pub use measurement::{
    measure_pm, measure_pm_with, post_select, DetectionPattern, MeasurementResult, PostSelectionRule, Sign,
};
pub use optics::{
    apply_bit_flip, apply_circuit, apply_hwp, apply_pbs, apply_pbs_with, apply_phase_flip, Circuit, CircuitElement,
    ReflectionPhase,
};
pub use protocol::{
    analytic_success, build_ecp_circuit, build_ecp_circuit_with, c_ghz_state, ghz_state, run_ecp, run_ecp_with,
    swapped_copy, target_state, trace_stage, CghzParams, EcpCircuit, EcpLayout, EcpOptions, EcpOutcome, EcpReport,
    GhzSign, Stage, StageSnapshot,
};
pub use verify::{run_checks, CheckResult, VerifyOptions};
