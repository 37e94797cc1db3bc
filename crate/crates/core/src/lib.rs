//! Simulation of two charge qubits with an always-on capacitive coupling,
//! and a compiler that turns gates (up to a CNOT) into piecewise-constant
//! detuning and drive schedules for that device.
//!
//! Conventions used throughout: basis order `|11⟩, |10⟩, |01⟩, |00⟩`,
//! `σ_z|1⟩ = +|1⟩`, `ħ = 1`, energies in units of the reference drive strength.

pub mod compiler;
pub mod evolution;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;

pub use compiler::{
    compile_cnot, ideal_gate, verify_schedule, CompileError, CompiledGate, Compiler,
    CompilerConfig, DriveMode, GateSpec, PhaseLedger, VerifyReport,
};
pub use evolution::{propagate, propagate_rk4, EvolutionResult, Model, PulseSegment, Schedule};
pub use hamiltonian::{BasisState, DeviceParams, Qubit, QubitParams};
pub use linalg::{Mat2, Mat4, Vec4, C64};
