//! Conversational programming toolkit for a quadruped robot.
//!
//! Plain-language instructions become SPL programs through [`decompose`].
//! Programs run through [`interp`] against the [`sim`] world, locally or
//! over the UDP [`wire`] protocol.

pub mod convert;
pub mod decompose;
pub mod dialog;
pub mod interp;
pub mod numbers;
pub mod sim;
pub mod spl;
#[cfg(feature = "testing")]
pub mod testing;
pub mod wire;

pub use decompose::{Decomposer, FunctionRegistry, RegistryEntry};
pub use dialog::{DialogState, Phase, Reply};
pub use interp::{ExecutionLimits, ExecutionTrace, HaltReason, Robot};
pub use sim::{Telemetry, World};
pub use spl::{Condition, Identifier, ObjectLabel, Program, Statement};
