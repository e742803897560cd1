//! Simulation of a nonlinear search on an `n`-qubit input register with one
//! flag qubit.
//!
//! * [`qstate`]: dense state vectors, single-qubit gates, partial traces.
//! * [`pipeline`]: Steps 1–4 with the idealized pairwise regrouping Step 4.
//! * [`nldyn`]: the flag-local nonlinear flow, its closed-form solution and
//!   an RK4 integrator used to check it.
//! * [`locality`]: reduced-state bookkeeping that separates the signaling
//!   pairwise map from the flag-local flow.
//! * [`verify`]: batch invariant suites.

pub mod io;
pub mod locality;
pub mod nldyn;
pub mod pipeline;
pub mod qstate;
pub mod verify;

pub use nldyn::{Decision, NonlinearParams, Trajectory};
pub use pipeline::OracleSpec;
pub use qstate::{DensityMatrix, StateVector, Subsystem};
