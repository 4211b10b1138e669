//! Quantum energy teleportation (QET) on critical transverse-field Ising chains.
//!
//! The crate runs the measurement / classical-communication / feedback protocol
//! on exactly diagonalized finite chains and checks the outcome against the
//! closed-form predictions for the infinite critical chain:
//!
//! - [`chain`]: energy density operators `T_n`, offset calibration so that
//!   `<g|T_n|g> = 0`, the local spectrum of `T_n` and the non-factorization test.
//! - [`eigensolver`]: matrix-free Lanczos ground states for Pauli-sum operators.
//! - [`protocol`]: A's projective measurement, B's conditional rotation and the
//!   energy bookkeeping (`E_A`, `xi`, `eta`, `theta*`, `E_B`).
//! - [`analytics`]: `h(n)`, `Delta(n)`, the closed-form teleported energy, its
//!   power-law tail and the analytic residual energy, all in log domain.
//! - [`cooling`]: minimization of the residual energy over A's local channels.
//! - [`cli`]: the `qet` command-line surface (`ground`, `teleport`, `sweep`,
//!   `analytic`, `cool`).
//!
//! ```
//! use qet::chain::{calibrate, Boundary, ChainSpec};
//! use qet::eigensolver::SolverOptions;
//! use qet::protocol::{run_protocol, MeasurementSetup};
//!
//! let spec = ChainSpec::new(8, 1.0, Boundary::Periodic, 0, 1).unwrap();
//! let chain = calibrate(spec, &SolverOptions::default()).unwrap();
//! let setup: MeasurementSetup = "y,x".parse().unwrap();
//! let result = run_protocol(&chain, &setup, None).unwrap();
//! assert!(result.e_b > 0.0);
//! assert!(result.e_a >= result.e_b);
//! ```

pub mod analytics;
pub mod chain;
pub mod cli;
pub mod cooling;
pub mod eigensolver;
pub mod error;
pub mod optim;
pub mod pauli;
pub mod protocol;
pub mod state;

pub use error::{QetError, Result};
pub use num_complex::Complex64;
