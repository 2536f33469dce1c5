// SPDX-License-Identifier: Apache-2.0

//! Time-optimal preparation of the singlet state on two coupled gmon qubits.
//!
//! - [`dynamics`]: the 4×4 Hamiltonian, exact piecewise-constant propagation,
//!   error measure and spectral gap.
//! - [`protocol`]: piecewise-constant control schedules and the bang-bang ansatz.
//! - [`optimizer`]: brute-force and bang-bang optimization, minimum-time search.
//! - [`pontryagin`]: costate, switching function, singular-arc diagnostics.
//! - [`robustness`]: Monte Carlo error statistics under timing jitter.
//! - [`cli`]: the `gmon-control` command line.

// Fixed-size matrix kernels read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod pontryagin;
pub mod protocol;
pub mod robustness;
pub(crate) mod streams;
