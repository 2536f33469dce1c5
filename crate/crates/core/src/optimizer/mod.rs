// SPDX-License-Identifier: Apache-2.0

//! Protocol optimization.
//!
//! Two routes to the optimal schedule are provided and are meant to check
//! each other: a brute-force search over piecewise-constant controls
//! ([`optimize_pwc`]) and a two-parameter search over the bang-bang ansatz
//! ([`optimize_bang_bang`]). [`min_time_search`] bisects over the total time
//! with the latter.

mod bang_bang;
mod gradient;
pub mod local;
mod pwc;

use serde::Serialize;

use crate::protocol::{BangBangParams, Protocol};

pub use bang_bang::{bang_bang_error, min_time_search, optimize_bang_bang, optimize_bang_bang_with, BangBangSettings};
pub use gradient::{adjoint_gradient, error_and_gradient};
pub use pwc::{optimize_pwc, optimize_pwc_with, LocalMethod, PwcSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub tau: f64,
    pub best_error: f64,
    pub best_protocol: Protocol,
    /// Switching times when the result comes from the bang-bang ansatz.
    pub bang_bang: Option<BangBangParams>,
    pub restarts_used: usize,
    pub converged: bool,
    pub evaluations: usize,
}

impl OptimizationResult {
    pub fn t_b(&self) -> Option<f64> {
        self.bang_bang.map(|p| p.t_b)
    }

    pub fn t_j(&self) -> Option<f64> {
        self.bang_bang.map(|p| p.t_j)
    }

    pub fn to_record(&self) -> OptimizationRecord<'_> {
        OptimizationRecord {
            tau: self.tau,
            best_error: self.best_error,
            t_b: self.t_b(),
            t_j: self.t_j(),
            protocol: &self.best_protocol,
            restarts_used: self.restarts_used,
            converged: self.converged,
            evaluations: self.evaluations,
        }
    }
}

/// JSON shape of an optimization result.
#[derive(Debug, Serialize)]
pub struct OptimizationRecord<'a> {
    pub tau: f64,
    pub best_error: f64,
    #[serde(rename = "t_B")]
    pub t_b: Option<f64>,
    #[serde(rename = "t_J")]
    pub t_j: Option<f64>,
    pub protocol: &'a Protocol,
    pub restarts_used: usize,
    pub converged: bool,
    pub evaluations: usize,
}

/// Critical times of the bang-bang family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinTimeResult {
    /// Shortest total time reaching the error threshold.
    pub tau_star: f64,
    /// Longest total time for which the optimum is the constant pulse.
    pub tau_0: f64,
    /// Width of the final bracket around `tau_star`.
    pub bracket_width: f64,
}
