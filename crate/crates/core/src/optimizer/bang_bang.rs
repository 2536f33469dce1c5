// SPDX-License-Identifier: Apache-2.0

//! Two-parameter search over the bang-bang ansatz.
//!
//! The landscape over `(t_B, t_J) ∈ [0, τ]²` is scanned on a dense grid and
//! the best cell is polished with a bounded Nelder–Mead. Past the minimum
//! time the optimum is not unique; the solution with the smallest `t_J` is
//! then reported.

use rayon::prelude::*;

use super::local::{Bounds, NelderMead};
use super::{MinTimeResult, OptimizationResult};
use crate::dynamics::{infidelity, Case, CornerSpectra, StateVector};
use crate::error::{ensure_finite, Error, Result};
use crate::protocol::{bang_bang_protocol, BangBangParams};

/// Errors below this count as exact preparation.
const EXACT_ERROR: f64 = 1e-12;
/// Longest total time tried by [`min_time_search`].
const TAU_MAX: f64 = 2.0;
/// Grid local minima polished per call.
const MAX_POLISHED_MINIMA: usize = 16;
/// Absolute width at which the time bisections stop.
const TAU_BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBangSettings {
    /// Grid points per axis, including both endpoints.
    pub grid: usize,
    /// Parameter tolerance of the polish.
    pub polish_tol: f64,
}

impl Default for BangBangSettings {
    fn default() -> Self {
        Self {
            grid: 400,
            polish_tol: 1e-8,
        }
    }
}

/// Error of the bang-bang protocol `(τ, t_B, t_J)` from the case's initial
/// state, using cached corner spectra.
pub fn bang_bang_error(spectra: &CornerSpectra, tau: f64, t_b: f64, t_j: f64) -> f64 {
    let (first, second) = if t_b <= t_j { (t_b, t_j) } else { (t_j, t_b) };
    let cuts = [0.0, first, second, tau];
    let mut psi = StateVector::initial(spectra.case()).c;
    for w in cuts.windows(2) {
        let dt = w[1] - w[0];
        if dt <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        psi = spectra.get(mid >= t_b, mid < t_j).apply_exp_i(dt, &psi);
    }
    infidelity(&StateVector::new(psi))
}

pub fn optimize_bang_bang(tau: f64, case: Case) -> Result<OptimizationResult> {
    optimize_bang_bang_with(tau, case, &BangBangSettings::default())
}

pub fn optimize_bang_bang_with(tau: f64, case: Case, settings: &BangBangSettings) -> Result<OptimizationResult> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::invalid("tau", "must be positive"));
    }
    if settings.grid < 2 {
        return Err(Error::invalid("grid", "need at least 2 points per axis"));
    }
    let spectra = CornerSpectra::new(case)?;
    let n = settings.grid;
    let node = |i: usize| tau * i as f64 / (n - 1) as f64;
    let eval = |t_b: f64, t_j: f64| bang_bang_error(&spectra, tau, t_b, t_j);

    // Row-major over t_J so that ties resolve towards smaller t_J.
    let landscape: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| eval(node(idx % n), node(idx / n)))
        .collect();
    let mut evaluations = n * n;
    let bounds = [Bounds { lower: 0.0, upper: tau }; 2];
    let simplex = NelderMead {
        x_tol: settings.polish_tol,
        f_tol: 1e-18,
        initial_step: tau / (n - 1) as f64,
        max_evaluations: 20_000,
    };

    let mut polished = Vec::new();
    for cell in grid_local_minima(&landscape, n) {
        let out = simplex.minimize(|p| Ok(eval(p[0], p[1])), &[node(cell % n), node(cell / n)], &bounds)?;
        evaluations += out.evaluations;
        polished.push(out);
    }
    let best = polished
        .iter()
        .reduce(|best, o| {
            let better = if best.f < EXACT_ERROR && o.f < EXACT_ERROR {
                o.x[1] < best.x[1]
            } else {
                o.f < best.f
            };
            if better {
                o
            } else {
                best
            }
        })
        .expect("grid has a minimum");
    let (t_b, t_j, f, converged) = (best.x[0], best.x[1], best.f, best.converged);

    let params = BangBangParams::new(tau, t_b, t_j)?;
    let protocol = bang_bang_protocol(&params, case)?;
    Ok(OptimizationResult {
        tau,
        best_error: f.clamp(0.0, 1.0),
        best_protocol: protocol,
        bang_bang: Some(params),
        restarts_used: 1,
        converged,
        evaluations,
    })
}

/// Indices of the lowest grid cells that are no larger than any of their
/// eight neighbours.
fn grid_local_minima(landscape: &[f64], n: usize) -> Vec<usize> {
    let mut minima: Vec<usize> = (0..n * n)
        .filter(|&idx| {
            let (i, k) = ((idx % n) as isize, (idx / n) as isize);
            let v = landscape[idx];
            (-1..=1).all(|dk| {
                (-1..=1).all(|di| {
                    let (ii, kk) = (i + di, k + dk);
                    if ii < 0 || kk < 0 || ii >= n as isize || kk >= n as isize {
                        return true;
                    }
                    v <= landscape[kk as usize * n + ii as usize]
                })
            })
        })
        .collect();
    minima.sort_by(|&a, &b| landscape[a].total_cmp(&landscape[b]).then(a.cmp(&b)));
    minima.truncate(MAX_POLISHED_MINIMA);
    minima
}

/// Bisection over the total time with the bang-bang optimizer.
///
/// `tau_star` is the smallest τ whose optimal error is below
/// `error_threshold`; `tau_0` is the smallest τ whose optimal `t_B` exceeds
/// `tau_resolution`.
pub fn min_time_search(case: Case, error_threshold: f64, tau_resolution: f64) -> Result<MinTimeResult> {
    ensure_finite("error_threshold", error_threshold)?;
    ensure_finite("tau_resolution", tau_resolution)?;
    if !(error_threshold > 0.0 && error_threshold < 0.5) {
        return Err(Error::invalid("error_threshold", "must lie in (0, 0.5)"));
    }
    if tau_resolution <= 0.0 {
        return Err(Error::invalid("tau_resolution", "must be positive"));
    }

    let reaches = |tau: f64| -> Result<bool> { Ok(optimize_bang_bang(tau, case)?.best_error < error_threshold) };
    if !reaches(TAU_MAX)? {
        return Err(Error::Bracket(format!(
            "error threshold {error_threshold} not reached for τ ≤ {TAU_MAX}"
        )));
    }
    // At τ = 0 the error is that of the initial state, at least 0.5.
    let (mut lo, mut hi) = (0.0, TAU_MAX);
    while hi - lo > TAU_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tau_star = hi;
    let bracket_width = hi - lo;

    let switches =
        |tau: f64| -> Result<bool> { Ok(optimize_bang_bang(tau, case)?.t_b().unwrap_or(0.0) > tau_resolution) };
    if !switches(tau_star)? {
        return Err(Error::Bracket(format!(
            "optimal t_B at τ* = {tau_star} does not exceed the resolution {tau_resolution}"
        )));
    }
    let (mut lo, mut hi) = (0.0, tau_star);
    while hi - lo > TAU_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if switches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(MinTimeResult {
        tau_star,
        tau_0: hi,
        bracket_width,
    })
}
