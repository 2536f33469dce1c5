// SPDX-License-Identifier: Apache-2.0

//! Timing-error analysis of the exact two-segment protocol
//! `U₂(τ₀) U₁(τ* − τ₀) ψ⁻(0)`, with `U₁ = exp(−itH(0, 1))` and
//! `U₂ = exp(−itH(1, 1))`.
//!
//! The start of the dynamics, the field turn-on and the field turn-off are
//! shifted by independent offsets `δt₀, δt₁, δt₂` drawn uniformly from
//! `[−ε/2, ε/2]`.

use std::io::Write;

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{infidelity, Case, CornerSpectra, StateVector};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{self, CVec4, RMat4, SymmetricEigen, DIM};
use crate::optimizer::local::{Bounds, NelderMead};
use crate::optimizer::MinTimeResult;
use crate::protocol::{Protocol, Segment};
use crate::streams;

/// Upper bound on either nominal duration during the polish.
const MAX_DURATION: f64 = 2.0;

/// The unperturbed two-segment protocol.
#[derive(Debug, Clone)]
pub struct NominalProtocol {
    /// Duration of the `H₁` segment, `τ* − τ₀`.
    first: f64,
    /// Duration of the `H₂` segment, `τ₀`.
    second: f64,
    spectra: CornerSpectra,
}

impl NominalProtocol {
    pub fn from_durations(first: f64, second: f64) -> Result<Self> {
        ensure_finite("first", first)?;
        ensure_finite("second", second)?;
        if first < 0.0 || second < 0.0 {
            return Err(Error::invalid("durations", "must be nonnegative"));
        }
        Ok(Self {
            first,
            second,
            spectra: CornerSpectra::new(Case::Minus)?,
        })
    }

    /// Starts from the critical times of a minimum-time search and refines
    /// both durations to the nearest exact zero of the error.
    pub fn from_min_time(m: &MinTimeResult) -> Result<Self> {
        let rough = Self::from_durations(m.tau_star - m.tau_0, m.tau_0)?;
        let simplex = NelderMead {
            x_tol: 1e-13,
            f_tol: 1e-30,
            initial_step: 1e-3,
            max_evaluations: 20_000,
        };
        let bounds = [Bounds {
            lower: 0.0,
            upper: MAX_DURATION,
        }; 2];
        let out = simplex.minimize(
            |x| Ok(rough.error_for(x[0], x[1])),
            &[rough.first, rough.second],
            &bounds,
        )?;
        Self::from_durations(out.x[0], out.x[1])
    }

    pub fn tau_0(&self) -> f64 {
        self.second
    }

    pub fn tau_star(&self) -> f64 {
        self.first + self.second
    }

    pub fn error(&self) -> f64 {
        self.error_for(self.first, self.second)
    }

    fn error_for(&self, first: f64, second: f64) -> f64 {
        let psi0 = StateVector::psi_minus_initial().c;
        let mid = self.spectra.coupling_only().apply_exp_i(first, &psi0);
        infidelity(&StateVector::new(self.spectra.both_on().apply_exp_i(second, &mid)))
    }

    /// Durations of the two segments under `jitter`.
    pub fn jittered_durations(&self, jitter: &TimingJitter) -> Result<(f64, f64)> {
        jitter.validate()?;
        let first = self.first + jitter.dt1 - jitter.dt0;
        let second = self.second + jitter.dt2 - jitter.dt1;
        if first < 0.0 || second < 0.0 {
            return Err(Error::invalid(
                "jitter",
                format!("segment durations become negative ({first}, {second})"),
            ));
        }
        Ok((first, second))
    }

    /// Exact error of the jittered protocol.
    pub fn perturbed_error(&self, jitter: &TimingJitter) -> Result<f64> {
        let (first, second) = self.jittered_durations(jitter)?;
        Ok(self.error_for(first, second))
    }

    /// The jittered protocol as an ordinary segment list.
    pub fn jittered_protocol(&self, jitter: &TimingJitter) -> Result<Protocol> {
        let (first, second) = self.jittered_durations(jitter)?;
        Protocol::new(
            Case::Minus,
            vec![
                Segment {
                    dt: first,
                    b: 0.0,
                    j: 1.0,
                },
                Segment {
                    dt: second,
                    b: 1.0,
                    j: 1.0,
                },
            ],
        )
    }

    /// The five second-order contributions to the mean error, each divided
    /// by `ε²`.
    pub fn second_order_terms(&self) -> [f64; 5] {
        let h1 = hamiltonian(self.spectra.coupling_only());
        let h2 = hamiltonian(self.spectra.both_on());
        let psi0 = StateVector::psi_minus_initial().c;
        let target = StateVector::singlet().c;

        let u1 = |v: &CVec4| self.spectra.coupling_only().apply_exp_i(self.first, v);
        let u2 = |v: &CVec4| self.spectra.both_on().apply_exp_i(self.second, v);
        let project = |v: &CVec4| {
            let a = linalg::inner(&target, v);
            target.map(|t| t * a)
        };
        let h = |m: &RMat4, v: &CVec4| linalg::real_matvec(m, v);

        let phi = u1(&psi0);
        // ⟨ψ(0)|𝒰₁† A 𝒰₂† ρ 𝒰₂ B 𝒰₁|ψ(0)⟩ = ⟨A φ| 𝒰₂† ρ 𝒰₂ |B φ⟩ for Hermitian A.
        let sandwich = |left: &CVec4, right: &CVec4| {
            let r = u2(right);
            let l = u2(left);
            linalg::inner(&l, &project(&r))
        };
        let h_sq = |m: &RMat4| h(m, &h(m, &phi));
        let sum_sq: CVec4 = std::array::from_fn(|i| h_sq(&h1)[i] + h_sq(&h2)[i]);

        [
            sandwich(&phi, &sum_sq).re / 6.0,
            -sandwich(&phi, &h(&h2, &h(&h1, &phi))).re / 6.0,
            sandwich(&h(&h1, &phi), &h(&h2, &phi)).re / 6.0,
            -sandwich(&h(&h1, &phi), &h(&h1, &phi)).re / 6.0,
            -sandwich(&h(&h2, &phi), &h(&h2, &phi)).re / 6.0,
        ]
    }

    /// Mean error to second order in `ε`.
    pub fn second_order_mean(&self, epsilon: f64) -> f64 {
        epsilon * epsilon * self.second_order_terms().iter().sum::<f64>()
    }
}

fn hamiltonian(eig: &SymmetricEigen) -> RMat4 {
    let v = &eig.vectors;
    let mut h = [[0.0; DIM]; DIM];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (0..DIM).map(|k| v[i][k] * eig.values[k] * v[j][k]).sum();
        }
    }
    h
}

/// Offsets of the start, field turn-on and field turn-off times.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TimingJitter {
    pub dt0: f64,
    pub dt1: f64,
    pub dt2: f64,
}

impl TimingJitter {
    pub fn new(dt0: f64, dt1: f64, dt2: f64) -> Result<Self> {
        let j = Self { dt0, dt1, dt2 };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("dt0", self.dt0)?;
        ensure_finite("dt1", self.dt1)?;
        ensure_finite("dt2", self.dt2)
    }
}

/// The jitter of realization `index`: three uniform draws on
/// `[−ε/2, ε/2]` from that realization's own stream.
pub fn draw_jitter(epsilon: f64, seed: u64, index: u64) -> TimingJitter {
    let mut rng = streams::stream(seed, index);
    let mut draw = || epsilon * (rng.random::<f64>() - 0.5);
    let dt0 = draw();
    let dt1 = draw();
    let dt2 = draw();
    TimingJitter { dt0, dt1, dt2 }
}

pub fn jitter_samples(epsilon: f64, n_samples: usize, seed: u64) -> Vec<TimingJitter> {
    (0..n_samples as u64).map(|i| draw_jitter(epsilon, seed, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessStats {
    pub epsilon: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl RobustnessStats {
    pub fn mean_over_eps2(&self) -> f64 {
        self.mean_error / (self.epsilon * self.epsilon)
    }

    pub fn std_over_eps2(&self) -> f64 {
        self.std_error / (self.epsilon * self.epsilon)
    }
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    ensure_finite("epsilon", epsilon)?;
    if epsilon < 0.0 {
        return Err(Error::invalid("epsilon", "must be nonnegative"));
    }
    Ok(())
}

/// Sample mean and population standard deviation of the jittered error.
/// Realizations are evaluated in parallel and reduced in index order, so the
/// result does not depend on the thread count.
pub fn monte_carlo(nominal: &NominalProtocol, epsilon: f64, n_samples: usize, seed: u64) -> Result<RobustnessStats> {
    validate_epsilon(epsilon)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let errors: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| nominal.perturbed_error(&draw_jitter(epsilon, seed, i)))
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mean = compensated_sum(errors.iter().copied()) / n;
    let var = compensated_sum(errors.iter().map(|e| (e - mean) * (e - mean))) / n;
    Ok(RobustnessStats {
        epsilon,
        mean_error: mean.max(0.0),
        std_error: var.max(0.0).sqrt(),
        n_samples,
        seed,
    })
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Leading-order mean error `⅔ε²`.
pub fn analytic_mean(epsilon: f64) -> f64 {
    2.0 / 3.0 * epsilon * epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<RobustnessStats>,
    /// Log-log slope of the mean error against `ε`.
    pub mean_exponent: Option<f64>,
    /// Log-log slope of the standard deviation against `ε`.
    pub std_exponent: Option<f64>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "epsilon,mean_error,std_error,n_samples,mean_over_eps2,std_over_eps2";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.10e},{:.10e},{},{:.6},{:.6}",
                r.epsilon,
                r.mean_error,
                r.std_error,
                r.n_samples,
                r.mean_over_eps2(),
                r.std_over_eps2()
            )?;
        }
        Ok(())
    }
}

pub fn sweep(nominal: &NominalProtocol, epsilons: &[f64], n_samples: usize, seed: u64) -> Result<SweepResult> {
    if epsilons.is_empty() {
        return Err(Error::invalid("epsilon", "list is empty"));
    }
    let rows = epsilons
        .iter()
        .map(|&e| monte_carlo(nominal, e, n_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let fit = |value: fn(&RobustnessStats) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.epsilon > 0.0 && value(r) > 0.0)
            .map(|r| (r.epsilon.ln(), value(r).ln()))
            .collect();
        log_log_slope(&pts)
    };
    Ok(SweepResult {
        mean_exponent: fit(|r| r.mean_error),
        std_exponent: fit(|r| r.std_error),
        rows,
    })
}

/// Least-squares slope; `None` with fewer than two distinct abscissae.
fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
