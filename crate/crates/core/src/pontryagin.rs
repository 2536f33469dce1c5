// SPDX-License-Identifier: Apache-2.0

//! Costate analysis of the one-switch protocol `B = 0` on `[0, t_B)`,
//! `B = 1` on `[t_B, τ]`, with `J = 1` throughout.
//!
//! The state runs forward from ψ⁻(0); the costate runs backward from
//! `Π(τ) = ℳψ(τ)`. Both obey the same Schrödinger equation. The sign of
//! `s(t) = −Im⟨Π(t)|𝒦|ψ(t)⟩`, with `𝒦 = ∂H/∂B`, selects the bang value of
//! `B`; where `s` vanishes on an interval the control is singular.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{coupling_derivative, field_derivative, permutation_q, Case, CornerSpectra, StateVector};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{self, CMat4, CVec4, RMat4, C64, DIM};

/// `|s|` below this counts as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;
/// Consecutive near-zero samples needed for a singular interval.
pub const SINGULAR_MIN_RUN: usize = 5;
pub const DEFAULT_GRID: usize = 2001;
/// Offset past `t_B` at which the self-consistency residual is sampled.
const SWITCH_PROBE: f64 = 1e-9;
/// Number of `t_B` cells scanned for the first sign change.
const ROOT_SCAN_CELLS: usize = 1000;

/// Terminal-cost matrix `ℳ`: `Π(τ) = ℳψ(τ)`.
pub fn terminal_cost_matrix() -> RMat4 {
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 1.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMatrices {
    pub m: RMat4,
    pub k: RMat4,
    pub q: RMat4,
}

impl ConstantMatrices {
    pub fn new(case: Case) -> Self {
        Self {
            m: terminal_cost_matrix(),
            k: field_derivative(case),
            q: permutation_q(),
        }
    }
}

/// Conjugate momentum `Π = P_ℛ + i P_ℐ`. Not normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Costate {
    pub pi: CVec4,
}

impl Costate {
    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.pi)
    }

    /// `⟨Π|ψ⟩`.
    pub fn overlap(&self, psi: &StateVector) -> C64 {
        linalg::inner(&self.pi, &psi.c)
    }

    /// `−Im⟨Π|A|ψ⟩`.
    pub fn coefficient(&self, a: &RMat4, psi: &StateVector) -> f64 {
        -linalg::inner(&self.pi, &linalg::real_matvec(a, &psi.c)).im
    }
}

pub fn terminal_costate(final_state: &StateVector) -> Result<Costate> {
    if !final_state.is_normalized() {
        return Err(Error::NotNormalized {
            norm_sqr: final_state.norm_sqr(),
        });
    }
    Ok(Costate {
        pi: linalg::real_matvec(&terminal_cost_matrix(), &final_state.c),
    })
}

/// State and costate along the one-switch protocol `(τ, t_B)`.
#[derive(Debug, Clone)]
pub struct SwitchedTrajectory {
    tau: f64,
    t_b: f64,
    spectra: CornerSpectra,
    initial: CVec4,
    at_switch: CVec4,
    terminal_costate: CVec4,
}

impl SwitchedTrajectory {
    pub fn new(tau: f64, t_b: f64) -> Result<Self> {
        Self::with_spectra(CornerSpectra::new(Case::Minus)?, tau, t_b)
    }

    fn with_spectra(spectra: CornerSpectra, tau: f64, t_b: f64) -> Result<Self> {
        ensure_finite("tau", tau)?;
        ensure_finite("t_B", t_b)?;
        if tau <= 0.0 {
            return Err(Error::invalid("tau", "must be positive"));
        }
        if !(0.0..=tau).contains(&t_b) {
            return Err(Error::invalid("t_B", format!("must lie in [0, {tau}]")));
        }
        let initial = StateVector::initial(spectra.case()).c;
        let at_switch = spectra.coupling_only().apply_exp_i(t_b, &initial);
        let final_state = spectra.both_on().apply_exp_i(tau - t_b, &at_switch);
        let terminal_costate = linalg::real_matvec(&terminal_cost_matrix(), &final_state);
        Ok(Self {
            tau,
            t_b,
            spectra,
            initial,
            at_switch,
            terminal_costate,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    pub fn state(&self, t: f64) -> StateVector {
        let c = if t < self.t_b {
            self.spectra.coupling_only().apply_exp_i(t, &self.initial)
        } else {
            self.spectra.both_on().apply_exp_i(t - self.t_b, &self.at_switch)
        };
        StateVector::new(c)
    }

    pub fn costate(&self, t: f64) -> Costate {
        let from_end = self
            .spectra
            .both_on()
            .apply_exp_i(-(self.tau - t.max(self.t_b)), &self.terminal_costate);
        let pi = if t < self.t_b {
            self.spectra.coupling_only().apply_exp_i(-(self.t_b - t), &from_end)
        } else {
            from_end
        };
        Costate { pi }
    }

    /// `s(t) = −Im⟨Π(t)|𝒦|ψ(t)⟩`.
    pub fn switching(&self, t: f64) -> f64 {
        self.costate(t)
            .coefficient(&field_derivative(self.spectra.case()), &self.state(t))
    }

    /// `−Im⟨Π(t)|∂H/∂J|ψ(t)⟩`.
    pub fn coupling_coefficient(&self, t: f64) -> f64 {
        self.costate(t).coefficient(&coupling_derivative(), &self.state(t))
    }

    fn sample(&self, n_grid: usize, f: impl Fn(&Self, f64) -> f64 + Sync) -> Result<(Vec<f64>, Vec<f64>)> {
        if n_grid < 2 {
            return Err(Error::invalid("n_grid", "need at least 2 points"));
        }
        let times: Vec<f64> = (0..n_grid).map(|i| self.tau * i as f64 / (n_grid - 1) as f64).collect();
        let values = times.par_iter().map(|&t| f(self, t)).collect();
        Ok((times, values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Bang0,
    Bang1,
    Singular,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Bang0 => "bang0",
            Regime::Bang1 => "bang1",
            Regime::Singular => "singular",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingTrace {
    pub tau: f64,
    pub t_b: f64,
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub singular_intervals: Vec<(f64, f64)>,
}

impl SwitchingTrace {
    /// Rows `t,s,regime` with a column header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,s,regime")?;
        for ((t, s), r) in self.times.iter().zip(&self.s).zip(&self.regimes) {
            writeln!(out, "{t:.10},{s:.6e},{r}")?;
        }
        Ok(())
    }
}

pub fn switching_trace(tau: f64, t_b: f64, n_grid: usize) -> Result<SwitchingTrace> {
    let traj = SwitchedTrajectory::new(tau, t_b)?;
    let (times, s) = traj.sample(n_grid, SwitchedTrajectory::switching)?;
    let (regimes, runs) = classify(&s);
    let singular_intervals = runs.into_iter().map(|(a, b)| (times[a], times[b])).collect();
    Ok(SwitchingTrace {
        tau,
        t_b,
        times,
        s,
        regimes,
        singular_intervals,
    })
}

/// Regime per sample and the index ranges of singular runs. Isolated zeros
/// keep the preceding bang value (the following one at the start).
fn classify(s: &[f64]) -> (Vec<Regime>, Vec<(usize, usize)>) {
    let small: Vec<bool> = s.iter().map(|v| v.abs() < SINGULAR_THRESHOLD).collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if small[i] {
            let start = i;
            while i < s.len() && small[i] {
                i += 1;
            }
            if i - start >= SINGULAR_MIN_RUN {
                runs.push((start, i - 1));
            }
        } else {
            i += 1;
        }
    }

    let bang = |v: f64| if v > 0.0 { Regime::Bang1 } else { Regime::Bang0 };
    let first_bang = s
        .iter()
        .zip(&small)
        .find(|(_, &z)| !z)
        .map_or(Regime::Bang0, |(&v, _)| bang(v));
    let mut regimes = Vec::with_capacity(s.len());
    let mut previous = first_bang;
    let mut run = runs.iter().peekable();
    for (idx, &v) in s.iter().enumerate() {
        while run.peek().is_some_and(|r| r.1 < idx) {
            run.next();
        }
        let regime = if run.peek().is_some_and(|r| r.0 <= idx) {
            Regime::Singular
        } else if small[idx] {
            previous
        } else {
            previous = bang(v);
            previous
        };
        regimes.push(regime);
    }
    (regimes, runs)
}

/// Self-consistent switching time: the `t_B` at which the switching
/// function of its own protocol changes sign exactly at `t_B`.
///
/// Scans `t_B` upward for the first sign change of `g(t_B) = s(t_B + δ)`
/// and bisects it to floating-point resolution.
pub fn solve_switching_time(tau: f64) -> Result<f64> {
    ensure_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::invalid("tau", "must be positive"));
    }
    let spectra = CornerSpectra::new(Case::Minus)?;
    let g = |t_b: f64| -> Result<f64> {
        Ok(SwitchedTrajectory::with_spectra(spectra.clone(), tau, t_b)?.switching(t_b + SWITCH_PROBE))
    };

    let upper = tau - 2.0 * SWITCH_PROBE;
    let node = |k: usize| upper * k as f64 / ROOT_SCAN_CELLS as f64;
    let mut lo = node(1);
    let mut g_lo = g(lo)?;
    let mut bracket = None;
    for k in 2..=ROOT_SCAN_CELLS {
        let hi = node(k);
        let g_hi = g(hi)?;
        if g_lo != 0.0 && g_hi != 0.0 && g_lo.signum() != g_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        if g_hi != 0.0 {
            lo = hi;
            g_lo = g_hi;
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::NoRoot(format!(
            "switching residual keeps its sign for t_B in (0, {tau})"
        )));
    };

    let neg_at_lo = g_lo < 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `U₂†(τ₀) ℳ U₂(τ₀)` with `U₂ = exp(−iτ₀H(1, 1))`.
pub fn conjugate_matrix(tau_0: f64) -> Result<CMat4> {
    ensure_finite("tau_0", tau_0)?;
    if tau_0 < 0.0 {
        return Err(Error::invalid("tau_0", "must be nonnegative"));
    }
    let spectra = CornerSpectra::new(Case::Minus)?;
    let u2 = spectra.both_on().exp_i(tau_0);
    let m = linalg::to_complex(&terminal_cost_matrix());
    Ok(linalg::matmul(&linalg::adjoint(&u2), &linalg::matmul(&m, &u2)))
}

/// `𝒞 = ⟨ψ(0)|U₁†(t_B) U₂†(τ₀) ℳ U₂(τ₀) U₁(t_B) · U₁†(t) 𝒦 U₁(t)|ψ(0)⟩`.
pub fn singular_invariant_c(t: f64, t_b: f64, tau_0: f64) -> Result<C64> {
    for (name, v) in [("t", t), ("t_B", t_b), ("tau_0", tau_0)] {
        ensure_finite(name, v)?;
    }
    let spectra = CornerSpectra::new(Case::Minus)?;
    let (u1, u2) = (spectra.coupling_only(), spectra.both_on());
    let psi0 = StateVector::psi_minus_initial().c;

    let forward = u2.apply_exp_i(tau_0, &u1.apply_exp_i(t_b, &psi0));
    let weighted = linalg::real_matvec(&terminal_cost_matrix(), &forward);
    let bra = u1.apply_exp_i(-t_b, &u2.apply_exp_i(-tau_0, &weighted));

    let k = field_derivative(Case::Minus);
    let ket = u1.apply_exp_i(-t, &linalg::real_matvec(&k, &u1.apply_exp_i(t, &psi0)));
    Ok(linalg::inner(&bra, &ket))
}

/// Samples `(t, −Im⟨Π(t)|∂H/∂J|ψ(t)⟩)` along the one-switch protocol.
pub fn dj_coefficient(tau: f64, t_b: f64, n_grid: usize) -> Result<Vec<(f64, f64)>> {
    let traj = SwitchedTrajectory::new(tau, t_b)?;
    let (times, values) = traj.sample(n_grid, SwitchedTrajectory::coupling_coefficient)?;
    Ok(times.into_iter().zip(values).collect())
}

/// `max |A_ij − conj(A_ji)|`.
pub fn hermiticity_defect(a: &CMat4) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..DIM {
        for j in 0..DIM {
            d = d.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    d
}
