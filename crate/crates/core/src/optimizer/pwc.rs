// SPDX-License-Identifier: Apache-2.0

use rand::RngExt;
use rayon::prelude::*;

use super::gradient::error_and_gradient;
use super::local::{Bounds, LocalOutcome, NelderMead, ProjectedGradient};
use super::OptimizationResult;
use crate::dynamics::{evolve, infidelity, Case, StateVector};
use crate::error::{ensure_finite, Error, Result};
use crate::protocol::{linear_protocol, make_pwc, Segment};
use crate::streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMethod {
    ProjectedGradient,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwcSettings {
    pub tau: f64,
    pub n_segments: usize,
    pub case: Case,
    /// Random starts in addition to the all-max and linear starts.
    pub restarts: usize,
    pub seed: u64,
    pub method: LocalMethod,
    pub gradient: ProjectedGradient,
    pub simplex: NelderMead,
}

impl PwcSettings {
    pub fn new(tau: f64, n_segments: usize, case: Case) -> Self {
        Self {
            tau,
            n_segments,
            case,
            restarts: 50,
            seed: 0,
            method: LocalMethod::ProjectedGradient,
            gradient: ProjectedGradient::default(),
            simplex: NelderMead {
                x_tol: 1e-9,
                f_tol: 1e-14,
                initial_step: 0.1,
                max_evaluations: 100_000,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        ensure_finite("tau", self.tau)?;
        if self.tau <= 0.0 {
            return Err(Error::invalid("tau", "must be positive"));
        }
        if self.n_segments == 0 {
            return Err(Error::invalid("n_segments", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn optimize_pwc(tau: f64, n_segments: usize, case: Case, restarts: usize, seed: u64) -> Result<OptimizationResult> {
    optimize_pwc_with(&PwcSettings {
        restarts,
        seed,
        ..PwcSettings::new(tau, n_segments, case)
    })
}

/// Multi-start local search over `[0, 1]^{2N}`. Start 0 is the all-max
/// pulse, start 1 the linear ramp, and the rest are uniform draws from the
/// per-start stream of `seed`.
pub fn optimize_pwc_with(settings: &PwcSettings) -> Result<OptimizationResult> {
    settings.validate()?;
    let n = settings.n_segments;
    let starts = settings.restarts + 2;

    let outcomes: Vec<LocalOutcome> = (0..starts)
        .into_par_iter()
        .map(|index| run_start(settings, &start_point(settings, index)?))
        .collect::<Result<_>>()?;

    // Ties go to the lowest start index.
    let best = outcomes
        .iter()
        .reduce(|best, o| if o.f < best.f { o } else { best })
        .expect("at least one start");
    let values: Vec<(f64, f64)> = (0..n).map(|k| (best.x[k], best.x[n + k])).collect();
    let protocol = make_pwc(settings.tau, &values, settings.case)?;
    let best_error = infidelity(&evolve(&StateVector::initial(settings.case), &protocol)?).clamp(0.0, 1.0);

    Ok(OptimizationResult {
        tau: settings.tau,
        best_error,
        best_protocol: protocol,
        bang_bang: None,
        restarts_used: starts,
        converged: best.converged,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
    })
}

fn start_point(settings: &PwcSettings, index: usize) -> Result<Vec<f64>> {
    let n = settings.n_segments;
    Ok(match index {
        0 => vec![1.0; 2 * n],
        1 => {
            let lin = linear_protocol(settings.tau, n, settings.case)?;
            let mut x: Vec<f64> = lin.segments().iter().map(|s| s.b).collect();
            x.extend(lin.segments().iter().map(|s| s.j));
            x
        }
        _ => {
            let mut rng = streams::stream(settings.seed, index as u64);
            (0..2 * n).map(|_| rng.random::<f64>()).collect()
        }
    })
}

fn run_start(settings: &PwcSettings, x0: &[f64]) -> Result<LocalOutcome> {
    let n = settings.n_segments;
    let dt = settings.tau / n as f64;
    let case = settings.case;
    let initial = StateVector::initial(case);
    let segments = move |x: &[f64]| -> Vec<Segment> {
        (0..n)
            .map(|k| Segment {
                dt,
                b: x[k],
                j: x[n + k],
            })
            .collect()
    };
    match settings.method {
        LocalMethod::ProjectedGradient => {
            settings
                .gradient
                .minimize(|x| error_and_gradient(case, &segments(x), &initial), x0, Bounds::unit())
        }
        LocalMethod::NelderMead => {
            let bounds = vec![Bounds::unit(); 2 * n];
            settings
                .simplex
                .minimize(|x| Ok(error_and_gradient(case, &segments(x), &initial)?.0), x0, &bounds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Protocol;

    fn protocol_error(protocol: &Protocol) -> Result<f64> {
        Ok(infidelity(&evolve(&StateVector::initial(protocol.case()), protocol)?))
    }

    fn quick(tau: f64, n: usize) -> OptimizationResult {
        optimize_pwc(tau, n, Case::Minus, 4, 7).unwrap()
    }

    #[test]
    fn short_time_optimum_is_constant_max_pulse() {
        let r = quick(0.2, 10);
        for s in r.best_protocol.segments() {
            assert!(s.b > 0.99 && s.j > 0.99, "{s:?}");
        }
    }

    #[test]
    fn best_error_is_reproducible() {
        let r = quick(0.5, 5);
        let again = protocol_error(&r.best_protocol).unwrap();
        assert!((again - r.best_error).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&r.best_error));
        assert_eq!(r.restarts_used, 6);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = quick(0.6, 5);
        let b = quick(0.6, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn nelder_mead_fallback_agrees() {
        let mut s = PwcSettings::new(0.5, 3, Case::Minus);
        s.restarts = 2;
        let pg = optimize_pwc_with(&s).unwrap();
        s.method = LocalMethod::NelderMead;
        let nm = optimize_pwc_with(&s).unwrap();
        assert!(
            (pg.best_error - nm.best_error).abs() < 1e-4,
            "{} vs {}",
            pg.best_error,
            nm.best_error
        );
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(optimize_pwc(0.0, 5, Case::Minus, 1, 0).is_err());
        assert!(optimize_pwc(0.5, 0, Case::Minus, 1, 0).is_err());
        assert!(optimize_pwc(0.5, 5, Case::Minus, 0, 0).is_err());
    }
}
