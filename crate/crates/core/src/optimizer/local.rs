// SPDX-License-Identifier: Apache-2.0

//! Box-constrained local minimizers.
//!
//! [`ProjectedGradient`] is the workhorse for piecewise-constant protocols:
//! gradient steps are clamped back into the box, with a Barzilai–Borwein
//! trial step and step-halving backtracking. [`NelderMead`] is derivative
//! free; vertices are clamped into the box after every move.

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn unit() -> Self {
        Self { lower: 0.0, upper: 1.0 }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedGradient {
    /// Stop once a successful step improves the objective by less than this.
    pub improvement_tol: f64,
    /// Stop once `‖x - P(x - ∇f)‖∞` drops below this.
    pub gradient_tol: f64,
    pub max_evaluations: usize,
}

impl Default for ProjectedGradient {
    fn default() -> Self {
        Self {
            improvement_tol: 1e-12,
            gradient_tol: 1e-10,
            max_evaluations: 100_000,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_RESTARTS: usize = 8;
const MIN_STEP: f64 = 1e-20;

impl ProjectedGradient {
    pub fn minimize<F>(&self, mut objective: F, x0: &[f64], bounds: Bounds) -> Result<LocalOutcome>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let project = |v: &mut [f64]| v.iter_mut().for_each(|x| *x = bounds.clamp(*x));
        let mut x = x0.to_vec();
        project(&mut x);
        let (mut f, mut g) = objective(&x)?;
        let mut evaluations = 1;
        let mut step = 1.0;
        let mut converged = false;

        while evaluations < self.max_evaluations {
            let pg = x
                .iter()
                .zip(&g)
                .map(|(xi, gi)| (xi - bounds.clamp(xi - gi)).abs())
                .fold(0.0, f64::max);
            if pg < self.gradient_tol {
                converged = true;
                break;
            }

            let mut accepted = None;
            while evaluations < self.max_evaluations {
                let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                project(&mut trial);
                let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
                if decrease <= 0.0 {
                    break;
                }
                let (ft, gt) = objective(&trial)?;
                evaluations += 1;
                if ft <= f - ARMIJO * decrease {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break;
                }
            }

            let Some((xn, fnew, gn)) = accepted else {
                // No descent is possible at floating-point resolution.
                converged = true;
                break;
            };

            let improvement = f - fnew;
            // Barzilai–Borwein step for the next trial.
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..x.len() {
                let s = xn[i] - x[i];
                let y = gn[i] - g[i];
                ss += s * s;
                sy += s * y;
            }
            step = if sy > 0.0 {
                (ss / sy).clamp(1e-10, 1e10)
            } else {
                (2.0 * step).min(1e10)
            };

            x = xn;
            f = fnew;
            g = gn;
            if improvement < self.improvement_tol {
                converged = true;
                break;
            }
        }

        Ok(LocalOutcome {
            x,
            f,
            evaluations,
            converged,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Simplex size (∞-norm about the best vertex) at which to stop.
    pub x_tol: f64,
    /// Objective spread across the simplex at which to stop.
    pub f_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            x_tol: 1e-8,
            f_tol: 1e-15,
            initial_step: 0.05,
            max_evaluations: 100_000,
        }
    }
}

impl NelderMead {
    /// Runs the simplex, rebuilding it around the best vertex until a
    /// restart no longer improves the objective. Clamped simplices can
    /// collapse onto a face of the box away from the optimum; a fresh
    /// simplex escapes that.
    pub fn minimize<F>(&self, mut objective: F, x0: &[f64], bounds: &[Bounds]) -> Result<LocalOutcome>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut best = self.run(&mut objective, x0, bounds)?;
        for _ in 0..MAX_RESTARTS {
            if best.evaluations >= self.max_evaluations {
                break;
            }
            let next = self.run(&mut objective, &best.x, bounds)?;
            let evaluations = best.evaluations + next.evaluations;
            let improved = next.f < best.f - self.f_tol;
            if next.f <= best.f {
                best = LocalOutcome { evaluations, ..next };
            } else {
                best.evaluations = evaluations;
            }
            if !improved {
                break;
            }
        }
        Ok(best)
    }

    fn run<F>(&self, objective: &mut F, x0: &[f64], bounds: &[Bounds]) -> Result<LocalOutcome>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let n = x0.len();
        let clamp = |v: &mut Vec<f64>| {
            for (x, b) in v.iter_mut().zip(bounds) {
                *x = b.clamp(*x);
            }
        };

        let mut start = x0.to_vec();
        clamp(&mut start);
        let mut simplex = Vec::with_capacity(n + 1);
        simplex.push(start.clone());
        for i in 0..n {
            let mut v = start.clone();
            // Step inward when the start sits on the upper bound.
            v[i] = if v[i] + self.initial_step <= bounds[i].upper {
                v[i] + self.initial_step
            } else {
                v[i] - self.initial_step
            };
            clamp(&mut v);
            simplex.push(v);
        }
        let mut values = Vec::with_capacity(n + 1);
        for v in &simplex {
            values.push(objective(v)?);
        }
        let mut evaluations = n + 1;
        let mut converged = false;

        while evaluations < self.max_evaluations {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let spread = values[n] - values[0];
            if size <= self.x_tol && spread <= self.f_tol.max(self.f_tol * values[0].abs()) {
                converged = true;
                break;
            }
            if size <= self.x_tol * 1e-3 {
                // Collapsed onto a face of the box; nothing left to move.
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
                .collect();
            let along = |coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + coef * (simplex[n][i] - centroid[i]))
                    .collect();
                clamp(&mut p);
                p
            };

            let reflected = along(-1.0);
            let fr = objective(&reflected)?;
            evaluations += 1;
            if fr < values[0] {
                let expanded = along(-2.0);
                let fe = objective(&expanded)?;
                evaluations += 1;
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[n] {
                let c = along(-0.5);
                let fc = objective(&c)?;
                (c, fc)
            } else {
                let c = along(0.5);
                let fc = objective(&c)?;
                (c, fc)
            };
            evaluations += 1;
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
                continue;
            }
            for k in 1..=n {
                let mut v: Vec<f64> = (0..n)
                    .map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]))
                    .collect();
                clamp(&mut v);
                values[k] = objective(&v)?;
                simplex[k] = v;
            }
            evaluations += n;
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Ok(LocalOutcome {
            x: simplex[best].clone(),
            f: values[best],
            evaluations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> (f64, Vec<f64>) {
        // Minimum at (0.3, 1.4), outside the unit box in the second coordinate.
        let f = (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 1.4).powi(2) + 0.5 * (x[0] - 0.3) * (x[1] - 1.4);
        let g = vec![
            2.0 * (x[0] - 0.3) + 0.5 * (x[1] - 1.4),
            4.0 * (x[1] - 1.4) + 0.5 * (x[0] - 0.3),
        ];
        (f, g)
    }

    #[test]
    fn projected_gradient_finds_boundary_optimum() {
        let out = ProjectedGradient::default()
            .minimize(|x| Ok(quadratic(x)), &[0.9, 0.1], Bounds::unit())
            .unwrap();
        assert!(out.converged);
        // With x₁ pinned at 1, the optimum in x₀ solves 2(x₀ - 0.3) + 0.5(1 - 1.4) = 0.
        assert!((out.x[1] - 1.0).abs() < 1e-12);
        assert!((out.x[0] - 0.4).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn nelder_mead_agrees() {
        let out = NelderMead::default()
            .minimize(|x| Ok(quadratic(x).0), &[0.9, 0.1], &[Bounds::unit(); 2])
            .unwrap();
        assert!((out.x[1] - 1.0).abs() < 1e-7);
        assert!((out.x[0] - 0.4).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn nelder_mead_interior_minimum() {
        let rosen = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let b = [Bounds {
            lower: -2.0,
            upper: 2.0,
        }; 2];
        let out = NelderMead {
            x_tol: 1e-10,
            f_tol: 1e-20,
            ..Default::default()
        }
        .minimize(rosen, &[-1.2, 1.0], &b)
        .unwrap();
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
    }
}
