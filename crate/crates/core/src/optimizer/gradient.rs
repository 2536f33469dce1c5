// SPDX-License-Identifier: Apache-2.0

//! Exact gradient of the infidelity with respect to segment controls.
//!
//! One forward sweep stores the state entering each segment, one backward
//! sweep carries `⟨target| U_N ⋯ U_{k+1}` to segment `k`. The derivative of
//! each segment propagator is taken in the eigenbasis of its Hamiltonian
//! (Daleckii–Krein), so the result is exact up to rounding and costs O(N).

use crate::dynamics::{coupling_derivative, field_derivative, hamiltonian_raw, Case, StateVector};
use crate::error::Result;
use crate::linalg::{CVec4, RMat4, SymmetricEigen, C64, DIM};
use crate::protocol::{Protocol, Segment};

/// `∂ℰ/∂b̃ₖ` for all segments followed by `∂ℰ/∂j̃ₖ`.
pub fn adjoint_gradient(protocol: &Protocol, initial: &StateVector) -> Result<Vec<f64>> {
    Ok(error_and_gradient(protocol.case(), protocol.segments(), initial)?.1)
}

/// Infidelity and its gradient for an arbitrary segment list. Segments may
/// have zero duration; their gradient entries are then zero.
pub fn error_and_gradient(case: Case, segments: &[Segment], initial: &StateVector) -> Result<(f64, Vec<f64>)> {
    let n = segments.len();
    let d_field = field_derivative(case);
    let d_coupling = coupling_derivative();

    let mut spectra = Vec::with_capacity(n);
    let mut entering = Vec::with_capacity(n);
    let mut psi = initial.c;
    for seg in segments {
        let eig = SymmetricEigen::new(&hamiltonian_raw(seg.b, seg.j, case))?;
        entering.push(psi);
        psi = eig.apply_exp_i(seg.dt, &psi);
        spectra.push(eig);
    }

    let target = StateVector::singlet().c;
    let overlap: C64 = (0..DIM).map(|i| target[i].conj() * psi[i]).sum();
    let error = 1.0 - overlap.norm_sqr();

    let mut grad = vec![0.0; 2 * n];
    let mut chi = target;
    for k in (0..n).rev() {
        let eig = &spectra[k];
        let dt = segments[k].dt;
        let d_overlap_b = propagator_derivative_element(eig, dt, &d_field, &chi, &entering[k]);
        let d_overlap_j = propagator_derivative_element(eig, dt, &d_coupling, &chi, &entering[k]);
        grad[k] = -2.0 * (overlap.conj() * d_overlap_b).re;
        grad[n + k] = -2.0 * (overlap.conj() * d_overlap_j).re;
        chi = eig.apply_exp_i(-dt, &chi);
    }
    Ok((error, grad))
}

/// `⟨χ| ∂_θ exp(-i dt H) |ψ⟩` where `∂_θ H = dh`.
fn propagator_derivative_element(eig: &SymmetricEigen, dt: f64, dh: &RMat4, chi: &CVec4, psi: &CVec4) -> C64 {
    let v = &eig.vectors;
    let project = |x: &CVec4| -> CVec4 { std::array::from_fn(|m| (0..DIM).map(|i| x[i] * v[i][m]).sum()) };
    let chi_e = project(chi);
    let psi_e = project(psi);

    let mut acc = C64::new(0.0, 0.0);
    for m in 0..DIM {
        for l in 0..DIM {
            let mut dh_ml = 0.0;
            for i in 0..DIM {
                for j in 0..DIM {
                    dh_ml += v[i][m] * dh[i][j] * v[j][l];
                }
            }
            if dh_ml == 0.0 {
                continue;
            }
            let f = divided_difference(eig.values[m], eig.values[l], dt);
            acc += chi_e[m].conj() * f * dh_ml * psi_e[l];
        }
    }
    acc
}

/// `(e^{-i dt a} - e^{-i dt b}) / (a - b)`, continuous at `a = b`.
fn divided_difference(a: f64, b: f64, dt: f64) -> C64 {
    let mean = 0.5 * (a + b);
    let x = 0.5 * dt * (a - b);
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::new(0.0, -dt) * C64::from_polar(1.0, -dt * mean) * sinc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, infidelity};
    use crate::protocol::make_pwc;

    /// Central differences on the raw segment list; steps may leave the box.
    fn finite_difference(case: Case, segments: &[Segment], initial: &StateVector, h: f64) -> Vec<f64> {
        let eval = |segs: &[Segment]| {
            let mut psi = initial.c;
            for s in segs {
                psi = SymmetricEigen::new(&hamiltonian_raw(s.b, s.j, case))
                    .unwrap()
                    .apply_exp_i(s.dt, &psi);
            }
            infidelity(&StateVector::new(psi))
        };
        let n = segments.len();
        let mut out = vec![0.0; 2 * n];
        for k in 0..n {
            for (slot, which) in [(k, 0), (n + k, 1)] {
                let mut plus = segments.to_vec();
                let mut minus = segments.to_vec();
                if which == 0 {
                    plus[k].b += h;
                    minus[k].b -= h;
                } else {
                    plus[k].j += h;
                    minus[k].j -= h;
                }
                out[slot] = (eval(&plus) - eval(&minus)) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn matches_finite_differences_on_constant_protocol() {
        let p = make_pwc(0.6, &[(0.5, 0.5); 4], Case::Minus).unwrap();
        let init = StateVector::psi_minus_initial();
        let g = adjoint_gradient(&p, &init).unwrap();
        let fd = finite_difference(Case::Minus, p.segments(), &init, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn error_agrees_with_evolution() {
        let p = make_pwc(0.9, &[(0.1, 0.9), (0.7, 0.3), (1.0, 1.0)], Case::Minus).unwrap();
        let init = StateVector::psi_minus_initial();
        let (e, _) = error_and_gradient(Case::Minus, p.segments(), &init).unwrap();
        let direct = infidelity(&evolve(&init, &p).unwrap());
        assert!((e - direct).abs() < 1e-14);
    }

    #[test]
    fn zero_duration_segments_have_zero_gradient() {
        let segs = vec![
            Segment {
                dt: 0.0,
                b: 0.3,
                j: 0.6
            };
            5
        ];
        let (e, g) = error_and_gradient(Case::Minus, &segs, &StateVector::psi_minus_initial()).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
        assert_eq!(g.len(), 10);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn degenerate_eigenvalues_are_handled() {
        // b = 0 gives a doubly degenerate zero eigenvalue.
        let segs = vec![
            Segment {
                dt: 0.3,
                b: 0.0,
                j: 1.0,
            },
            Segment {
                dt: 0.2,
                b: 0.0,
                j: 0.0,
            },
        ];
        let init = StateVector::psi_minus_initial();
        let (_, g) = error_and_gradient(Case::Minus, &segs, &init).unwrap();
        let fd = finite_difference(Case::Minus, &segs, &init, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }
}
