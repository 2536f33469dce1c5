// SPDX-License-Identifier: Apache-2.0

//! Fixed-size 4×4 linear algebra.
//!
//! The two-qubit problem never leaves dimension four, so everything here
//! works on stack arrays. The only nontrivial routine is the cyclic Jacobi
//! eigensolver for real symmetric matrices, which backs every matrix
//! exponential in the crate: `exp(-i t H) = V diag(e^{-i t λ}) Vᵀ`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVec4 = [C64; 4];
pub type RMat4 = [[f64; 4]; 4];
pub type CMat4 = [[C64; 4]; 4];

pub const DIM: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Off-diagonal threshold, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

pub fn identity() -> CMat4 {
    let mut m = [[ZERO; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn to_complex(a: &RMat4) -> CMat4 {
    let mut m = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = C64::new(a[i][j], 0.0);
        }
    }
    m
}

pub fn matmul(a: &CMat4, b: &CMat4) -> CMat4 {
    let mut m = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            for j in 0..DIM {
                m[i][j] += aik * b[k][j];
            }
        }
    }
    m
}

pub fn adjoint(a: &CMat4) -> CMat4 {
    let mut m = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = a[j][i].conj();
        }
    }
    m
}

pub fn matvec(a: &CMat4, v: &CVec4) -> CVec4 {
    let mut out = [ZERO; DIM];
    for i in 0..DIM {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2] + a[i][3] * v[3];
    }
    out
}

pub fn real_matvec(a: &RMat4, v: &CVec4) -> CVec4 {
    let mut out = [ZERO; DIM];
    for i in 0..DIM {
        out[i] = v[0] * a[i][0] + v[1] * a[i][1] + v[2] * a[i][2] + v[3] * a[i][3];
    }
    out
}

/// ⟨a|b⟩, antilinear in the first argument.
pub fn inner(a: &CVec4, b: &CVec4) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &CVec4) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// max |a_ij - b_ij|
pub fn max_abs_diff(a: &CMat4, b: &CMat4) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..DIM {
        for j in 0..DIM {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

pub fn real_matmul(a: &RMat4, b: &RMat4) -> RMat4 {
    let mut m = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for k in 0..DIM {
            for j in 0..DIM {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn transpose(a: &RMat4) -> RMat4 {
    let mut m = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = a[j][i];
        }
    }
    m
}

/// Eigendecomposition `A = V diag(values) Vᵀ` of a real symmetric matrix.
/// Eigenvalues ascend; `vectors[:, k]` is the k-th eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen {
    pub values: [f64; DIM],
    pub vectors: RMat4,
}

impl SymmetricEigen {
    /// Cyclic Jacobi with the classical rotation of Rutishauser.
    /// Only the upper triangle of `a` is read.
    pub fn new(a: &RMat4) -> Result<Self> {
        let mut m = *a;
        for i in 0..DIM {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        let mut v = [[0.0; DIM]; DIM];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }

        let frob = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        let threshold = JACOBI_TOL * frob;

        let mut converged = false;
        for _ in 0..=JACOBI_MAX_SWEEPS {
            let off = off_diagonal_norm(&m);
            if off <= threshold {
                converged = true;
                break;
            }
            for p in 0..DIM - 1 {
                for q in p + 1..DIM {
                    let apq = m[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                    let c = 1.0 / t.hypot(1.0);
                    let s = t * c;
                    rotate(&mut m, &mut v, p, q, c, s);
                }
            }
        }
        if !converged {
            return Err(Error::EigenNoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }

        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
        let mut values = [0.0; DIM];
        let mut vectors = [[0.0; DIM]; DIM];
        for (k, &src) in order.iter().enumerate() {
            values[k] = m[src][src];
            for row in 0..DIM {
                vectors[row][k] = v[row][src];
            }
        }
        Ok(Self { values, vectors })
    }

    /// `exp(-i t A)` as a dense complex matrix.
    pub fn exp_i(&self, t: f64) -> CMat4 {
        let phases = self.phases(t);
        let v = &self.vectors;
        let mut u = [[ZERO; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = ZERO;
                for k in 0..DIM {
                    acc += phases[k] * (v[i][k] * v[j][k]);
                }
                u[i][j] = acc;
            }
        }
        u
    }

    /// `exp(-i t A) ψ` without forming the matrix.
    pub fn apply_exp_i(&self, t: f64, psi: &CVec4) -> CVec4 {
        let phases = self.phases(t);
        let v = &self.vectors;
        let mut coeff = [ZERO; DIM];
        for k in 0..DIM {
            let proj: C64 = (0..DIM).map(|i| psi[i] * v[i][k]).sum();
            coeff[k] = proj * phases[k];
        }
        let mut out = [ZERO; DIM];
        for i in 0..DIM {
            out[i] = (0..DIM).map(|k| coeff[k] * v[i][k]).sum();
        }
        out
    }

    fn phases(&self, t: f64) -> [C64; DIM] {
        self.values.map(|lambda| C64::from_polar(1.0, -lambda * t))
    }
}

fn off_diagonal_norm(m: &RMat4) -> f64 {
    let mut s = 0.0;
    for p in 0..DIM {
        for q in p + 1..DIM {
            s += 2.0 * m[p][q] * m[p][q];
        }
    }
    s.sqrt()
}

fn rotate(m: &mut RMat4, v: &mut RMat4, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..DIM {
        let mkp = m[k][p];
        let mkq = m[k][q];
        m[k][p] = c * mkp - s * mkq;
        m[k][q] = s * mkp + c * mkq;
    }
    for k in 0..DIM {
        let mpk = m[p][k];
        let mqk = m[q][k];
        m[p][k] = c * mpk - s * mqk;
        m[q][k] = s * mpk + c * mqk;
    }
    for row in v.iter_mut() {
        let vkp = row[p];
        let vkq = row[q];
        row[p] = c * vkp - s * vkq;
        row[q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymmetricEigen) -> RMat4 {
        let mut d = [[0.0; DIM]; DIM];
        for k in 0..DIM {
            d[k][k] = e.values[k];
        }
        real_matmul(&real_matmul(&e.vectors, &d), &transpose(&e.vectors))
    }

    #[test]
    fn jacobi_reconstructs_and_sorts() {
        let a = [
            [4.0, 1.0, -2.0, 0.5],
            [1.0, 2.0, 0.0, 1.0],
            [-2.0, 0.0, 3.0, -2.0],
            [0.5, 1.0, -2.0, -1.0],
        ];
        let e = SymmetricEigen::new(&a).unwrap();
        let r = reconstruct(&e);
        for i in 0..DIM {
            for j in 0..DIM {
                assert!((r[i][j] - a[i][j]).abs() < 1e-13);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let vtv = real_matmul(&transpose(&e.vectors), &e.vectors);
        for i in 0..DIM {
            for j in 0..DIM {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[i][j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jacobi_zero_and_diagonal() {
        let e = SymmetricEigen::new(&[[0.0; 4]; 4]).unwrap();
        assert_eq!(e.values, [0.0; 4]);
        let d = [
            [3.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        let e = SymmetricEigen::new(&d).unwrap();
        assert_eq!(e.values, [-1.0, 0.0, 2.0, 3.0]);
    }

    #[test]
    fn apply_matches_dense_exponential() {
        let a = [
            [0.0, 1.0, -1.0, 0.0],
            [1.0, 0.0, 2.0, -1.0],
            [-1.0, 2.0, 0.0, 1.0],
            [0.0, -1.0, 1.0, 0.0],
        ];
        let e = SymmetricEigen::new(&a).unwrap();
        let psi = [
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.5),
            C64::new(0.0, -0.4),
            C64::new(0.6, 0.2),
        ];
        let dense = matvec(&e.exp_i(0.37), &psi);
        let direct = e.apply_exp_i(0.37, &psi);
        for i in 0..DIM {
            assert!((dense[i] - direct[i]).norm() < 1e-14);
        }
    }
}
