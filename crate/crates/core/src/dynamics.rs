// SPDX-License-Identifier: Apache-2.0

//! Two-qubit gmon model: Hamiltonian, exact propagation, cost and spectrum.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = B₁ σˣ₁ + B₂ σˣ₂ + J (σˣ₁σˣ₂ + σʸ₁σʸ₂),   B₂ = B, B₁ = ±B
//! ```
//!
//! written in the basis (↑↑, ↑↓, ↓↑, ↓↓). It is real, so every propagator is
//! obtained from one real-symmetric eigendecomposition.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{self, CMat4, CVec4, RMat4, SymmetricEigen, C64, DIM};
use crate::protocol::Protocol;

/// Tolerance for the normalization precondition of [`error`].
pub const NORM_TOL: f64 = 1e-9;

/// Threshold for classifying a state into a symmetry sector.
pub const SECTOR_TOL: f64 = 1e-10;

/// Relation between the two local fields, `B₁ = sign · B₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// `B₁ = B₂`; the permutation symmetry is exact.
    #[serde(rename = "+1")]
    Plus,
    /// `B₁ = -B₂`; the singlet is reachable.
    #[serde(rename = "-1")]
    Minus,
}

impl Case {
    pub fn sign(self) -> f64 {
        match self {
            Case::Plus => 1.0,
            Case::Minus => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Case::Plus),
            -1 => Some(Case::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Plus => "+1",
            Case::Minus => "-1",
        })
    }
}

/// Instantaneous couplings `(B, J)` and the admissible bound `Λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub b: f64,
    pub j: f64,
    pub case: Case,
    pub lambda: f64,
}

impl ControlParams {
    pub fn new(b: f64, j: f64, case: Case) -> Result<Self> {
        Self::with_bound(b, j, case, 1.0)
    }

    pub fn with_bound(b: f64, j: f64, case: Case, lambda: f64) -> Result<Self> {
        let p = Self { b, j, case, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("lambda", self.lambda)?;
        if self.lambda <= 0.0 {
            return Err(Error::invalid("lambda", "bound must be positive"));
        }
        check_in_box("b", self.b, self.lambda)?;
        check_in_box("j", self.j, self.lambda)
    }
}

pub(crate) fn check_in_box(name: &'static str, value: f64, lambda: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if !(0.0..=lambda).contains(&value) {
        return Err(Error::invalid(name, format!("{value} outside [0, {lambda}]")));
    }
    Ok(())
}

/// Real symmetric 4×4 Hamiltonian with zero diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix(RMat4);

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &RMat4 {
        &self.0
    }

    pub fn eigen(&self) -> Result<SymmetricEigen> {
        SymmetricEigen::new(&self.0)
    }

    pub fn eigenvalues(&self) -> Result<[f64; DIM]> {
        Ok(self.eigen()?.values)
    }
}

/// Builds the matrix for arbitrary real couplings. Callers are responsible
/// for the box constraint.
pub(crate) fn hamiltonian_raw(b: f64, j: f64, case: Case) -> RMat4 {
    let b2 = b;
    let b1 = case.sign() * b;
    [
        [0.0, b2, b1, 0.0],
        [b2, 0.0, 2.0 * j, b1],
        [b1, 2.0 * j, 0.0, b2],
        [0.0, b1, b2, 0.0],
    ]
}

pub fn build_hamiltonian(p: &ControlParams) -> Result<HamiltonianMatrix> {
    p.validate()?;
    Ok(HamiltonianMatrix(hamiltonian_raw(p.b, p.j, p.case)))
}

/// `∂H/∂B` for the given case.
pub fn field_derivative(case: Case) -> RMat4 {
    hamiltonian_raw(1.0, 0.0, case)
}

/// `∂H/∂J`.
pub fn coupling_derivative() -> RMat4 {
    hamiltonian_raw(0.0, 1.0, Case::Minus)
}

/// The permutation `|↑↓⟩ ↔ |↓↑⟩`.
pub fn permutation_q() -> RMat4 {
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// `max |[Q, H]_ij|`.
pub fn q_commutator_norm(h: &HamiltonianMatrix) -> f64 {
    let q = permutation_q();
    let qh = linalg::real_matmul(&q, &h.0);
    let hq = linalg::real_matmul(&h.0, &q);
    let mut d = 0.0_f64;
    for i in 0..DIM {
        for j in 0..DIM {
            d = d.max((qh[i][j] - hq[i][j]).abs());
        }
    }
    d
}

/// A 4×4 unitary `exp(-i t H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryPropagator(CMat4);

impl UnitaryPropagator {
    pub fn identity() -> Self {
        Self(linalg::identity())
    }

    pub fn matrix(&self) -> &CMat4 {
        &self.0
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector {
            c: linalg::matvec(&self.0, &state.c),
        }
    }

    /// `self · other`: apply `other` first.
    pub fn then_after(&self, other: &UnitaryPropagator) -> Self {
        Self(linalg::matmul(&self.0, &other.0))
    }

    pub fn adjoint(&self) -> Self {
        Self(linalg::adjoint(&self.0))
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = linalg::matmul(&linalg::adjoint(&self.0), &self.0);
        linalg::max_abs_diff(&p, &linalg::identity())
    }
}

pub fn propagator(h: &HamiltonianMatrix, t: f64) -> Result<UnitaryPropagator> {
    ensure_finite("t", t)?;
    Ok(UnitaryPropagator(h.eigen()?.exp_i(t)))
}

/// Eigendecompositions of the four corner Hamiltonians `H(B, J)` with
/// `B, J ∈ {0, 1}`, which are all a bang-bang protocol ever uses.
#[derive(Debug, Clone)]
pub struct CornerSpectra {
    case: Case,
    spectra: [SymmetricEigen; 4],
}

impl CornerSpectra {
    pub fn new(case: Case) -> Result<Self> {
        let mk = |b: f64, j: f64| SymmetricEigen::new(&hamiltonian_raw(b, j, case));
        Ok(Self {
            case,
            spectra: [mk(0.0, 0.0)?, mk(0.0, 1.0)?, mk(1.0, 0.0)?, mk(1.0, 1.0)?],
        })
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn get(&self, b_on: bool, j_on: bool) -> &SymmetricEigen {
        &self.spectra[2 * usize::from(b_on) + usize::from(j_on)]
    }

    /// `H₁ = H(B = 0, J = 1)`.
    pub fn coupling_only(&self) -> &SymmetricEigen {
        self.get(false, true)
    }

    /// `H₂ = H(B = 1, J = 1)`.
    pub fn both_on(&self) -> &SymmetricEigen {
        self.get(true, true)
    }
}

/// Amplitudes `(c₁, c₂, c₃, c₄)` over (↑↑, ↑↓, ↓↑, ↓↓).
///
/// Serializes as eight reals: the four real parts followed by the four
/// imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 8]", into = "[f64; 8]")]
pub struct StateVector {
    pub c: CVec4,
}

impl From<[f64; 8]> for StateVector {
    fn from(x: [f64; 8]) -> Self {
        Self::from_parts([x[0], x[1], x[2], x[3]], [x[4], x[5], x[6], x[7]])
    }
}

impl From<StateVector> for [f64; 8] {
    fn from(s: StateVector) -> Self {
        let r = s.real_parts();
        let i = s.imag_parts();
        [r[0], r[1], r[2], r[3], i[0], i[1], i[2], i[3]]
    }
}

impl StateVector {
    pub fn new(c: CVec4) -> Self {
        Self { c }
    }

    pub fn from_parts(re: [f64; DIM], im: [f64; DIM]) -> Self {
        Self {
            c: std::array::from_fn(|k| C64::new(re[k], im[k])),
        }
    }

    pub fn real_parts(&self) -> [f64; DIM] {
        self.c.map(|z| z.re)
    }

    pub fn imag_parts(&self) -> [f64; DIM] {
        self.c.map(|z| z.im)
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.c)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::inner(&self.c, &other.c)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// The target `(|↑↓⟩ - |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_parts([0.0, a, -a, 0.0], [0.0; 4])
    }

    /// Ground state at `J = 0` for `B₁ = B₂`.
    pub fn psi_plus_initial() -> Self {
        Self::from_parts([0.5, -0.5, -0.5, 0.5], [0.0; 4])
    }

    /// Ground state at `J = 0` for `B₁ = -B₂`.
    pub fn psi_minus_initial() -> Self {
        Self::from_parts([0.5, -0.5, 0.5, -0.5], [0.0; 4])
    }

    pub fn initial(case: Case) -> Self {
        match case {
            Case::Plus => Self::psi_plus_initial(),
            Case::Minus => Self::psi_minus_initial(),
        }
    }
}

/// Applies the ordered segment propagators of `protocol` to `state`.
pub fn evolve(state: &StateVector, protocol: &Protocol) -> Result<StateVector> {
    let mut psi = state.c;
    for seg in protocol.segments() {
        let h = hamiltonian_raw(seg.b, seg.j, protocol.case());
        psi = SymmetricEigen::new(&h)?.apply_exp_i(seg.dt, &psi);
    }
    Ok(StateVector { c: psi })
}

/// `1 - |⟨singlet|ψ⟩|² = 1 - ½|c₂ - c₃|²`, without the normalization check.
pub fn infidelity(state: &StateVector) -> f64 {
    1.0 - 0.5 * (state.c[1] - state.c[2]).norm_sqr()
}

pub fn error(state: &StateVector) -> Result<f64> {
    if !state.is_normalized() {
        return Err(Error::NotNormalized {
            norm_sqr: state.norm_sqr(),
        });
    }
    Ok(infidelity(state).clamp(0.0, 1.0))
}

/// Eigenvalue of the permutation `Q`, when the state has one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetrySector {
    Plus,
    Minus,
    Mixed,
}

pub fn q_sector(state: &StateVector) -> SymmetrySector {
    let c = &state.c;
    let swapped = [c[0], c[2], c[1], c[3]];
    let dev = |sign: f64| (0..DIM).map(|k| (swapped[k] - c[k] * sign).norm()).fold(0.0, f64::max);
    if dev(1.0) <= SECTOR_TOL {
        SymmetrySector::Plus
    } else if dev(-1.0) <= SECTOR_TOL {
        SymmetrySector::Minus
    } else {
        SymmetrySector::Mixed
    }
}

/// One row of a gap scan along `J = 1 - B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub b: f64,
    pub gap: f64,
}

/// `E₁ - E₀` of `H(B, J)`.
pub fn gap_at(case: Case, b: f64, j: f64) -> Result<f64> {
    let h = build_hamiltonian(&ControlParams::new(b, j, case)?)?;
    let e = h.eigenvalues()?;
    Ok(e[1] - e[0])
}

/// Gap along `J = 1 - B` on the interior grid `B_k = (k + 1)/(n + 1)`.
pub fn gap_scan(case: Case, n_points: usize) -> Result<Vec<GapPoint>> {
    if n_points < 2 {
        return Err(Error::invalid("n_points", "need at least 2 grid points"));
    }
    (0..n_points)
        .map(|k| {
            let b = (k + 1) as f64 / (n_points + 1) as f64;
            Ok(GapPoint {
                b,
                gap: gap_at(case, b, 1.0 - b)?,
            })
        })
        .collect()
}

/// Gap below which a refined minimum counts as a level crossing.
pub const CROSSING_GAP_TOL: f64 = 1e-6;

/// Locates a level crossing on a scan produced by [`gap_scan`].
///
/// The crossing must show up as an interior grid minimum; it is then refined
/// by bisecting on the sign of the gap's slope between the neighbouring grid
/// points. Returns `None` when the refined gap stays open.
pub fn locate_crossing(case: Case, scan: &[GapPoint]) -> Result<Option<f64>> {
    let Some((imin, _)) = scan.iter().enumerate().min_by(|a, b| a.1.gap.total_cmp(&b.1.gap)) else {
        return Ok(None);
    };
    if imin == 0 || imin + 1 >= scan.len() {
        return Ok(None);
    }
    let gap = |b: f64| gap_at(case, b, 1.0 - b);
    let (mut lo, mut hi) = (scan[imin - 1].b, scan[imin + 1].b);
    let h = 1e-10;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if gap(mid + h)? < gap(mid - h)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    Ok((gap(b)? < CROSSING_GAP_TOL).then_some(b))
}
