use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{hs_distance, hs_inner, require_square, require_unitary, BipartiteState, CMatrix, C64};
use crate::json;
use crate::tolerance::Tolerances;

/// Two unitaries on opposite factors that act equally on one state:
/// `(U1 (x) 1)|psi> = (1 (x) U2)|psi>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinPair {
    #[serde(rename = "U1", with = "json::matrix")]
    pub u1: CMatrix,
    #[serde(rename = "U2", with = "json::matrix")]
    pub u2: CMatrix,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinCheck {
    pub is_twin: bool,
    pub residual: f64,
    /// Fitted `lambda` with `U1 psi = e^{i lambda} U2 psi`; zero unless a
    /// phase was allowed.
    pub phase: f64,
}

fn check_dims(u1: &CMatrix, u2: &CMatrix, psi: &BipartiteState) -> Result<()> {
    require_square(u1, psi.d1())?;
    require_square(u2, psi.d2())
}

/// `(U1 A, A U2^T)`: both sides of the twin equation in coefficient-matrix form.
fn both_sides(u1: &CMatrix, u2: &CMatrix, psi: &BipartiteState) -> (CMatrix, CMatrix) {
    let a = psi.coefficient_matrix();
    (u1 * &a, &a * u2.transpose())
}

/// Tests the twin relation. With `allow_phase`, the residual is minimized over
/// a global phase on `U2` and the optimal phase is reported.
pub fn is_twin_pair(
    u1: &CMatrix,
    u2: &CMatrix,
    psi: &BipartiteState,
    allow_phase: bool,
    tol: &Tolerances,
) -> Result<TwinCheck> {
    check_dims(u1, u2, psi)?;
    let unitary = require_unitary(u1, tol.tol_op).and(require_unitary(u2, tol.tol_op)).is_ok();
    let (left, right) = both_sides(u1, u2, psi);
    let phase = if allow_phase {
        let overlap = hs_inner(&right, &left)?;
        if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 }
    } else {
        0.0
    };
    let residual = hs_distance(&left, &(right * C64::from_polar(1.0, phase)))?;
    Ok(TwinCheck { is_twin: unitary && residual < tol.tol_twin, residual, phase })
}

impl TwinPair {
    /// Validates unitarity and the twin relation against `psi`.
    pub fn certify(u1: CMatrix, u2: CMatrix, psi: &BipartiteState, tol: &Tolerances) -> Result<Self> {
        check_dims(&u1, &u2, psi)?;
        require_unitary(&u1, tol.tol_op)?;
        require_unitary(&u2, tol.tol_op)?;
        let (left, right) = both_sides(&u1, &u2, psi);
        let residual = hs_distance(&left, &right)?;
        if residual >= tol.tol_twin {
            return Err(Error::CertificationFailed { residual, tolerance: tol.tol_twin });
        }
        Ok(Self { u1, u2, residual })
    }

    pub fn identity(d1: usize, d2: usize) -> Self {
        Self { u1: CMatrix::identity(d1, d1), u2: CMatrix::identity(d2, d2), residual: 0.0 }
    }

    /// `||U2^{-1} U1 psi - psi||`: how well `U2^{-1}` undoes `U1`.
    pub fn undo_residual(&self, psi: &BipartiteState) -> f64 {
        let a = psi.coefficient_matrix();
        let back = &self.u1 * &a * self.u2.adjoint().transpose();
        (back - a).norm()
    }
}

/// The group product `p * q = (P1 Q1, Q2 P2)`: apply `q` first, then `p`.
/// The order is reversed on the second factor.
pub fn compose(p: &TwinPair, q: &TwinPair, psi: &BipartiteState, tol: &Tolerances) -> Result<TwinPair> {
    TwinPair::certify(&p.u1 * &q.u1, &q.u2 * &p.u2, psi, tol)
}

pub fn inverse(p: &TwinPair, psi: &BipartiteState, tol: &Tolerances) -> Result<TwinPair> {
    TwinPair::certify(p.u1.adjoint(), p.u2.adjoint(), psi, tol)
}
