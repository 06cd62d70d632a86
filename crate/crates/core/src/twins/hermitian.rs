use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    commutator_norm, hermitian_eigen, hs_distance, kron, partial_trace, require_hermitian,
    require_square, require_unitary, CMatrix, DensityOperator, Side, C64,
};
use crate::json;
use crate::schmidt::SubsystemPicture;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianTwin {
    #[serde(rename = "H1", with = "json::matrix")]
    pub h1: CMatrix,
    #[serde(rename = "H2", with = "json::matrix")]
    pub h2: CMatrix,
    /// `||[H1, rho_1]||_HS` and `||[H2, rho_2]||_HS`.
    pub commutators: [f64; 2],
    /// Hash of the state the pair was built against.
    pub state_hash: String,
}

fn commuting_with_rho(
    m: &CMatrix,
    picture: &SubsystemPicture,
    side: Side,
    tol: &Tolerances,
) -> Result<f64> {
    require_square(m, picture.dim(side))?;
    let commutator = commutator_norm(m, picture.rho(side).matrix());
    if commutator >= tol.tol_commute {
        return Err(Error::CommutationViolation { commutator });
    }
    Ok(commutator)
}

/// `H2 = U_a H1 U_a^{-1}` on the second support and zero on its complement.
pub fn twin_hermitian_of(
    h1: &CMatrix,
    picture: &SubsystemPicture,
    tol: &Tolerances,
) -> Result<HermitianTwin> {
    require_square(h1, picture.dim(Side::One))?;
    require_hermitian(h1, tol.tol_op)?;
    let c1 = commuting_with_rho(h1, picture, Side::One, tol)?;
    let h2 = picture.correlation.conjugate(h1);
    require_hermitian(&h2, tol.tol_op)?;
    let c2 = commutator_norm(&h2, picture.rho(Side::Two).matrix());
    Ok(HermitianTwin {
        h1: h1.clone(),
        h2,
        commutators: [c1, c2],
        state_hash: picture.state().hash(),
    })
}

/// `exp(iH)` on the support of `rho_side`, identity on the null space.
pub fn hermitian_to_unitary(
    h: &CMatrix,
    picture: &SubsystemPicture,
    side: Side,
    tol: &Tolerances,
) -> Result<CMatrix> {
    require_hermitian(h, tol.tol_op)?;
    commuting_with_rho(h, picture, side, tol)?;
    let q = picture.support_projector(side);
    let on_support = &q * h * &q;
    let hermitized = (&on_support + on_support.adjoint()) * C64::new(0.5, 0.0);
    let (values, vectors) = hermitian_eigen(&hermitized);
    let phases = CMatrix::from_diagonal(&crate::hilbert::CVector::from_iterator(
        values.len(),
        values.iter().map(|&t| C64::from_polar(1.0, t)),
    ));
    Ok(&vectors * phases * vectors.adjoint())
}

/// A Hermitian `H` with `exp(iH) = U` on the support of `rho_side`, zero on
/// the null space, eigenvalues in `[0, 2 pi)`.
pub fn unitary_to_hermitian(
    u: &CMatrix,
    picture: &SubsystemPicture,
    side: Side,
    tol: &Tolerances,
) -> Result<CMatrix> {
    require_unitary(u, tol.tol_op)?;
    commuting_with_rho(u, picture, side, tol)?;
    let q = picture.support_projector(side);
    let restricted = &q * u * &q + picture.null_projector(side);
    let (z, t) = restricted.schur().unpack();
    let two_pi = 2.0 * std::f64::consts::PI;
    let angles = crate::hilbert::CVector::from_iterator(
        t.nrows(),
        (0..t.nrows()).map(|i| {
            let mut a = t[(i, i)].arg().rem_euclid(two_pi);
            if two_pi - a < 1e-12 {
                a = 0.0;
            }
            C64::new(a, 0.0)
        }),
    );
    let h = &z * CMatrix::from_diagonal(&angles) * z.adjoint();
    Ok((&h + h.adjoint()) * C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedTwinCheck {
    pub is_twin: bool,
    /// `||(H1 (x) 1) rho - (1 (x) H2) rho||_HS`
    pub residual: f64,
    /// `||[H1, rho_1]||_HS` and `||[H2, rho_2]||_HS` for the reduced states.
    pub commutators: [f64; 2],
}

/// Twin test for Hermitian operators against a density on the product space.
/// A pair passes when the twin residual is below `tol_twin`; both reduced
/// commutators must then vanish within `tol_commute` as well.
pub fn is_mixed_twin(
    h1: &CMatrix,
    h2: &CMatrix,
    rho12: &DensityOperator,
    tol: &Tolerances,
) -> Result<MixedTwinCheck> {
    let (d1, d2) = (h1.nrows(), h2.nrows());
    require_square(h1, d1)?;
    require_square(h2, d2)?;
    if rho12.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, found: rho12.dim() });
    }
    let rho = rho12.matrix();
    let left = kron(h1, &CMatrix::identity(d2, d2)) * rho;
    let right = kron(&CMatrix::identity(d1, d1), h2) * rho;
    let residual = hs_distance(&left, &right)?;
    let rho1 = partial_trace(rho, d1, d2, Side::One)?;
    let rho2 = partial_trace(rho, d1, d2, Side::Two)?;
    let commutators = [commutator_norm(h1, &rho1), commutator_norm(h2, &rho2)];
    let is_twin = residual < tol.tol_twin && commutators.iter().all(|&c| c < tol.tol_commute);
    Ok(MixedTwinCheck { is_twin, residual, commutators })
}
