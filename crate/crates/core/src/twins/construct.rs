use rand::Rng;

use super::pair::TwinPair;
use crate::error::{Error, Result};
use crate::hilbert::{
    commutator_norm, outer, require_square, require_unitary, CMatrix, CVector, Side,
    C64,
};
use crate::random::haar_unitary;
use crate::schmidt::SubsystemPicture;
use crate::tolerance::Tolerances;

/// `U_a U1^{-1} U_a^{-1}` on the second support, identity on its complement.
pub(crate) fn partner_of(u1: &CMatrix, picture: &SubsystemPicture) -> CMatrix {
    let ua = &picture.correlation;
    ua.conjugate(&u1.adjoint()) + picture.null_projector(Side::Two)
}

/// The twin of a unitary that commutes with `rho_1`. Fails with
/// [`Error::NoTwinExists`] otherwise: commuting is necessary.
pub fn twin_of(u1: &CMatrix, picture: &SubsystemPicture, tol: &Tolerances) -> Result<TwinPair> {
    require_square(u1, picture.dim(Side::One))?;
    require_unitary(u1, tol.tol_op)?;
    let commutator = commutator_norm(u1, picture.rho(Side::One).matrix());
    if commutator >= tol.tol_commute {
        return Err(Error::NoTwinExists { commutator });
    }
    TwinPair::certify(u1.clone(), partner_of(u1, picture), picture.state(), tol)
}

/// Independent Haar unitaries inside every eigen-subspace of `rho_1`,
/// identity on the null space, paired with their twins.
pub fn sample_twin<R: Rng + ?Sized>(
    picture: &SubsystemPicture,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<TwinPair> {
    let mut u1 = picture.null_projector(Side::One).clone();
    for block in &picture.blocks {
        let w = haar_unitary(block.multiplicity, rng);
        u1 += &block.basis1 * w * block.basis1.adjoint();
    }
    TwinPair::certify(u1.clone(), partner_of(&u1, picture), picture.state(), tol)
}

/// A unitary acting only on `span{phi, phi_prime}` that maps `phi` to
/// `phi_prime` (Householder reflection times a phase). Both inputs must be
/// unit vectors.
pub fn two_vector_rotation(phi: &CVector, phi_prime: &CVector) -> CMatrix {
    let d = phi.len();
    let overlap = phi.dotc(phi_prime);
    let alpha = if overlap.norm() > 1e-15 { overlap.arg() } else { 0.0 };
    let phase = C64::from_polar(1.0, alpha);
    let target = phi_prime * phase.conj();

    let mut span = outer(phi, phi);
    let rest = phi_prime - phi * overlap;
    if rest.norm() > 1e-12 {
        let e2 = &rest / C64::new(rest.norm(), 0.0);
        span += outer(&e2, &e2);
    }
    let u = phi - &target;
    let householder = if u.norm() > 1e-14 {
        CMatrix::identity(d, d) - outer(&u, &u) * C64::new(2.0 / u.norm_squared(), 0.0)
    } else {
        CMatrix::identity(d, d)
    };
    CMatrix::identity(d, d) - &span + householder * &span * phase
}

/// A twin pair whose first member maps `phi` to `phi_prime` inside one
/// eigen-subspace of `rho_1`. Vectors in different eigen-subspaces (or
/// outside the support) give [`Error::NotCoResident`].
pub fn swap_twin(
    phi: &CVector,
    phi_prime: &CVector,
    picture: &SubsystemPicture,
    tol: &Tolerances,
) -> Result<TwinPair> {
    let d1 = picture.dim(Side::One);
    for v in [phi, phi_prime] {
        if v.len() != d1 {
            return Err(Error::DimensionMismatch { expected: d1, found: v.len() });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() >= tol.tol_norm {
            return Err(Error::NotNormalized { norm });
        }
    }
    let j = picture.block_containing(phi, tol.tol_op).ok_or(Error::NotCoResident)?;
    if picture.block_containing(phi_prime, tol.tol_op) != Some(j) {
        return Err(Error::NotCoResident);
    }
    // Project into the block first so the rotation cannot leak out of it.
    let q = picture.block_projector(j, Side::One);
    let (a, b) = (q * phi, q * phi_prime);
    let a = &a / C64::new(a.norm(), 0.0);
    let b = &b / C64::new(b.norm(), 0.0);
    let u1 = two_vector_rotation(&a, &b);
    TwinPair::certify(u1.clone(), partner_of(&u1, picture), picture.state(), tol)
}

/// `U2 = U_a U1^{-1} U_a^{-1}` read directly on the support, for checks.
pub fn first_theorem_residual(pair: &TwinPair, picture: &SubsystemPicture) -> f64 {
    let q2 = picture.support_projector(Side::Two);
    let expected = picture.correlation.conjugate(&pair.u1.adjoint());
    (&pair.u2 * &q2 - expected).norm()
}
