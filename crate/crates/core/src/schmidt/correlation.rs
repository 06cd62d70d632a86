use rand::Rng;
use serde::{Deserialize, Serialize};

use super::decomposition::{canonical_schmidt, SchmidtDecomposition};
use crate::error::{Error, Result};
use crate::hilbert::{
    conj_matrix, conj_vector, hs_distance, partial_scalar_product, projector_residual, tensor,
    BipartiteState, CMatrix, CVector, DensityOperator, C64,
};
use crate::json;
use crate::random::haar_unitary;
use crate::tolerance::Tolerances;

/// The antiunitary correlation operator, factorized as `U_a = V K` where `K`
/// conjugates coordinates in the computational basis of the first factor and
/// `V` is a partial isometry from `conj(supp rho_1)` onto `supp rho_2`.
///
/// Antilinearity is exact: `apply(a x + b y) = conj(a) apply(x) + conj(b) apply(y)`
/// holds by construction. `V^dagger V = conj(Q1)` and `V V^dagger = Q2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOperator {
    #[serde(rename = "V", with = "json::matrix")]
    v: CMatrix,
    /// Projector onto the support of `rho_1` (domain).
    #[serde(rename = "Q1", with = "json::matrix")]
    q1: CMatrix,
    /// Projector onto the support of `rho_2` (codomain).
    #[serde(rename = "Q2", with = "json::matrix")]
    q2: CMatrix,
}

impl CorrelationOperator {
    /// From paired orthonormal columns: `U_a |i>_1 = |i>_2`.
    pub fn from_bases(basis1: &CMatrix, basis2: &CMatrix) -> Result<Self> {
        if basis1.ncols() != basis2.ncols() {
            return Err(Error::DimensionMismatch {
                expected: basis1.ncols(),
                found: basis2.ncols(),
            });
        }
        let v = basis2 * basis1.transpose();
        Ok(Self {
            q1: basis1 * basis1.adjoint(),
            q2: basis2 * basis2.adjoint(),
            v,
        })
    }

    /// From a partial isometry `V` (rows: second factor, columns: first factor).
    pub fn from_isometry(v: CMatrix, tol: &Tolerances) -> Result<Self> {
        let q1 = conj_matrix(&(v.adjoint() * &v));
        let q2 = &v * v.adjoint();
        let residual = projector_residual(&q1).max(projector_residual(&q2));
        if residual >= tol.tol_op {
            return Err(Error::NotProjector { residual });
        }
        Ok(Self { v, q1, q2 })
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.v
    }

    pub fn domain_projector(&self) -> &CMatrix {
        &self.q1
    }

    pub fn codomain_projector(&self) -> &CMatrix {
        &self.q2
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.v.ncols(), self.v.nrows())
    }

    /// `U_a x = V conj(x)`
    pub fn apply(&self, x: &CVector) -> CVector {
        &self.v * conj_vector(x)
    }

    /// `U_a^{-1} y = conj(V^dagger y)` on the codomain.
    pub fn apply_inverse(&self, y: &CVector) -> CVector {
        conj_vector(&(self.v.adjoint() * y))
    }

    /// `U_a M U_a^{-1} = V conj(M) V^dagger`, an operator on the second factor
    /// supported on `supp rho_2`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        &self.v * conj_matrix(m) * self.v.adjoint()
    }

    /// `U_a^{-1} N U_a = V^T conj(N) conj(V)`, an operator on the first factor.
    pub fn conjugate_inverse(&self, n: &CMatrix) -> CMatrix {
        self.v.transpose() * conj_matrix(n) * conj_matrix(&self.v)
    }
}

/// The correlation operator of `psi`, read off its canonical Schmidt bases.
pub fn correlation_operator(psi: &BipartiteState, tol: &Tolerances) -> Result<CorrelationOperator> {
    let s = canonical_schmidt(psi, tol)?;
    CorrelationOperator::from_bases(&s.basis1, &s.basis2)
}

/// `U_a |phi> = sum_i conj(<i|phi>) |i>_2`, evaluated term by term.
pub fn correlation_image_by_expansion(s: &SchmidtDecomposition, phi: &CVector) -> CVector {
    (0..s.rank()).fold(CVector::zeros(s.basis2.nrows()), |acc, i| {
        acc + s.vector2(i) * s.vector1(i).dotc(phi).conj()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCertificate {
    pub trials: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Rebuilds the correlation operator from rotated eigen-sub-bases and reports
/// the largest Hilbert-Schmidt deviation from the canonical one.
///
/// Each trial applies an independent Haar unitary inside every degenerate
/// block of the first Schmidt basis, recomputes each partner vector from the
/// state itself as `<i'|_1 psi / c_i`, and reassembles `V'`.
pub fn uniqueness_certificate<R: Rng + ?Sized>(
    psi: &BipartiteState,
    trials: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<UniquenessCertificate> {
    if trials == 0 {
        return Err(Error::Precondition("uniqueness certificate needs at least one trial".into()));
    }
    let s = canonical_schmidt(psi, tol)?;
    let reference = CorrelationOperator::from_bases(&s.basis1, &s.basis2)?;
    let clusters = s.clusters(tol);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let mut rotated = s.basis1.clone();
        for r in &clusters {
            let w = haar_unitary(r.len(), rng);
            let block = s.basis1.columns(r.start, r.len()) * w;
            rotated.columns_mut(r.start, r.len()).copy_from(&block);
        }
        let mut partners = CMatrix::zeros(s.basis2.nrows(), s.rank());
        for i in 0..s.rank() {
            let partner = partial_scalar_product(&rotated.column(i).into_owned(), psi)?
                / C64::new(s.coefficients[i], 0.0);
            partners.set_column(i, &partner);
        }
        let rebuilt = CorrelationOperator::from_bases(&rotated, &partners)?;
        max_deviation = max_deviation.max(hs_distance(reference.isometry(), rebuilt.isometry())?);
    }
    Ok(UniquenessCertificate { trials, max_deviation, passed: max_deviation < tol.tol_unique })
}

/// `sum_i r_i^{1/2} |i>_1 (U_a |i>_1)_2` over an eigenbasis of `rho1`.
pub fn strong_schmidt_reconstruct(
    rho1: &DensityOperator,
    ua: &CorrelationOperator,
    tol: &Tolerances,
) -> Result<BipartiteState> {
    let (d1, d2) = ua.dims();
    if rho1.dim() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, found: rho1.dim() });
    }
    let spec = rho1.spectral(tol);
    let residual = hs_distance(&spec.support_projector(), ua.domain_projector())?;
    if residual >= tol.tol_recon {
        return Err(Error::SupportMismatch { residual });
    }
    let mut amps = CVector::zeros(d1 * d2);
    for i in 0..spec.rank {
        let e = spec.eigenvectors.column(i).into_owned();
        let weight = spec.eigenvalues[i].max(0.0).sqrt();
        amps += tensor(&e, &ua.apply(&e)) * C64::new(weight, 0.0);
    }
    BipartiteState::new(d1, d2, amps, tol)
}

/// A state with Schmidt spectrum `weights` (squared coefficients) and
/// Haar-random bases on both sides, assembled via
/// [`strong_schmidt_reconstruct`].
pub fn random_schmidt_state<R: Rng + ?Sized>(
    d1: usize,
    d2: usize,
    weights: &[f64],
    rng: &mut R,
) -> Result<BipartiteState> {
    let rank = weights.len();
    if d1 == 0 || d2 == 0 {
        return Err(Error::InfeasibleSpec("factor dimensions must be positive".into()));
    }
    if rank == 0 || rank > d1.min(d2) {
        return Err(Error::InfeasibleSpec(format!(
            "rank {rank} does not fit a {d1}x{d2} product space"
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InfeasibleSpec("spectrum entries must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() >= 1e-9 {
        return Err(Error::InfeasibleSpec(format!("spectrum sums to {total}")));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let u1 = haar_unitary(d1, rng);
    let u2 = haar_unitary(d2, rng);
    let basis1 = u1.columns(0, rank).into_owned();
    let basis2 = u2.columns(0, rank).into_owned();
    let tol = Tolerances::default();
    let mut full = vec![0.0; d1];
    full[..rank].copy_from_slice(&sorted);
    let rho1 = DensityOperator::from_spectrum(&full, &u1, &tol)?;
    let ua = CorrelationOperator::from_bases(&basis1, &basis2)?;
    let psi = strong_schmidt_reconstruct(&rho1, &ua, &tol)?;
    Ok(psi)
}
