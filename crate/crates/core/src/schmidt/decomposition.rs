use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    cluster_ranges, conj_vector, hermitian_eigen, orthonormality_residual, partial_scalar_product, tensor, BipartiteState,
    CMatrix, CVector, C64,
};
use crate::json;
use crate::tolerance::Tolerances;

/// `|psi> = sum_i c_i |i>_1 |i>_2` with `c_i > 0` descending and both
/// families orthonormal.
///
/// Phase convention: the phases of the expansion coefficients live in
/// `basis2`, and each `|i>_1` has its first entry of largest modulus real
/// positive. Within a degenerate cluster of coefficients, columns are ordered
/// lexicographically by `basis1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    #[serde(with = "json::matrix")]
    pub basis1: CMatrix,
    #[serde(with = "json::matrix")]
    pub basis2: CMatrix,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Squared coefficients: the common positive eigenvalues of both reduced
    /// density operators.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    pub fn vector1(&self, i: usize) -> CVector {
        self.basis1.column(i).into_owned()
    }

    pub fn vector2(&self, i: usize) -> CVector {
        self.basis2.column(i).into_owned()
    }

    /// `sum_i c_i |i>_1 (x) |i>_2`
    pub fn reconstruct(&self) -> CVector {
        let (d1, d2) = (self.basis1.nrows(), self.basis2.nrows());
        (0..self.rank()).fold(CVector::zeros(d1 * d2), |acc, i| {
            acc + tensor(&self.vector1(i), &self.vector2(i)) * C64::new(self.coefficients[i], 0.0)
        })
    }

    /// Index ranges of degenerate coefficient clusters (clustered on `c_i^2`).
    pub fn clusters(&self, tol: &Tolerances) -> Vec<std::ops::Range<usize>> {
        let t = Tolerances { eps_rank: 0.0, ..*tol };
        cluster_ranges(&self.eigenvalues(), &t)
    }
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Rotates `v1` so its first entry of (near-)largest modulus is real positive.
fn fix_phase(v1: &mut CVector, slack: f64) {
    let max = v1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(pivot) = v1.iter().find(|z| z.norm() >= max - slack) {
        let phase = pivot / pivot.norm();
        *v1 /= phase;
    }
}

/// Canonical Schmidt decomposition of `psi`.
///
/// The first basis is an eigenbasis of `A A^dagger` (the coefficient matrix
/// times its adjoint, i.e. `rho_1`); each partner is `A^T conj(|i>_1)`
/// normalized, its norm being the coefficient. Terms with eigenvalue below
/// `eps_rank` are dropped.
pub fn canonical_schmidt(psi: &BipartiteState, tol: &Tolerances) -> Result<SchmidtDecomposition> {
    let norm = psi.amplitudes().norm();
    if (norm - 1.0).abs() >= tol.tol_norm {
        return Err(Error::NotNormalized { norm });
    }
    let a = psi.coefficient_matrix();
    let (values, vectors) = hermitian_eigen(&(&a * a.adjoint()));
    let mut terms: Vec<(f64, CVector, CVector)> = values
        .iter()
        .enumerate()
        .take_while(|(_, &r)| r >= tol.eps_rank)
        .map(|(i, _)| {
            let mut b1 = vectors.column(i).into_owned();
            fix_phase(&mut b1, tol.eps_cluster);
            let partner = a.transpose() * conj_vector(&b1);
            let c = partner.norm();
            (c, b1, partner / C64::new(c, 0.0))
        })
        .collect();

    let squares: Vec<f64> = terms.iter().map(|t| t.0 * t.0).collect();
    let t = Tolerances { eps_rank: 0.0, ..*tol };
    for r in cluster_ranges(&squares, &t) {
        terms[r].sort_by(|x, y| lexicographic(&x.1, &y.1));
    }

    let (d1, d2) = psi.dims();
    let rank = terms.len();
    let mut basis1 = CMatrix::zeros(d1, rank);
    let mut basis2 = CMatrix::zeros(d2, rank);
    let mut coefficients = Vec::with_capacity(rank);
    for (i, (c, b1, b2)) in terms.into_iter().enumerate() {
        coefficients.push(c);
        basis1.set_column(i, &b1);
        basis2.set_column(i, &b2);
    }
    Ok(SchmidtDecomposition { coefficients, basis1, basis2 })
}

/// Generalized expansion coefficients `<m|_1 |psi>` for a complete orthonormal
/// basis of the first factor (columns of `basis1`).
pub fn expand_in_basis(
    psi: &BipartiteState,
    basis1: &CMatrix,
    tol: &Tolerances,
) -> Result<Vec<CVector>> {
    if basis1.nrows() != psi.d1() || basis1.ncols() != psi.d1() {
        return Err(Error::ShapeMismatch(format!(
            "basis is {}x{}, expected {d}x{d}",
            basis1.nrows(),
            basis1.ncols(),
            d = psi.d1()
        )));
    }
    let residual = orthonormality_residual(basis1);
    if residual >= tol.tol_op {
        return Err(Error::NonOrthonormalBasis { residual });
    }
    basis1
        .column_iter()
        .map(|m| partial_scalar_product(&m.into_owned(), psi))
        .collect()
}

/// Largest `|<a|b>|` between distinct expansion coefficients. Zero means the
/// expansion is a Schmidt decomposition.
pub fn coefficient_overlap(coefficients: &[CVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in coefficients.iter().enumerate() {
        for b in &coefficients[i + 1..] {
            worst = worst.max(a.dotc(b).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_vector, real_matrix, real_vector, reduced_density, Side};
    use crate::random::{random_unit_vector, rng_from_seed};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn bell_expansions() {
        let bell = BipartiteState::bell();
        let comp = expand_in_basis(&bell, &CMatrix::identity(2, 2), &tol()).unwrap();
        assert!((&comp[0] - real_vector(&[FRAC_1_SQRT_2, 0.0])).norm() < 1e-15);
        assert!((&comp[1] - real_vector(&[0.0, FRAC_1_SQRT_2])).norm() < 1e-15);

        let h = FRAC_1_SQRT_2;
        let hadamard = real_matrix(2, 2, &[h, h, h, -h]);
        let coeffs = expand_in_basis(&bell, &hadamard, &tol()).unwrap();
        // <+|_1 Bell = |+>/sqrt2, <-|_1 Bell = |->/sqrt2
        assert!((&coeffs[0] - real_vector(&[h, h]) * C64::new(h, 0.0)).norm() < 1e-15);
        assert!((&coeffs[1] - real_vector(&[h, -h]) * C64::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_state_has_single_coefficient() {
        let mut rng = rng_from_seed(7);
        let a = random_unit_vector(3, &mut rng);
        let b = random_unit_vector(2, &mut rng);
        let psi = BipartiteState::product(&a, &b).unwrap();
        let basis = crate::hilbert::complete_orthonormal_basis(&CMatrix::from_columns(std::slice::from_ref(&a)));
        let coeffs = expand_in_basis(&psi, &basis, &tol()).unwrap();
        assert!((&coeffs[0] - &b).norm() < 1e-12);
        assert!(coeffs[1].norm() < 1e-12 && coeffs[2].norm() < 1e-12);
    }

    #[test]
    fn expansion_rejects_bad_bases() {
        let bell = BipartiteState::bell();
        let skew = real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            expand_in_basis(&bell, &skew, &tol()),
            Err(Error::NonOrthonormalBasis { .. })
        ));
        assert!(expand_in_basis(&bell, &CMatrix::identity(3, 3), &tol()).is_err());
    }

    #[test]
    fn canonical_examples() {
        let bell = canonical_schmidt(&BipartiteState::bell(), &tol()).unwrap();
        assert_eq!(bell.rank(), 2);
        for c in &bell.coefficients {
            assert!((c - FRAC_1_SQRT_2).abs() < 1e-14);
        }

        let s = canonical_schmidt(&BipartiteState::two_thirds(), &tol()).unwrap();
        assert!((s.coefficients[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((s.coefficients[1] - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        for i in 0..2 {
            assert!((s.vector1(i) - basis_vector(2, i)).norm() < 1e-14);
            assert!((s.vector2(i) - basis_vector(2, i)).norm() < 1e-14);
        }
    }

    #[test]
    fn global_phase_is_absorbed_in_the_second_basis() {
        let mut rng = rng_from_seed(12);
        let psi = BipartiteState::random(3, 4, &mut rng);
        let a = canonical_schmidt(&psi, &tol()).unwrap();
        let theta = 0.731;
        let b = canonical_schmidt(&psi.scaled_by_phase(theta), &tol()).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((&a.basis1 - &b.basis1).norm() < 1e-12);
        let phase = C64::from_polar(1.0, theta);
        assert!((&a.basis2 * phase - &b.basis2).norm() < 1e-12);
    }

    #[test]
    fn canonical_invariants_on_random_states() {
        let mut rng = rng_from_seed(13);
        for (d1, d2) in [(1, 1), (2, 5), (4, 3), (5, 5)] {
            let psi = BipartiteState::random(d1, d2, &mut rng);
            let s = canonical_schmidt(&psi, &tol()).unwrap();
            assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.coefficients.iter().all(|&c| c > tol().eps_rank));
            assert!((s.coefficients.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(orthonormality_residual(&s.basis1) < 1e-12);
            assert!(orthonormality_residual(&s.basis2) < 1e-12);
            assert!((s.reconstruct() - psi.amplitudes()).norm() < 1e-12);
            let rho1 = reduced_density(&psi, Side::One);
            for (r, c) in rho1.eigenvalues().iter().zip(&s.coefficients) {
                assert!((r - c * c).abs() < 1e-12);
            }
            for i in 0..s.rank() {
                let v = s.vector1(i);
                let pivot = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let first = v.iter().find(|z| z.norm() >= pivot - 1e-8).unwrap();
                assert!(first.im.abs() < 1e-14 && first.re > 0.0);
            }
        }
    }
}
