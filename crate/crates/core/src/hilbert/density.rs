use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spectral::{build_spectral, hermitian_eigen};
use super::{hermitian_residual, projector_onto, trace, CMatrix, CVector, Spectral, C64};
use crate::error::{Error, Result};
use crate::json;
use crate::random::ginibre;
use crate::tolerance::Tolerances;

/// Hermitian, positive semidefinite, unit trace. The eigen-decomposition is
/// computed once at construction (eigenvalues descending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRecord", into = "DensityRecord")]
pub struct DensityOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityRecord(#[serde(with = "json::matrix")] CMatrix);

impl TryFrom<DensityRecord> for DensityOperator {
    type Error = Error;

    fn try_from(r: DensityRecord) -> Result<Self> {
        DensityOperator::new(r.0, &Tolerances::default())
    }
}

impl From<DensityOperator> for DensityRecord {
    fn from(d: DensityOperator) -> Self {
        DensityRecord(d.matrix)
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}, expected a nonempty square matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = hermitian_residual(&matrix);
        if residual >= tol.tol_op {
            return Err(Error::NotHermitian { residual });
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() >= tol.tol_norm || tr.im.abs() >= tol.tol_norm {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let out = Self::from_positive(matrix);
        if let Some(&min) = out.eigenvalues.last() {
            if min < -tol.tol_psd {
                return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(out)
    }

    /// Skips validation; for matrices that are density operators by construction.
    pub(crate) fn from_positive(matrix: CMatrix) -> Self {
        let matrix = hermitize(&matrix);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix);
        Self { matrix, eigenvalues, eigenvectors }
    }

    pub fn pure(v: &CVector, tol: &Tolerances) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() >= tol.tol_norm {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self::from_positive(projector_onto(v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_positive(CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0))
    }

    /// `sum_i w_i |v_i><v_i|` for orthonormal columns `vectors`.
    pub fn from_spectrum(weights: &[f64], vectors: &CMatrix, tol: &Tolerances) -> Result<Self> {
        if weights.len() != vectors.ncols() {
            return Err(Error::DimensionMismatch { expected: vectors.ncols(), found: weights.len() });
        }
        let d = vectors.nrows();
        let mut m = CMatrix::zeros(d, d);
        for (w, v) in weights.iter().zip(vectors.column_iter()) {
            let v = v.into_owned();
            m += projector_onto(&v) * C64::new(*w, 0.0);
        }
        Self::new(m, tol)
    }

    /// Random density of the given rank: `G G^dagger / tr` with `G` a `dim x rank`
    /// complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Self {
        let g = ginibre(dim, rank.max(1), rng);
        let m = &g * g.adjoint();
        let tr = trace(&m).re;
        Self::from_positive(m / C64::new(tr, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// All eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching [`eigenvalues`](Self::eigenvalues).
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn spectral(&self, tol: &Tolerances) -> Spectral {
        build_spectral(&self.eigenvalues, &self.eigenvectors, tol)
    }

    /// `<phi|rho|phi>`
    pub fn expectation(&self, phi: &CVector) -> f64 {
        phi.dotc(&(&self.matrix * phi)).re
    }

    pub fn rank(&self, tol: &Tolerances) -> usize {
        self.eigenvalues.iter().filter(|&&r| r >= tol.eps_rank).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{diagonal, real_matrix};

    #[test]
    fn validation_errors() {
        let t = Tolerances::default();
        assert!(matches!(
            DensityOperator::new(real_matrix(2, 2, &[0.5, 0.1, 0.0, 0.5]), &t),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            DensityOperator::new(diagonal(&[0.5, 0.6]), &t),
            Err(Error::InvalidDensity(_))
        ));
        assert!(matches!(
            DensityOperator::new(diagonal(&[1.5, -0.5]), &t),
            Err(Error::InvalidDensity(_))
        ));
        assert!(DensityOperator::new(CMatrix::zeros(2, 3), &t).is_err());
        let ok = DensityOperator::new(real_matrix(2, 2, &[0.7, 0.2, 0.2, 0.3]), &t).unwrap();
        assert_eq!(ok.dim(), 2);
        assert!(ok.eigenvalues()[0] > ok.eigenvalues()[1]);
    }

    #[test]
    fn random_density_is_valid() {
        let mut rng = crate::random::rng_from_seed(9);
        let t = Tolerances::default();
        for (d, r) in [(1, 1), (4, 2), (6, 6)] {
            let rho = DensityOperator::random(d, r, &mut rng);
            let again = DensityOperator::new(rho.matrix().clone(), &t).unwrap();
            assert_eq!(again.rank(&t), r);
        }
    }

    #[test]
    fn json_roundtrip_validates() {
        let rho = DensityOperator::maximally_mixed(3);
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        assert!(serde_json::from_str::<DensityOperator>("[[[2.0,0.0]]]").is_err());
    }
}
