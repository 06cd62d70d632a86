use std::ops::Range;

use serde::Serialize;

use super::{hermitian_residual, projector_onto_columns, CMatrix, DensityOperator, C64};
use crate::error::{Error, Result};
use crate::json;
use crate::tolerance::Tolerances;

/// One positive-eigenvalue eigen-subspace.
#[derive(Debug, Clone, Serialize)]
pub struct EigenBlock {
    /// Mean of the clustered eigenvalues.
    pub value: f64,
    pub multiplicity: usize,
    /// Orthonormal columns spanning the eigen-subspace.
    #[serde(with = "json::matrix")]
    pub basis: CMatrix,
    #[serde(with = "json::matrix")]
    pub projector: CMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectral {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    #[serde(with = "json::matrix")]
    pub eigenvectors: CMatrix,
    pub blocks: Vec<EigenBlock>,
    /// Projector onto the eigenvalues below `eps_rank`.
    #[serde(with = "json::matrix")]
    pub null_projector: CMatrix,
    pub rank: usize,
}

impl Spectral {
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Projector onto the support (sum of all block projectors).
    pub fn support_projector(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::identity(d, d) - &self.null_projector
    }

    /// Orthonormal columns spanning the support, block by block.
    pub fn support_basis(&self) -> CMatrix {
        self.eigenvectors.columns(0, self.rank).into_owned()
    }

    /// `sum_j r_j Q^j`
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.dim();
        self.blocks
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, b| acc + &b.projector * C64::new(b.value, 0.0))
    }

    /// Index of the block whose eigen-subspace contains `v` (within `tol`).
    pub fn block_containing(&self, v: &super::CVector, tol: f64) -> Option<usize> {
        let norm = v.norm();
        if norm == 0.0 {
            return None;
        }
        self.blocks
            .iter()
            .position(|b| (v - &b.projector * v).norm() < tol * norm.max(1.0))
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Groups descending `values` into index ranges of positive eigen-subspaces.
///
/// Values below `eps_rank` are excluded; two consecutive values share a range
/// when they differ by less than `eps_cluster` (which chains transitively).
pub fn cluster_ranges(values: &[f64], tol: &Tolerances) -> Vec<Range<usize>> {
    let rank = values.iter().take_while(|&&r| r >= tol.eps_rank).count();
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..=rank {
        if i == rank || (values[i - 1] - values[i]).abs() >= tol.eps_cluster {
            ranges.push(start..i);
            start = i;
        }
    }
    ranges
}

pub(crate) fn build_spectral(values: &[f64], vectors: &CMatrix, tol: &Tolerances) -> Spectral {
    let d = vectors.nrows();
    let ranges = cluster_ranges(values, tol);
    let rank = ranges.last().map_or(0, |r| r.end);
    let blocks = ranges
        .into_iter()
        .map(|r| {
            let basis = vectors.columns(r.start, r.len()).into_owned();
            let value = values[r.clone()].iter().sum::<f64>() / r.len() as f64;
            EigenBlock {
                value,
                multiplicity: r.len(),
                projector: projector_onto_columns(&basis),
                basis,
            }
        })
        .collect();
    let null_basis = vectors.columns(rank, d - rank).into_owned();
    Spectral {
        eigenvalues: values.to_vec(),
        eigenvectors: vectors.clone(),
        blocks,
        null_projector: projector_onto_columns(&null_basis),
        rank,
    }
}

/// Spectral decomposition of a Hermitian matrix with clustered eigen-projectors.
pub fn spectral(matrix: &CMatrix, tol: &Tolerances) -> Result<Spectral> {
    if !matrix.is_square() {
        return Err(Error::ShapeMismatch("spectral decomposition needs a square matrix".into()));
    }
    let residual = hermitian_residual(matrix);
    if residual >= tol.tol_op {
        return Err(Error::NotHermitian { residual });
    }
    let rho = DensityOperator::from_positive(matrix.clone());
    Ok(rho.spectral(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{diagonal, hs_distance, hs_norm, real_matrix};
    use crate::random::{haar_unitary, rng_from_seed};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn full_degeneracy_gives_one_block() {
        let s = spectral(&diagonal(&[0.5, 0.5]), &tol()).unwrap();
        assert_eq!(s.blocks.len(), 1);
        assert_eq!(s.blocks[0].multiplicity, 2);
        assert!(hs_distance(&s.blocks[0].projector, &CMatrix::identity(2, 2)).unwrap() < 1e-14);
        assert!(hs_norm(&s.null_projector) < 1e-14);
    }

    #[test]
    fn nondegenerate_gives_singleton_blocks() {
        let s = spectral(&diagonal(&[1.0 / 3.0, 2.0 / 3.0]), &tol()).unwrap();
        assert_eq!(s.blocks.iter().map(|b| b.multiplicity).collect::<Vec<_>>(), vec![1, 1]);
        assert!((s.blocks[0].value - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_recovery() {
        let mut rng = rng_from_seed(17);
        let u = haar_unitary(5, &mut rng);
        let rho = DensityOperator::from_spectrum(&[0.5, 0.3, 0.2, 0.0, 0.0], &u, &tol()).unwrap();
        let s = rho.spectral(&tol());
        assert_eq!(s.rank, 3);
        let null_rank = crate::hilbert::trace(&s.null_projector).re;
        assert!((null_rank - 2.0).abs() < 1e-12);
        assert!(hs_distance(&s.reconstruct(), rho.matrix()).unwrap() < 1e-12);
        let total = s.blocks.iter().fold(s.null_projector.clone(), |acc, b| acc + &b.projector);
        assert!(hs_distance(&total, &CMatrix::identity(5, 5)).unwrap() < 1e-12);
        for (i, a) in s.blocks.iter().enumerate() {
            for b in &s.blocks[i + 1..] {
                assert!(hs_norm(&(&a.projector * &b.projector)) < 1e-12);
            }
        }
    }

    #[test]
    fn clustering_chains_and_respects_rank() {
        let t = tol();
        let v = [0.4, 0.4 - 5e-9, 0.4 - 1e-8, 0.2 - 1e-11, 5e-11, 0.0];
        let r = cluster_ranges(&v, &t);
        assert_eq!(r, vec![0..3, 3..4]);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = real_matrix(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        assert!(matches!(spectral(&m, &tol()), Err(Error::NotHermitian { .. })));
    }
}
