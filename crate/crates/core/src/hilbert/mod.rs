//! Dense complex linear algebra for finite-dimensional bipartite systems.
//!
//! Composite amplitudes use one global layout: the amplitude of `|k>|l>` in
//! a `d1 x d2` product space sits at index `k * d2 + l`, so the amplitude
//! vector reshapes row-major into the `d1 x d2` coefficient matrix.

mod density;
mod spectral;
mod state;

pub use density::DensityOperator;
pub use spectral::{cluster_ranges, hermitian_eigen, spectral, EigenBlock, Spectral};
pub use state::BipartiteState;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Which factor of a bipartite space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn diagonal(entries: &[f64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(entries[i], 0.0) } else { ZERO })
}

/// `|u><v|`
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn projector_onto(v: &CVector) -> CMatrix {
    outer(v, v)
}

/// Projector onto the span of orthonormal columns.
pub fn projector_onto_columns(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

pub fn conj_matrix(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn conj_vector(v: &CVector) -> CVector {
    v.map(|z| z.conj())
}

/// `<u|v>`, antilinear in the first slot.
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.dotc(v)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `result[k * dim(b) + l] = a[k] * b[l]`
pub fn tensor(a: &CVector, b: &CVector) -> CVector {
    let (da, db) = (a.len(), b.len());
    CVector::from_fn(da * db, |idx, _| a[idx / db] * b[idx % db])
}

/// Kronecker product of operators, consistent with [`tensor`].
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// The partial scalar product `<bra|_1 |psi>_12`, a vector in the second factor.
pub fn partial_scalar_product(bra: &CVector, psi: &BipartiteState) -> Result<CVector> {
    if bra.len() != psi.d1() {
        return Err(Error::DimensionMismatch { expected: psi.d1(), found: bra.len() });
    }
    let a = psi.coefficient_matrix();
    Ok((bra.adjoint() * a).transpose())
}

/// Partial trace of `|psi><psi|` over the factor opposite to `side`.
pub fn reduced_density(psi: &BipartiteState, side: Side) -> DensityOperator {
    let a = psi.coefficient_matrix();
    let m = match side {
        Side::One => &a * a.adjoint(),
        Side::Two => a.transpose() * conj_matrix(&a),
    };
    DensityOperator::from_positive(m)
}

/// Partial trace of an operator on `C^d1 (x) C^d2`, keeping `keep`.
pub fn partial_trace(op: &CMatrix, d1: usize, d2: usize, keep: Side) -> Result<CMatrix> {
    let n = d1 * d2;
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, expected {n}x{n}",
            op.nrows(),
            op.ncols()
        )));
    }
    Ok(match keep {
        Side::One => CMatrix::from_fn(d1, d1, |k, kp| {
            (0..d2).map(|l| op[(k * d2 + l, kp * d2 + l)]).sum()
        }),
        Side::Two => CMatrix::from_fn(d2, d2, |l, lp| {
            (0..d1).map(|k| op[(k * d2 + l, k * d2 + lp)]).sum()
        }),
    })
}

fn same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Hilbert-Schmidt scalar product `tr(A^dagger B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    same_shape(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hs_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    same_shape(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}

/// `||(A - B) psi||`, the quantity controlled by strong-operator convergence.
/// It never exceeds `hs_distance(A, B) * ||psi||`.
pub fn strong_residual(a: &CMatrix, b: &CMatrix, psi: &CVector) -> Result<f64> {
    same_shape(a, b)?;
    if psi.len() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: psi.len() });
    }
    Ok(((a - b) * psi).norm())
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    hs_norm(&(m - m.adjoint()))
}

pub fn unitary_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    hs_norm(&(u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols())))
}

pub fn projector_residual(p: &CMatrix) -> f64 {
    if !p.is_square() {
        return f64::INFINITY;
    }
    hs_norm(&(p * p - p)).max(hermitian_residual(p))
}

/// `||C^dagger C - 1||_HS` for a matrix of column vectors.
pub fn orthonormality_residual(columns: &CMatrix) -> f64 {
    let n = columns.ncols();
    hs_norm(&(columns.adjoint() * columns - CMatrix::identity(n, n)))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    hs_norm(&commutator(a, b))
}

pub fn require_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    let residual = unitary_residual(u);
    if residual < tol {
        Ok(())
    } else {
        Err(Error::NotUnitary { residual })
    }
}

pub fn require_hermitian(h: &CMatrix, tol: f64) -> Result<()> {
    let residual = hermitian_residual(h);
    if residual < tol {
        Ok(())
    } else {
        Err(Error::NotHermitian { residual })
    }
}

pub fn require_projector(p: &CMatrix, tol: f64) -> Result<()> {
    let residual = projector_residual(p);
    if residual < tol {
        Ok(())
    } else {
        Err(Error::NotProjector { residual })
    }
}

pub fn require_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Extends orthonormal columns to a full orthonormal basis of `C^d`.
///
/// The given columns come first; the remainder is produced by Gram-Schmidt
/// over the computational basis vectors in index order (two passes each),
/// skipping candidates already in the span.
pub fn complete_orthonormal_basis(columns: &CMatrix) -> CMatrix {
    let d = columns.nrows();
    let mut out: Vec<CVector> = columns.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..d {
        if out.len() == d {
            break;
        }
        let mut v = basis_vector(d, e);
        for _ in 0..2 {
            for b in &out {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let n = v.norm();
        if n > 1e-6 {
            out.push(v / C64::new(n, 0.0));
        }
    }
    columns_from(&out, d)
}

/// Stacks vectors as the columns of a `dim x n` matrix.
pub(crate) fn columns_from(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_vector, rng_from_seed};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &CVector, b: &CVector, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn tensor_basis_and_linearity() {
        let v = tensor(&basis_vector(2, 0), &basis_vector(2, 1));
        assert!(close(&v, &basis_vector(4, 1), 0.0 + f64::EPSILON));

        let plus = real_vector(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let v = tensor(&plus, &basis_vector(2, 0));
        assert!(close(&v, &real_vector(&[FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0]), 1e-15));
    }

    #[test]
    fn tensor_norm_is_multiplicative() {
        let mut rng = rng_from_seed(3);
        for (da, db) in [(1, 1), (2, 3), (5, 4)] {
            let a = random_vector(da, &mut rng) * C64::new(1.7, 0.0);
            let b = random_vector(db, &mut rng) * C64::new(0.3, 0.0);
            assert!((tensor(&a, &b).norm() - a.norm() * b.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn partial_scalar_product_examples() {
        let bell = BipartiteState::bell();
        let out = partial_scalar_product(&basis_vector(2, 0), &bell).unwrap();
        assert!(close(&out, &real_vector(&[FRAC_1_SQRT_2, 0.0]), 1e-15));

        let mut rng = rng_from_seed(5);
        let a = random_vector(3, &mut rng).normalize();
        let b = random_vector(4, &mut rng).normalize();
        let product = BipartiteState::product(&a, &b).unwrap();
        let out = partial_scalar_product(&a, &product).unwrap();
        assert!(close(&out, &b, 1e-14));

        assert!(matches!(
            partial_scalar_product(&basis_vector(3, 0), &bell),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn partial_scalar_product_matches_double_sum_in_random_bases() {
        let mut rng = rng_from_seed(11);
        let (d1, d2) = (3, 4);
        let psi = BipartiteState::random(d1, d2, &mut rng);
        let bra = random_vector(d1, &mut rng);
        // Arbitrary bases {|k>} and {|l>}: expand, contract with <m|k>, resum.
        let kb = haar_unitary(d1, &mut rng);
        let lb = haar_unitary(d2, &mut rng);
        let mut expected = CVector::zeros(d2);
        for l in 0..d2 {
            let l_vec = lb.column(l).into_owned();
            let mut coeff = ZERO;
            for k in 0..d1 {
                let k_vec = kb.column(k).into_owned();
                let kl = tensor(&k_vec, &l_vec);
                coeff += inner(&bra, &k_vec) * inner(&kl, psi.amplitudes());
            }
            expected += l_vec * coeff;
        }
        let got = partial_scalar_product(&bra, &psi).unwrap();
        assert!(close(&got, &expected, 1e-12));
    }

    #[test]
    fn reduced_density_examples() {
        let bell = BipartiteState::bell();
        let r1 = reduced_density(&bell, Side::One);
        assert!(hs_distance(r1.matrix(), &diagonal(&[0.5, 0.5])).unwrap() < 1e-15);

        let s = BipartiteState::two_thirds();
        let r1 = reduced_density(&s, Side::One);
        assert!(hs_distance(r1.matrix(), &diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap() < 1e-15);

        let mut rng = rng_from_seed(2);
        let a = random_vector(3, &mut rng).normalize();
        let b = random_vector(2, &mut rng).normalize();
        let p = BipartiteState::product(&a, &b).unwrap();
        let r1 = reduced_density(&p, Side::One);
        assert!(hs_distance(r1.matrix(), &projector_onto(&a)).unwrap() < 1e-14);
        let r2 = reduced_density(&p, Side::Two);
        assert!(hs_distance(r2.matrix(), &projector_onto(&b)).unwrap() < 1e-14);
    }

    #[test]
    fn partial_trace_of_pure_state_matches_reduced_density() {
        let mut rng = rng_from_seed(8);
        let psi = BipartiteState::random(3, 2, &mut rng);
        let full = projector_onto(psi.amplitudes());
        for side in [Side::One, Side::Two] {
            let pt = partial_trace(&full, 3, 2, side).unwrap();
            let rd = reduced_density(&psi, side);
            assert!(hs_distance(&pt, rd.matrix()).unwrap() < 1e-14);
        }
    }

    #[test]
    fn basis_completion() {
        let mut rng = rng_from_seed(30);
        let u = haar_unitary(5, &mut rng);
        let part = u.columns(0, 2).into_owned();
        let full = complete_orthonormal_basis(&part);
        assert_eq!(full.shape(), (5, 5));
        assert!(orthonormality_residual(&full) < 1e-13);
        assert_eq!(full.columns(0, 2), part.columns(0, 2));
        let empty = complete_orthonormal_basis(&CMatrix::zeros(3, 0));
        assert_eq!(empty, CMatrix::identity(3, 3));
    }

    #[test]
    fn hs_metric_examples() {
        let d = hs_distance(&diagonal(&[1.0, 0.0]), &diagonal(&[0.0, 1.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);

        let mut rng = rng_from_seed(4);
        let a = haar_unitary(3, &mut rng) * C64::new(0.0, 2.0);
        let ip = hs_inner(&a, &a).unwrap();
        assert!(ip.im.abs() < 1e-13 && (ip.re - hs_norm(&a).powi(2)).abs() < 1e-12);
        assert!(hs_inner(&a, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn hs_convergence_controls_strong_convergence() {
        let mut rng = rng_from_seed(21);
        let rho = DensityOperator::random(4, 4, &mut rng);
        let sigma = DensityOperator::random(4, 4, &mut rng);
        for n in [1.0, 10.0, 100.0, 1e4] {
            let rho_n = rho.matrix() * C64::new(1.0 - 1.0 / n, 0.0)
                + sigma.matrix() * C64::new(1.0 / n, 0.0);
            let hs = hs_distance(rho.matrix(), &rho_n).unwrap();
            for _ in 0..10 {
                let v = random_vector(4, &mut rng);
                let strong = strong_residual(rho.matrix(), &rho_n, &v).unwrap();
                assert!(strong <= hs * v.norm() + 1e-15);
            }
        }
    }
}
