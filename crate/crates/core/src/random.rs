//! Seeded sampling: complex Gaussian vectors, Ginibre matrices, Haar unitaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{CMatrix, CVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex normal sample (`E|z|^2 = 1`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| complex_normal(rng))
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = random_vector(dim, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / C64::new(n, 0.0);
        }
    }
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(dim, dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random Hermitian matrix (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Random probability vector of the given length, sorted descending, all
/// entries positive.
pub fn random_spectrum<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::unitary_residual;

    #[test]
    fn haar_unitaries_are_unitary_and_seeded() {
        let mut a = rng_from_seed(1);
        let mut b = rng_from_seed(1);
        for d in 1..=8 {
            let u = haar_unitary(d, &mut a);
            assert!(unitary_residual(&u) < 1e-12);
            assert_eq!(u, haar_unitary(d, &mut b));
        }
    }

    #[test]
    fn spectra_are_normalized_and_descending() {
        let mut rng = rng_from_seed(2);
        let s = random_spectrum(6, &mut rng);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(s.windows(2).all(|w| w[0] >= w[1]) && s[5] > 0.0);
    }
}
