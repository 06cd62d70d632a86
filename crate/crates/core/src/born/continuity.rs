use serde::Serialize;

use super::{Event, ProbabilityReport, RationalSpectrum, Route};
use crate::error::{Error, Result};
use crate::hilbert::{
    complete_orthonormal_basis, hs_distance, outer, reduced_density,
    BipartiteState, CMatrix, CVector, DensityOperator, Side, C64,
};
use crate::tolerance::Tolerances;

/// Largest exponent used for rational approximations (`M <= 10^7`).
const MAX_DECADE: u32 = 7;

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityTerm {
    pub n: usize,
    /// Eigenvalue of the approximating density on the tracked eigenvector.
    pub probability: f64,
    /// `||rho_1 - rho_1^n||_HS`
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_rational: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySequence {
    /// The eigenvalue whose eigenvector is tracked (the largest one).
    pub target: f64,
    /// Densities with rational spectra on the same eigen-projectors, with
    /// denominators bounded by `10^n`.
    pub rational: Vec<ContinuityTerm>,
    /// `sum_{j<=n} r_j Q^j`, renormalized to unit trace.
    pub truncation: Vec<ContinuityTerm>,
    pub monotone: bool,
}

fn nonincreasing(terms: &[ContinuityTerm]) -> bool {
    terms.windows(2).all(|w| w[1].residual <= w[0].residual + 1e-15)
}

/// Two approximating sequences of `rho1` sharing its eigen-projectors.
///
/// The truncation normalizes by `sum_{k<=n} d_k r_k`, the trace of the kept
/// part; this reduces to `sum_{k<=n} r_k` when every eigenvalue is simple.
pub fn continuity_sequence(
    rho1: &DensityOperator,
    n_max: usize,
    tol: &Tolerances,
) -> Result<ContinuitySequence> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    let spec = rho1.spectral(tol);
    let values: Vec<f64> = spec.blocks.iter().map(|b| b.value).collect();
    let mults: Vec<usize> = spec.blocks.iter().map(|b| b.multiplicity).collect();
    let d = rho1.dim();

    let mut rational = Vec::new();
    for n in 1..=n_max.min(MAX_DECADE as usize) {
        let r = RationalSpectrum::from_values(&values, &mults, 10u64.pow(n as u32))?;
        let approx = spec.blocks.iter().zip(r.approximations()).fold(CMatrix::zeros(d, d), |acc, (b, x)| {
            acc + &b.projector * C64::new(x, 0.0)
        });
        rational.push(ContinuityTerm {
            n,
            probability: r.approximations()[0],
            residual: hs_distance(rho1.matrix(), &approx)?,
            exact_rational: Some(r.eigenvalue(0).to_string()),
        });
    }

    let mut truncation = Vec::new();
    for n in 1..=n_max.min(spec.blocks.len()) {
        let kept = &spec.blocks[..n];
        let norm: f64 = kept.iter().map(|b| b.value * b.multiplicity as f64).sum();
        let approx = kept.iter().fold(CMatrix::zeros(d, d), |acc, b| {
            acc + &b.projector * C64::new(b.value / norm, 0.0)
        });
        truncation.push(ContinuityTerm {
            n,
            probability: values[0] / norm,
            residual: hs_distance(rho1.matrix(), &approx)?,
            exact_rational: None,
        });
    }

    let monotone = nonincreasing(&rational) && nonincreasing(&truncation);
    Ok(ContinuitySequence { target: values[0], rational, truncation, monotone })
}

/// `{10, 100, ...}` up to `n_max`.
pub fn decade_grid(n_max: u64) -> Vec<u64> {
    std::iter::successors(Some(10u64), |n| n.checked_mul(10)).take_while(|&n| n <= n_max).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolatedTerm {
    pub n: u64,
    /// `<phi|rho_1^n|phi>`
    pub value: f64,
    /// `<phi|rho_1^n|phi> - |<phi|psi>|^2`
    pub deviation: f64,
    /// `n * deviation`
    pub scaled: f64,
    /// `||rho_1^n - |psi><psi| ||_HS`
    pub residual: f64,
    /// `||tr_2 |Psi^n><Psi^n| - rho_1^n||_HS` for the explicit purification.
    pub purification_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolatedLimit {
    pub terms: Vec<IsolatedTerm>,
    /// `(<phi|tau|phi> - |<phi|psi>|^2)`: the exact `1/n` coefficient.
    pub predicted_constant: f64,
    pub monotone: bool,
    pub limit: ProbabilityReport,
}

/// `rho_1^n = (1 - 1/n)|psi><psi| + tau/n` with `tau = (1 - |psi><psi|)/(d-1)`,
/// each realized as the reduced state of an explicit bipartite purification.
pub fn isolated_state_limit(
    psi: &CVector,
    phi: &CVector,
    grid: &[u64],
    tol: &Tolerances,
) -> Result<IsolatedLimit> {
    let d = psi.len();
    if d < 2 {
        return Err(Error::Precondition("the isolated-state family needs dimension at least 2".into()));
    }
    if phi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: phi.len() });
    }
    for v in [psi, phi] {
        let norm = v.norm();
        if (norm - 1.0).abs() >= tol.tol_norm {
            return Err(Error::NotNormalized { norm });
        }
    }
    if grid.iter().any(|&n| n < 2) {
        return Err(Error::Precondition("every n must be at least 2".into()));
    }
    let pure = outer(psi, psi);
    let tau = (CMatrix::identity(d, d) - &pure) * C64::new(1.0 / (d - 1) as f64, 0.0);
    let overlap = psi.dotc(phi).norm_sqr();
    let tau_phi = phi.dotc(&(&tau * phi)).re;
    // Orthonormal basis with psi first: rho_1^n is diagonal in it.
    let basis = complete_orthonormal_basis(&CMatrix::from_columns(std::slice::from_ref(psi)));

    let mut terms = Vec::with_capacity(grid.len());
    for &n in grid {
        let inv = 1.0 / n as f64;
        let rho_n = &pure * C64::new(1.0 - inv, 0.0) + &tau * C64::new(inv, 0.0);
        let weights: Vec<f64> =
            (0..d).map(|i| if i == 0 { 1.0 - inv } else { inv / (d - 1) as f64 }).collect();
        let purification = purify(&basis, &weights)?;
        let reduced = reduced_density(&purification, Side::One);
        let value = phi.dotc(&(&rho_n * phi)).re;
        let deviation = value - overlap;
        terms.push(IsolatedTerm {
            n,
            value,
            deviation,
            scaled: deviation * n as f64,
            residual: hs_distance(&rho_n, &pure)?,
            purification_residual: hs_distance(reduced.matrix(), &rho_n)?,
        });
    }
    let monotone = terms.windows(2).all(|w| w[1].residual <= w[0].residual + 1e-15);
    let limit = ProbabilityReport::new(Event::Vector { vector: phi.clone() }, overlap, Route::Expectation)
        .with_residual(
            "last-deviation",
            terms.last().map_or(f64::INFINITY, |t| t.deviation.abs()),
        );
    Ok(IsolatedLimit { terms, predicted_constant: tau_phi - overlap, monotone, limit })
}

/// `sum_i w_i^{1/2} |b_i>_1 |i>_2`
fn purify(basis: &CMatrix, weights: &[f64]) -> Result<BipartiteState> {
    let d = basis.nrows();
    let mut a = CMatrix::zeros(d, weights.len());
    for (i, &w) in weights.iter().enumerate() {
        a.set_column(i, &(basis.column(i) * C64::new(w.max(0.0).sqrt(), 0.0)));
    }
    BipartiteState::from_matrix(&a, &Tolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_vector, diagonal};
    use crate::random::{random_spectrum, random_unit_vector, rng_from_seed};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn irrational_pair_converges() {
        let t = tol();
        let r = 0.5f64.sqrt();
        let rho = DensityOperator::new(diagonal(&[r, 1.0 - r]), &t).unwrap();
        let seq = continuity_sequence(&rho, 6, &t).unwrap();
        assert!(seq.monotone);
        for term in &seq.rational {
            let bound = 1.0 / 10f64.powi(term.n as i32);
            assert!((term.probability - r).abs() <= bound);
        }
    }

    #[test]
    fn rational_input_is_constant() {
        let t = tol();
        let rho = DensityOperator::new(diagonal(&[2.0 / 3.0, 1.0 / 3.0]), &t).unwrap();
        let seq = continuity_sequence(&rho, 5, &t).unwrap();
        assert!(seq.rational.iter().all(|x| x.exact_rational.as_deref() == Some("2/3")));
        assert!(seq.rational.iter().all(|x| x.residual < 1e-15));
    }

    #[test]
    fn truncation_decreases_to_the_eigenvalue() {
        let t = tol();
        let mut rng = rng_from_seed(81);
        let w = random_spectrum(8, &mut rng);
        let rho = DensityOperator::new(diagonal(&w), &t).unwrap();
        let seq = continuity_sequence(&rho, 8, &t).unwrap();
        assert_eq!(seq.truncation.len(), 8);
        assert!(seq.truncation.windows(2).all(|x| x[1].probability <= x[0].probability));
        assert!((seq.truncation[7].probability - w[0]).abs() < 1e-14);
        assert!(seq.monotone);
    }

    #[test]
    fn isolated_examples() {
        let t = tol();
        let psi = basis_vector(3, 0);
        let lim = isolated_state_limit(&psi, &psi, &[10], &t).unwrap();
        assert!(lim.terms[0].value >= 0.9 && lim.limit.value == 1.0);

        let orth = basis_vector(3, 1);
        let lim = isolated_state_limit(&psi, &orth, &decade_grid(1000), &t).unwrap();
        assert_eq!(lim.limit.value, 0.0);
        assert!((lim.terms[2].value - 0.5e-3).abs() < 1e-15);
    }

    #[test]
    fn isolated_rate_is_one_over_n() {
        let t = tol();
        let mut rng = rng_from_seed(82);
        let psi = random_unit_vector(4, &mut rng);
        let phi = random_unit_vector(4, &mut rng);
        let lim = isolated_state_limit(&psi, &phi, &decade_grid(1_000_000), &t).unwrap();
        assert!(lim.monotone);
        for term in &lim.terms {
            assert!((term.scaled - lim.predicted_constant).abs() < 1e-6);
            assert!(term.purification_residual < 1e-12);
        }
        assert!(lim.terms.last().unwrap().deviation.abs() < 1e-6);
    }
}
