use rand::Rng;
use serde::Serialize;

use super::{Event, ProbabilityReport, Route};
use crate::error::{Error, Result};
use crate::hilbert::{
    hermitian_eigen, hs_distance, hs_norm, projector_residual, reduced_density, trace,
    BipartiteState, CMatrix, CVector, DensityOperator, Side, C64,
};
use crate::random::haar_unitary;
use crate::schmidt::subsystem_picture;
use crate::tolerance::Tolerances;
use crate::twins::{swap_twin, TwinPair};

fn clamp_probability(value: f64, tol: &Tolerances) -> Result<f64> {
    if !(-tol.tol_op..=1.0 + tol.tol_op).contains(&value) {
        return Err(Error::Numerical(format!("probability {value} outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `<phi|rho|phi>` for a unit vector, `tr(rho E)` for a projector.
///
/// A vector that is an eigenvector of `rho` (within `tol_op`) is reported on
/// the eigenvalue route.
pub fn born_probability(rho: &DensityOperator, event: &Event, tol: &Tolerances) -> Result<ProbabilityReport> {
    let d = rho.dim();
    match event {
        Event::Vector { vector } => {
            if vector.len() != d {
                return Err(Error::InvalidEvent(format!("vector has length {}, expected {d}", vector.len())));
            }
            let norm = vector.norm();
            if (norm - 1.0).abs() >= tol.tol_norm {
                return Err(Error::InvalidEvent(format!("vector has norm {norm}")));
            }
            let value = rho.expectation(vector);
            let eigen = (rho.matrix() * vector - vector * C64::new(value, 0.0)).norm();
            let route = if eigen < tol.tol_op { Route::Eigenvalue } else { Route::Expectation };
            Ok(ProbabilityReport::new(event.clone(), clamp_probability(value, tol)?, route)
                .with_residual("eigenvector", eigen))
        }
        Event::Projector { matrix } => {
            if matrix.shape() != (d, d) {
                return Err(Error::InvalidEvent(format!("projector is {}x{}, expected {d}x{d}", matrix.nrows(), matrix.ncols())));
            }
            let residual = projector_residual(matrix);
            if residual >= tol.tol_op {
                return Err(Error::InvalidEvent(format!("not a projector (residual {residual:e})")));
            }
            let value = trace(&(rho.matrix() * matrix)).re;
            Ok(ProbabilityReport::new(event.clone(), clamp_probability(value, tol)?, Route::TraceRule)
                .with_residual("projector", residual))
        }
        Event::Label { label } => Err(Error::InvalidEvent(format!("label `{label}` has no operator"))),
    }
}

/// `sum_k w_k |<phi|psi_k>|^2` for a pure-state decomposition `(w_k, psi_k)`.
pub fn mixture_probability(decomposition: &[(f64, CVector)], phi: &CVector) -> f64 {
    decomposition.iter().map(|(w, psi)| w * phi.dotc(psi).norm_sqr()).sum()
}

/// A random decomposition of `rho` into `count >= rank` pure states.
///
/// Mixes the weighted eigenvectors with a Haar unitary:
/// `|psi~_k> = sum_i U_ki sqrt(r_i)|e_i>`, `w_k = <psi~_k|psi~_k>`. Zero-weight
/// members are dropped.
pub fn random_decomposition<R: Rng + ?Sized>(
    rho: &DensityOperator,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(f64, CVector)>> {
    let (values, vectors) = hermitian_eigen(rho.matrix());
    let rank = values.iter().filter(|&&r| r > 0.0).count();
    if count < rank {
        return Err(Error::Precondition(format!("need at least {rank} members, got {count}")));
    }
    let u = haar_unitary(count, rng);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = CVector::zeros(rho.dim());
        for (i, &r) in values.iter().enumerate().take(count.min(values.len())) {
            if r > 0.0 {
                v += vectors.column(i) * (u[(k, i)] * r.sqrt());
            }
        }
        let w = v.norm_squared();
        if w > 0.0 {
            out.push((w, v / C64::new(w.sqrt(), 0.0)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditivityReport {
    /// `tr(rho G)`
    pub lhs: f64,
    /// `sum_i tr(rho E_i)`
    pub rhs: f64,
    pub residual: f64,
    /// `sum_i <i|rho|i>` over an orthonormal basis of the range of `G`.
    pub trace_rule: f64,
    pub trace_rule_residual: f64,
    /// Step `k` compares `p(E_1 + ... + E_k)` with `p(E_1 + ... + E_{k-1}) + p(E_k)`.
    pub induction: Vec<f64>,
}

fn require_decomposition(g: &CMatrix, parts: &[CMatrix], dim: usize, tol: &Tolerances) -> Result<()> {
    let bad = |residual: f64| Err(Error::NonOrthogonalDecomposition { residual });
    if parts.is_empty() {
        return bad(f64::INFINITY);
    }
    for m in std::iter::once(g).chain(parts) {
        if m.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!("{}x{} operator in a {dim}-dimensional space", m.nrows(), m.ncols())));
        }
        let r = projector_residual(m);
        if r >= tol.tol_op {
            return bad(r);
        }
    }
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            let r = hs_norm(&(a * b));
            if r >= tol.tol_op {
                return bad(r);
            }
        }
    }
    let total = parts.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    let r = hs_distance(&total, g)?;
    if r >= tol.tol_op {
        return bad(r);
    }
    Ok(())
}

/// Compares `tr(rho G)` with `sum_i tr(rho E_i)` for an orthogonal
/// decomposition `G = sum_i E_i`, replays the finite induction one term at a
/// time, and evaluates the range-basis sum of `G`.
pub fn additivity_check(
    rho: &DensityOperator,
    g: &CMatrix,
    parts: &[CMatrix],
    tol: &Tolerances,
) -> Result<AdditivityReport> {
    let d = rho.dim();
    require_decomposition(g, parts, d, tol)?;
    let p = |e: &CMatrix| trace(&(rho.matrix() * e)).re;
    let lhs = p(g);
    let singles: Vec<f64> = parts.iter().map(p).collect();
    let rhs: f64 = singles.iter().sum();

    let mut induction = Vec::with_capacity(parts.len().saturating_sub(1));
    let mut partial = parts[0].clone();
    for (e, &pe) in parts.iter().zip(&singles).skip(1) {
        let before = p(&partial);
        partial += e;
        induction.push((p(&partial) - before - pe).abs());
    }

    let (values, vectors) = hermitian_eigen(g);
    let trace_rule: f64 = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| rho.expectation(&vectors.column(i).into_owned()))
        .sum();
    Ok(AdditivityReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        trace_rule,
        trace_rule_residual: (trace_rule - lhs).abs(),
        induction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOneCertificate {
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<TwinPair>,
    pub reason: String,
    pub state_hash: String,
    /// `p(phi)` and `p(phi')` under `rho_1`, equal whenever certified.
    pub probabilities: [f64; 2],
}

/// Certifies that `phi` and `phi_prime` are equiprobable by exhibiting a twin
/// pair whose first member swaps them. Vectors that do not share an
/// eigen-subspace of `rho_1` yield an uncertified verdict, not an error.
pub fn stage_one_certificate(
    psi: &BipartiteState,
    phi: &CVector,
    phi_prime: &CVector,
    tol: &Tolerances,
) -> Result<StageOneCertificate> {
    let picture = subsystem_picture(psi, tol)?;
    let rho1 = reduced_density(psi, Side::One);
    let (pair, certified, reason) = match swap_twin(phi, phi_prime, &picture, tol) {
        Ok(pair) => (Some(pair), true, "swap twin certified".to_string()),
        Err(Error::NotCoResident) => {
            (None, false, "not certifiable by stage one: no common eigen-subspace".to_string())
        }
        Err(e) => return Err(e),
    };
    Ok(StageOneCertificate {
        certified,
        pair,
        reason,
        state_hash: psi.hash(),
        probabilities: [rho1.expectation(phi), rho1.expectation(phi_prime)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_vector, diagonal, real_vector};
    use crate::random::{haar_unitary, rng_from_seed};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn vector(v: CVector) -> Event {
        Event::Vector { vector: v }
    }

    #[test]
    fn probability_examples() {
        let t = tol();
        let rho = DensityOperator::new(diagonal(&[2.0 / 3.0, 1.0 / 3.0]), &t).unwrap();
        let r = born_probability(&rho, &vector(basis_vector(2, 0)), &t).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.route, Route::Eigenvalue);

        let plus = real_vector(&[0.5f64.sqrt(), 0.5f64.sqrt()]);
        let r = born_probability(&rho, &vector(plus), &t).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert_eq!(r.route, Route::Expectation);

        let id = Event::Projector { matrix: CMatrix::identity(2, 2) };
        let r = born_probability(&rho, &id, &t).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15 && r.route == Route::TraceRule);

        let pure = DensityOperator::pure(&basis_vector(3, 0), &t).unwrap();
        assert_eq!(born_probability(&pure, &vector(basis_vector(3, 2)), &t).unwrap().value, 0.0);

        for bad in [
            vector(real_vector(&[1.0, 1.0])),
            vector(basis_vector(3, 0)),
            Event::Projector { matrix: diagonal(&[0.5, 0.5]) },
            Event::Label { label: "x".into() },
        ] {
            assert!(matches!(born_probability(&rho, &bad, &t), Err(Error::InvalidEvent(_))));
        }
    }

    #[test]
    fn decompositions_are_immaterial() {
        let t = tol();
        let mut rng = rng_from_seed(101);
        let rho = DensityOperator::random(4, 3, &mut rng);
        let phi = crate::random::random_unit_vector(4, &mut rng);
        let direct = rho.expectation(&phi);
        for count in [3, 5, 9] {
            let dec = random_decomposition(&rho, count, &mut rng).unwrap();
            let sum: f64 = dec.iter().map(|(w, _)| w).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!((mixture_probability(&dec, &phi) - direct).abs() < t.tol_op);
        }
        assert!(random_decomposition(&rho, 2, &mut rng).is_err());
    }

    #[test]
    fn additivity_examples() {
        let t = tol();
        let mut rng = rng_from_seed(102);
        let rho = DensityOperator::random(6, 6, &mut rng);
        let comp: Vec<CMatrix> = (0..6).map(|i| crate::hilbert::projector_onto(&basis_vector(6, i))).collect();
        let r = additivity_check(&rho, &CMatrix::identity(6, 6), &comp, &t).unwrap();
        assert!(r.residual < 1e-12 && (r.lhs - 1.0).abs() < 1e-12);
        assert!(r.induction.iter().all(|x| *x < 1e-11));

        // A rank-3 projector split two ways.
        let u = haar_unitary(6, &mut rng);
        let range = u.columns(0, 3).into_owned();
        let g = &range * range.adjoint();
        let split = |basis: &CMatrix| -> Vec<CMatrix> {
            (0..3).map(|i| crate::hilbert::projector_onto(&basis.column(i).into_owned())).collect()
        };
        let rot = haar_unitary(3, &mut rng);
        let a = additivity_check(&rho, &g, &split(&range), &t).unwrap();
        let b = additivity_check(&rho, &g, &split(&(&range * rot)), &t).unwrap();
        assert!((a.rhs - b.rhs).abs() < 1e-12 && a.trace_rule_residual < 1e-12);

        let overlapping = vec![comp[0].clone(), comp[0].clone()];
        assert!(matches!(
            additivity_check(&rho, &(&comp[0] + &comp[1]), &overlapping, &t),
            Err(Error::NonOrthogonalDecomposition { .. })
        ));
    }

    #[test]
    fn stage_one_examples() {
        let t = tol();
        let bell = BipartiteState::bell();
        let plus = real_vector(&[0.5f64.sqrt(), 0.5f64.sqrt()]);
        let c = stage_one_certificate(&bell, &basis_vector(2, 0), &plus, &t).unwrap();
        assert!(c.certified && c.pair.is_some());
        assert!((c.probabilities[0] - c.probabilities[1]).abs() < 1e-12);

        let c = stage_one_certificate(&BipartiteState::two_thirds(), &basis_vector(2, 0), &basis_vector(2, 1), &t)
            .unwrap();
        assert!(!c.certified && c.pair.is_none());

        let c = stage_one_certificate(&bell, &plus, &plus, &t).unwrap();
        let pair = c.pair.unwrap();
        assert!((&pair.u1 * &plus - &plus).norm() < 1e-12);
    }
}
