use rand::Rng;
use serde::Serialize;

use super::{Event, ProbabilityReport, Route};
use crate::error::{Error, Result};
use crate::hilbert::{
    hs_distance, hs_norm, outer, require_projector, trace, CMatrix, CVector, DensityOperator, C64,
};
use crate::json;
use crate::random::{complex_normal, ginibre};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct ClosestEigenstate {
    pub rho_prime: DensityOperator,
    /// `<phi|rho|phi>`, the eigenvalue of `phi` in `rho_prime`.
    pub r_prime: f64,
    /// `||rho - rho_prime||_HS`
    pub distance: f64,
    pub report: ProbabilityReport,
}

fn unit(phi: &CVector, dim: usize, tol: &Tolerances) -> Result<()> {
    if phi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: phi.len() });
    }
    let norm = phi.norm();
    if (norm - 1.0).abs() >= tol.tol_norm {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `rho' = <phi|rho|phi> |phi><phi| + P rho P` with `P = 1 - |phi><phi|`: the
/// density nearest to `rho` among those having `phi` as an eigenvector and
/// agreeing with `rho` on the complement.
pub fn closest_eigenstate_density(
    rho: &DensityOperator,
    phi: &CVector,
    tol: &Tolerances,
) -> Result<ClosestEigenstate> {
    let d = rho.dim();
    unit(phi, d, tol)?;
    let proj = outer(phi, phi);
    let perp = CMatrix::identity(d, d) - &proj;
    let r_prime = rho.expectation(phi);
    let m = &proj * C64::new(r_prime, 0.0) + &perp * rho.matrix() * &perp;
    let rho_prime = DensityOperator::new(m, tol)?;
    let distance = hs_distance(rho.matrix(), rho_prime.matrix())?;
    let eigen_residual = (rho_prime.matrix() * phi - phi * C64::new(r_prime, 0.0)).norm();
    let report = ProbabilityReport::new(Event::Vector { vector: phi.clone() }, r_prime, Route::ClosestEigenstate)
        .with_residual("eigenvector", eigen_residual);
    Ok(ClosestEigenstate { rho_prime, r_prime, distance, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub samples: usize,
    pub best_distance: f64,
    #[serde(with = "json::matrix")]
    pub best_candidate: CMatrix,
    pub closed_form_distance: f64,
    /// `closed_form_distance - best_distance`; positive means the closed form
    /// was beaten.
    pub margin: f64,
    pub beaten: bool,
}

/// `r |phi><phi| + (1 - r) P G G^dagger P / tr(...)`
fn candidate(phi_proj: &CMatrix, perp: &CMatrix, r: f64, g: &CMatrix) -> CMatrix {
    let tail = perp * g * g.adjoint() * perp;
    let t = trace(&tail).re;
    let tail = if t > 0.0 { tail / C64::new(t, 0.0) } else { tail };
    phi_proj * C64::new(r, 0.0) + tail * C64::new(1.0 - r, 0.0)
}

/// Randomized search over densities having `phi` as an eigenvector.
///
/// Half the budget draws `r` uniformly on `[0, 1]` and the complement part
/// from normalized Wishart matrices of random rank; the other half refines
/// the incumbent with Gaussian steps of shrinking size.
pub fn closest_oracle<R: Rng + ?Sized>(
    rho: &DensityOperator,
    phi: &CVector,
    samples: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<OracleResult> {
    let d = rho.dim();
    if d > 6 {
        return Err(Error::Precondition(format!("oracle is limited to dimension 6, got {d}")));
    }
    if samples == 0 {
        return Err(Error::Precondition("oracle needs at least one sample".into()));
    }
    unit(phi, d, tol)?;
    let closed = closest_eigenstate_density(rho, phi, tol)?;
    let phi_proj = outer(phi, phi);
    let perp = CMatrix::identity(d, d) - &phi_proj;

    let mut best_r = 1.0;
    let mut best_g = CMatrix::zeros(d, 1);
    let mut best = candidate(&phi_proj, &perp, best_r, &best_g);
    let mut best_distance = hs_distance(rho.matrix(), &best)?;
    let global = samples.div_ceil(2);
    for i in 0..samples {
        let (r, g) = if i < global || d == 1 {
            let rank = rng.random_range(1..=d.max(2) - 1);
            (rng.random::<f64>(), ginibre(d, rank, rng))
        } else {
            let progress = (i - global) as f64 / (samples - global).max(1) as f64;
            let step = 0.3 * (1e-4f64 / 0.3).powf(progress);
            let r = (best_r + step * complex_normal(rng).re).clamp(0.0, 1.0);
            let g = best_g.map(|z| z + complex_normal(rng) * step * z.norm().max(0.1));
            (r, g)
        };
        let c = candidate(&phi_proj, &perp, r, &g);
        let dist = hs_distance(rho.matrix(), &c)?;
        if dist < best_distance {
            best_distance = dist;
            best_r = r;
            best_g = g;
            best = c;
        }
    }
    let margin = closed.distance - best_distance;
    Ok(OracleResult {
        samples,
        best_distance,
        best_candidate: best,
        closed_form_distance: closed.distance,
        margin,
        beaten: margin > tol.tol_oracle,
    })
}

/// Checks `P_i P_k = 0` for `i != k` and `sum_k P_k = 1`.
fn require_resolution(projectors: &[CMatrix], dim: usize, tol: &Tolerances) -> Result<()> {
    if projectors.is_empty() {
        return Err(Error::NotAResolution("no projectors given".into()));
    }
    for p in projectors {
        if p.shape() != (dim, dim) {
            return Err(Error::NotAResolution(format!("projector is {}x{}, expected {dim}x{dim}", p.nrows(), p.ncols())));
        }
        require_projector(p, tol.tol_op).map_err(|e| Error::NotAResolution(e.to_string()))?;
    }
    for (i, a) in projectors.iter().enumerate() {
        for b in &projectors[i + 1..] {
            let overlap = hs_norm(&(a * b));
            if overlap >= tol.tol_op {
                return Err(Error::NotAResolution(format!("projectors overlap by {overlap:e}")));
            }
        }
    }
    let total = projectors.iter().fold(CMatrix::zeros(dim, dim), |acc, p| acc + p);
    let gap = hs_distance(&total, &CMatrix::identity(dim, dim))?;
    if gap >= tol.tol_op {
        return Err(Error::NotAResolution(format!("projectors sum to identity only within {gap:e}")));
    }
    Ok(())
}

/// `sum_k P_k rho P_k` for an orthogonal resolution of the identity.
pub fn lueders_state(
    rho: &DensityOperator,
    projectors: &[CMatrix],
    tol: &Tolerances,
) -> Result<DensityOperator> {
    require_resolution(projectors, rho.dim(), tol)?;
    let m = projectors
        .iter()
        .fold(CMatrix::zeros(rho.dim(), rho.dim()), |acc, p| acc + p * rho.matrix() * p);
    DensityOperator::new(m, tol)
}

/// `(P rho P / tr(P rho), tr(P rho))`
pub fn selective_lueders(
    rho: &DensityOperator,
    p: &CMatrix,
    tol: &Tolerances,
) -> Result<(DensityOperator, f64)> {
    if p.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::ShapeMismatch(format!("projector is {}x{}", p.nrows(), p.ncols())));
    }
    require_projector(p, tol.tol_op)?;
    let weight = trace(&(p * rho.matrix())).re;
    if weight <= tol.eps_rank {
        return Err(Error::ZeroWeight { weight });
    }
    let m = p * rho.matrix() * p / C64::new(weight, 0.0);
    Ok((DensityOperator::new(m, tol)?, weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_vector, diagonal, real_matrix};
    use crate::random::{random_unit_vector, rng_from_seed};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn example() -> DensityOperator {
        DensityOperator::new(real_matrix(2, 2, &[0.7, 0.2, 0.2, 0.3]), &tol()).unwrap()
    }

    #[test]
    fn closest_examples() {
        let t = tol();
        let c = closest_eigenstate_density(&example(), &basis_vector(2, 0), &t).unwrap();
        assert!(hs_distance(c.rho_prime.matrix(), &diagonal(&[0.7, 0.3])).unwrap() < 1e-15);
        assert!((c.r_prime - 0.7).abs() < 1e-15);

        let rho = DensityOperator::new(diagonal(&[0.6, 0.4]), &t).unwrap();
        let c = closest_eigenstate_density(&rho, &basis_vector(2, 1), &t).unwrap();
        assert!(hs_distance(c.rho_prime.matrix(), rho.matrix()).unwrap() < 1e-15);
        assert!((c.r_prime - 0.4).abs() < 1e-15);

        let mut rng = rng_from_seed(91);
        let psi = random_unit_vector(3, &mut rng);
        let phi = random_unit_vector(3, &mut rng);
        let pure = DensityOperator::pure(&psi, &t).unwrap();
        let c = closest_eigenstate_density(&pure, &phi, &t).unwrap();
        assert!((c.r_prime - phi.dotc(&psi).norm_sqr()).abs() < 1e-12);
        assert!(closest_eigenstate_density(&pure, &(phi * C64::new(2.0, 0.0)), &t).is_err());
    }

    #[test]
    fn oracle_does_not_beat_the_closed_form() {
        let t = tol();
        let mut rng = rng_from_seed(92);
        let o = closest_oracle(&example(), &basis_vector(2, 0), 20_000, &mut rng, &t).unwrap();
        assert!(!o.beaten && o.best_distance >= o.closed_form_distance - 1e-6);
        // Refinement gets close to the optimum.
        assert!(o.best_distance - o.closed_form_distance < 1e-3);

        let rho = DensityOperator::new(diagonal(&[0.5, 0.3, 0.2]), &t).unwrap();
        let o = closest_oracle(&rho, &basis_vector(3, 1), 20_000, &mut rng, &t).unwrap();
        assert!(o.closed_form_distance < 1e-15 && o.best_distance < 1e-2);
        assert!(closest_oracle(&DensityOperator::maximally_mixed(7), &basis_vector(7, 0), 10, &mut rng, &t).is_err());
    }

    #[test]
    fn lueders_examples() {
        let t = tol();
        let comp = [diagonal(&[1.0, 0.0]), diagonal(&[0.0, 1.0])];
        let l = lueders_state(&example(), &comp, &t).unwrap();
        assert!(hs_distance(l.matrix(), &diagonal(&[0.7, 0.3])).unwrap() < 1e-15);

        let block = DensityOperator::new(diagonal(&[0.5, 0.5]), &t).unwrap();
        let l = lueders_state(&block, &comp, &t).unwrap();
        assert_eq!(l.matrix(), block.matrix());

        let (s, w) = selective_lueders(&example(), &comp[0], &t).unwrap();
        assert!(hs_distance(s.matrix(), &comp[0]).unwrap() < 1e-15 && (w - 0.7).abs() < 1e-15);

        assert!(matches!(lueders_state(&example(), &comp[..1], &t), Err(Error::NotAResolution(_))));
        let pure = DensityOperator::pure(&basis_vector(2, 0), &t).unwrap();
        assert!(matches!(selective_lueders(&pure, &comp[1], &t), Err(Error::ZeroWeight { .. })));
    }
}
