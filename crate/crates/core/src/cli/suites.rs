use rand::Rng;
use serde::Serialize;

use super::{CliResult, Params, Report};
use crate::born::{
    born_probability, closest_eigenstate_density, closest_oracle, continuity_sequence,
    counting_probabilities, decade_grid, finegrain_state, finegrain_unitary, isolated_state_limit,
    lueders_state, rational_spectrum, stage_one_certificate, Event,
};
use crate::error::Error;
use crate::hilbert::{
    commutator_norm, hs_distance, orthonormality_residual, projector_onto, reduced_density,
    BipartiteState, CMatrix, Side,
};
use crate::random::{haar_unitary, random_hermitian, random_unit_vector};
use crate::schmidt::{canonical_schmidt, subsystem_picture, uniqueness_certificate, SubsystemPicture};
use crate::tolerance::Tolerances;
use crate::twins::{
    compose, first_theorem_residual, inverse, sample_twin, swap_twin, twin_hermitian_of, twin_of,
    TwinPair,
};

pub(super) fn schmidt<R: Rng + ?Sized>(
    psi: &BipartiteState,
    p: &Params,
    rng: &mut R,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let s = canonical_schmidt(psi, tol)?;
    report.check("reconstruction", "schmidt-decomposition", (s.reconstruct() - psi.amplitudes()).norm(), tol.tol_recon);
    report.check(
        "orthonormal-bases",
        "schmidt-decomposition",
        orthonormality_residual(&s.basis1).max(orthonormality_residual(&s.basis2)),
        tol.tol_op,
    );
    report.check("unit-weight", "schmidt-decomposition", (s.eigenvalues().iter().sum::<f64>() - 1.0).abs(), tol.tol_norm);

    let picture = subsystem_picture(psi, tol)?;
    let r = &picture.residuals;
    report.check("support-image", "correlation-operator", r.support_image, tol.tol_recon);
    report.check("block-images", "correlated-subsystem-picture", r.block_images, tol.tol_recon);
    report.check("density-image", "correlated-subsystem-picture", r.image_of_rho1, tol.tol_recon);

    let cert = uniqueness_certificate(psi, p.samples.unwrap_or(20), rng, tol)?;
    report.check("uniqueness", "correlation-uniqueness", cert.max_deviation, tol.tol_unique);

    report.put("coefficients", &s.coefficients)?;
    report.put("multiplicities", &picture.multiplicities())?;
    report.put("decomposition", &s)?;
    Ok(())
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `||H1 A - A H2^T||`: the Hermitian twin relation in matrix form.
fn hermitian_twin_residual(h1: &CMatrix, h2: &CMatrix, psi: &BipartiteState) -> f64 {
    let a = psi.coefficient_matrix();
    (h1 * &a - &a * h2.transpose()).norm()
}

/// A Hermitian operator that commutes with `rho_1`: random inside every
/// eigen-subspace, zero on the null space.
fn commuting_hermitian<R: Rng + ?Sized>(picture: &SubsystemPicture, rng: &mut R) -> CMatrix {
    let d = picture.dim(Side::One);
    picture.blocks.iter().fold(CMatrix::zeros(d, d), |acc, b| {
        acc + &b.basis1 * random_hermitian(b.multiplicity, rng) * b.basis1.adjoint()
    })
}

pub(super) fn twins<R: Rng + ?Sized>(
    psi: &BipartiteState,
    p: &Params,
    rng: &mut R,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let picture = subsystem_picture(psi, tol)?;
    let draws = p.samples.unwrap_or(100);
    let mut twin_residual = 0.0f64;
    let mut theorem = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..draws {
        match sample_twin(&picture, rng, tol) {
            Ok(pair) => {
                twin_residual = twin_residual.max(pair.residual);
                theorem = theorem.max(first_theorem_residual(&pair, &picture));
                let again = twin_of(&pair.u1, &picture, tol)?;
                round_trip = round_trip.max(hs_distance(&again.u2, &pair.u2)?);
            }
            Err(Error::CertificationFailed { .. }) => failures += 1,
            Err(e) => return Err(e.into()),
        }
    }
    report.check("sampled-twins", "twin-relation", twin_residual, tol.tol_twin);
    report.check("sampling-failures", "twin-relation", failures as f64, 1.0);
    report.check("partner-formula", "first-twin-theorem", theorem, tol.tol_twin);
    report.check("twin-of-round-trip", "first-twin-theorem", round_trip, tol.tol_twin);

    // Necessity: a Haar unitary that fails to commute has no twin.
    let u1 = haar_unitary(picture.dim(Side::One), rng);
    let commutes = commutator_norm(&u1, picture.rho(Side::One).matrix()) < tol.tol_commute;
    let outcome = twin_of(&u1, &picture, tol);
    let consistent = match outcome {
        Ok(_) => commutes,
        Err(Error::NoTwinExists { .. }) => !commutes,
        Err(e) => return Err(e.into()),
    };
    report.verdict("commutation-necessary", "first-twin-theorem", consistent);

    let mut swaps = 0usize;
    for (j, block) in picture.blocks.iter().enumerate().filter(|(_, b)| b.multiplicity >= 2) {
        let a = block.basis1.column(0).into_owned();
        let b = block.basis1.column(1).into_owned();
        let pair = swap_twin(&a, &b, &picture, tol)?;
        report.check(&format!("swap-block-{j}"), "swap-twin", (&pair.u1 * &a - &b).norm(), tol.tol_op);
        swaps += 1;
    }

    let h1 = commuting_hermitian(&picture, rng);
    let ht = twin_hermitian_of(&h1, &picture, tol)?;
    report.check("hermitian-twin", "twin-hermitians", hermitian_twin_residual(&ht.h1, &ht.h2, psi), tol.tol_twin);

    report.put("draws", &draws)?;
    report.put("swap_checks", &swaps)?;
    report.put("max_twin_residual", &twin_residual)?;
    Ok(())
}

#[derive(Debug, Default, Serialize)]
struct GroupTable {
    triples: usize,
    closure: f64,
    identity: f64,
    inverse: f64,
    associativity: f64,
}

fn pair_distance(a: &TwinPair, b: &TwinPair) -> CliResult<f64> {
    Ok(hs_distance(&a.u1, &b.u1)?.max(hs_distance(&a.u2, &b.u2)?))
}

pub(super) fn group<R: Rng + ?Sized>(
    psi: &BipartiteState,
    p: &Params,
    rng: &mut R,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let picture = subsystem_picture(psi, tol)?;
    let (d1, d2) = psi.dims();
    let id = TwinPair::identity(d1, d2);
    let mut t = GroupTable { triples: p.samples.unwrap_or(100), ..GroupTable::default() };
    for _ in 0..t.triples {
        let a = sample_twin(&picture, rng, tol)?;
        let b = sample_twin(&picture, rng, tol)?;
        let c = sample_twin(&picture, rng, tol)?;
        let ab = compose(&a, &b, psi, tol)?;
        t.closure = t.closure.max(ab.residual);
        t.identity = t.identity.max(pair_distance(&compose(&a, &id, psi, tol)?, &a)?);
        t.identity = t.identity.max(pair_distance(&compose(&id, &a, psi, tol)?, &a)?);
        t.inverse = t.inverse.max(pair_distance(&compose(&a, &inverse(&a, psi, tol)?, psi, tol)?, &id)?);
        let left = compose(&ab, &c, psi, tol)?;
        let right = compose(&a, &compose(&b, &c, psi, tol)?, psi, tol)?;
        t.associativity = t.associativity.max(pair_distance(&left, &right)?);
    }
    report.check("closure", "twin-group", t.closure, tol.tol_twin);
    report.check("identity", "twin-group", t.identity, tol.tol_twin);
    report.check("inverse", "twin-group", t.inverse, tol.tol_twin);
    report.check("associativity", "twin-group", t.associativity, tol.tol_twin);
    report.put("table", &t)?;
    Ok(())
}

pub(super) fn born_pipeline(
    psi: &BipartiteState,
    p: &Params,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let rho1 = reduced_density(psi, Side::One);
    let spec = rational_spectrum(&rho1, p.max_denominator.unwrap_or(24), tol)?;
    report.put("spectrum", &spec)?;
    report.check("rational-spectrum", "stage-two-counting", spec.error, 1e-12);
    if !spec.exact {
        return Ok(());
    }
    let phi = finegrain_state(psi, &spec, None, tol)?;
    let unitary = finegrain_unitary(psi, &spec, None, tol)?;
    report.check("finegrain-unitary", "ancilla-unitary", unitary.unitary_residual, tol.tol_op);
    report.check("finegrain-state", "ancilla-unitary", unitary.state_residual, tol.tol_recon);
    report.check("rho1-invariance", "ancilla-unitary", unitary.rho1_residual, tol.tol_recon);

    let counting = counting_probabilities(&phi, tol)?;
    report.check("equal-branches", "stage-two-counting", counting.coefficient_residual, tol.tol_op);
    let exact_blocks = counting
        .blocks
        .iter()
        .enumerate()
        .all(|(j, r)| r.fraction() == Some(spec.block_weight(j)));
    report.verdict("block-counts", "stage-two-counting", exact_blocks);

    // Every eigenvector of a block must get the counted probability.
    let spectral = rho1.spectral(tol);
    let mut coherence = 0.0f64;
    let mut exact_vectors = true;
    let mut stage_one = true;
    for (j, block) in spectral.blocks.iter().enumerate() {
        let counted = &counting.per_vector[j];
        exact_vectors &= counted.fraction() == Some(spec.eigenvalue(j));
        for c in 0..block.multiplicity {
            let e = block.basis.column(c).into_owned();
            let direct = born_probability(&rho1, &Event::Vector { vector: e.clone() }, tol)?;
            coherence = coherence.max((direct.value - counted.value).abs());
            if c > 0 {
                let first = block.basis.column(0).into_owned();
                stage_one &= stage_one_certificate(psi, &first, &e, tol)?.certified;
            }
        }
    }
    report.check("pipeline-coherence", "eigenvalue-rule", coherence, 1e-10);
    report.verdict("exact-eigenvalues", "stage-two-counting", exact_vectors);
    report.verdict("equiprobable-eigenvectors", "stage-one-twins", stage_one);

    report.put("coefficients_12_3", &counting.coefficients)?;
    report.put("blocks", &counting.blocks)?;
    report.put("per_vector", &counting.per_vector)?;
    Ok(())
}

pub(super) fn closest_state<R: Rng + ?Sized>(
    psi: &BipartiteState,
    p: &Params,
    rng: &mut R,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let rho = reduced_density(psi, Side::One);
    let d = rho.dim();
    let phi = random_unit_vector(d, rng);
    let closest = closest_eigenstate_density(&rho, &phi, tol)?;
    report.check("eigenvector", "closest-eigenstate", closest.report.residuals["eigenvector"], tol.tol_op);
    report.check("expectation", "closest-eigenstate", (closest.r_prime - rho.expectation(&phi)).abs(), 1e-12);
    if d <= 6 {
        let oracle = closest_oracle(&rho, &phi, p.samples.unwrap_or(20_000), rng, tol)?;
        report.check("oracle", "closest-eigenstate", oracle.margin, tol.tol_oracle);
        report.put("oracle_best_distance", &oracle.best_distance)?;
    }

    let proj = projector_onto(&phi);
    let perp = CMatrix::identity(d, d) - &proj;
    let lueders = lueders_state(&rho, &[proj, perp.clone()], tol)?;
    let inside = (&perp * random_unit_vector(d, rng)).normalize();
    let preserved = [&phi, &inside]
        .into_iter()
        .filter(|v| v.norm() > 0.5)
        .map(|v| (lueders.expectation(v) - rho.expectation(v)).abs());
    report.check("lueders-preservation", "lueders-state", max_of(preserved), 1e-11);

    report.put("r_prime", &closest.r_prime)?;
    report.put("distance", &closest.distance)?;
    report.put("report", &closest.report)?;
    Ok(())
}

pub(super) fn continuity<R: Rng + ?Sized>(
    psi: &BipartiteState,
    p: &Params,
    rng: &mut R,
    tol: &Tolerances,
    report: &mut Report,
) -> CliResult<()> {
    let rho1 = reduced_density(psi, Side::One);
    let seq = continuity_sequence(&rho1, p.n_max.unwrap_or(6), tol)?;
    report.verdict("monotone-sequences", "continuity", seq.monotone);
    if let Some(last) = seq.rational.last() {
        let scaled = (last.probability - seq.target).abs() * 10f64.powi(last.n as i32);
        report.check("rational-rate", "continuity", scaled, rho1.dim() as f64 + 1.0);
    }
    if let Some(last) = seq.truncation.last() {
        report.check("truncation-limit", "continuity", (last.probability - seq.target).abs(), tol.eps_cluster);
    }
    report.put("sequence", &seq)?;

    let d = psi.d1();
    if d >= 2 {
        let s = canonical_schmidt(psi, tol)?;
        let target = s.vector1(0);
        let phi = random_unit_vector(d, rng);
        let lim = isolated_state_limit(&target, &phi, &decade_grid(1_000_000), tol)?;
        report.verdict("isolated-monotone", "expectation-rule", lim.monotone);
        let last = lim.terms.last().map_or(f64::INFINITY, |t| t.deviation.abs());
        report.check("isolated-final", "expectation-rule", last, 1e-5);
        let spread = max_of(lim.terms.iter().map(|t| (t.scaled - lim.predicted_constant).abs()));
        report.check("isolated-rate", "expectation-rule", spread, 1e-6);
        report.check(
            "isolated-purification",
            "expectation-rule",
            max_of(lim.terms.iter().map(|t| t.purification_residual)),
            tol.tol_recon,
        );
        report.put("isolated", &lim)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn run_default(kind: ScenarioKind, state: StateSource, seed: u64) -> Report {
        run(&Scenario::new(kind, state, seed), &Tolerances::default()).unwrap()
    }

    #[test]
    fn schmidt_on_bell() {
        let r = run_default(ScenarioKind::Schmidt, StateSource::Inline(BipartiteState::bell()), 0);
        assert!(r.passed, "{:?}", r.checks);
        let c: Vec<f64> = serde_json::from_value(r.data["coefficients"].clone()).unwrap();
        assert!(c.iter().all(|x| (x - 0.5f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn born_pipeline_two_thirds() {
        let spec = RandomSpec { spectrum: Some(vec![2.0 / 3.0, 1.0 / 3.0]), ..RandomSpec::new(2, 2) };
        let r = run_default(ScenarioKind::BornPipeline, StateSource::Random(spec), 42);
        assert!(r.passed, "{:?}", r.checks);
        let v = &r.data["per_vector"];
        assert_eq!(v[0]["exact_rational"], "2/3");
        assert_eq!(v[1]["exact_rational"], "1/3");
    }

    #[test]
    fn irrational_spectrum_fails_honestly() {
        let spec = RandomSpec::new(2, 2);
        let r = run_default(ScenarioKind::BornPipeline, StateSource::Random(spec), 5);
        assert!(!r.passed);
        assert_eq!(r.exit_code(), EXIT_CERTIFICATION);
    }

    #[test]
    fn every_kind_passes_on_a_degenerate_state() {
        let spec = RandomSpec { spectrum: Some(vec![0.25, 0.25, 0.5]), denominator: None, ..RandomSpec::new(3, 4) };
        for kind in [
            ScenarioKind::Schmidt,
            ScenarioKind::Twins,
            ScenarioKind::Group,
            ScenarioKind::BornPipeline,
            ScenarioKind::ClosestState,
            ScenarioKind::Continuity,
        ] {
            let mut s = Scenario::new(kind, StateSource::Random(spec.clone()), 7);
            s.params.samples = Some(200);
            let r = run(&s, &Tolerances::default()).unwrap();
            assert!(r.passed, "{kind:?}: {:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let s = Scenario::new(ScenarioKind::Group, StateSource::Random(RandomSpec::new(3, 3)), 7);
        let a = serde_json::to_string(&run(&s, &Tolerances::default()).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&s, &Tolerances::default()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
