use serde::{Deserialize, Serialize};

use super::{Event, Fraction, ProbabilityReport, RationalSpectrum, Route};
use crate::error::{Error, Result};
use crate::hilbert::{
    complete_orthonormal_basis, hs_distance, partial_trace, reduced_density,
    unitary_residual, BipartiteState, CMatrix, CVector, Side, C64,
};
use crate::json;
use crate::schmidt::{canonical_schmidt, SchmidtDecomposition};
use crate::tolerance::Tolerances;

/// Ancilla dimensions: `H2'` must hold both the original second factor and
/// `M` branch labels; `H3` holds `M` labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinegrainDims {
    pub d2p: usize,
    pub d3: usize,
}

impl FinegrainDims {
    pub fn minimal(psi: &BipartiteState, spec: &RationalSpectrum) -> Self {
        let m = spec.denominator as usize;
        Self { d2p: psi.d2().max(m), d3: m }
    }

    fn check(&self, psi: &BipartiteState, spec: &RationalSpectrum) -> Result<()> {
        let m = spec.denominator as usize;
        let needed = psi.d2().max(m);
        if self.d2p < needed {
            return Err(Error::DimensionShortfall { needed, available: self.d2p });
        }
        if self.d3 < m {
            return Err(Error::DimensionShortfall { needed: m, available: self.d3 });
        }
        Ok(())
    }
}

/// A vector in `H1 (x) H2' (x) H3`; the amplitude of `|a>|b>|c>` sits at
/// `(a * d2p + b) * d3 + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripartiteState {
    pub d1: usize,
    pub dims: FinegrainDims,
    #[serde(with = "json::vector")]
    pub amplitudes: CVector,
    pub source: BipartiteState,
    pub spectrum: RationalSpectrum,
}

impl TripartiteState {
    /// The `(1+2) | 3` cut.
    pub fn cut_12_3(&self, tol: &Tolerances) -> Result<BipartiteState> {
        BipartiteState::new(self.d1 * self.dims.d2p, self.dims.d3, self.amplitudes.clone(), tol)
    }

    /// The `1 | (2+3)` cut.
    pub fn cut_1_23(&self, tol: &Tolerances) -> Result<BipartiteState> {
        BipartiteState::new(self.d1, self.dims.d2p * self.dims.d3, self.amplitudes.clone(), tol)
    }
}

/// Term `i` of the Schmidt decomposition belongs to block `owner[i]`.
fn block_owners(s: &SchmidtDecomposition, spec: &RationalSpectrum) -> Result<Vec<usize>> {
    let total: usize = spec.multiplicities.iter().sum();
    if total != s.rank() {
        return Err(Error::SpectrumMismatch(format!(
            "spectrum covers {total} eigenvectors, state has Schmidt rank {}",
            s.rank()
        )));
    }
    let owners: Vec<usize> = spec
        .multiplicities
        .iter()
        .enumerate()
        .flat_map(|(j, &d)| std::iter::repeat_n(j, d))
        .collect();
    for (i, &j) in owners.iter().enumerate() {
        let r = s.coefficients[i].powi(2);
        if (r - spec.values[j]).abs() > 1e-8 {
            return Err(Error::SpectrumMismatch(format!(
                "Schmidt weight {r} does not match block value {}",
                spec.values[j]
            )));
        }
    }
    Ok(owners)
}

/// First label index of each term: labels enumerate `(j, k_j, l_j)`
/// lexicographically.
fn label_offsets(owners: &[usize], spec: &RationalSpectrum) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(owners.len());
    let mut next = 0;
    for &j in owners {
        offsets.push(next);
        next += spec.numerators[j] as usize;
    }
    offsets
}

fn require_exact(spec: &RationalSpectrum) -> Result<()> {
    if !spec.exact {
        return Err(Error::InexactSpectrum { error: spec.error });
    }
    Ok(())
}

/// `sum_{j,k,l} M^{-1/2} |j,k>_1 |j,k,l>_2' |j,k,l>_3`, with `|j,k>_1` the
/// canonical Schmidt vectors of `psi`.
pub fn finegrain_state(
    psi: &BipartiteState,
    spec: &RationalSpectrum,
    dims: Option<FinegrainDims>,
    tol: &Tolerances,
) -> Result<TripartiteState> {
    require_exact(spec)?;
    let dims = dims.unwrap_or_else(|| FinegrainDims::minimal(psi, spec));
    dims.check(psi, spec)?;
    let s = canonical_schmidt(psi, tol)?;
    let owners = block_owners(&s, spec)?;
    let offsets = label_offsets(&owners, spec);
    let d1 = psi.d1();
    let amp = C64::new((spec.denominator as f64).recip().sqrt(), 0.0);
    let mut amplitudes = CVector::zeros(d1 * dims.d2p * dims.d3);
    for (i, &j) in owners.iter().enumerate() {
        let b1 = s.vector1(i);
        for l in 0..spec.numerators[j] as usize {
            let label = offsets[i] + l;
            for a in 0..d1 {
                amplitudes[(a * dims.d2p + label) * dims.d3 + label] += b1[a] * amp;
            }
        }
    }
    let out = TripartiteState { d1, dims, amplitudes, source: psi.clone(), spectrum: spec.clone() };
    let rho1 = partial_trace(&outer_of(&out.amplitudes), d1, dims.d2p * dims.d3, Side::One)?;
    let residual = hs_distance(&rho1, reduced_density(psi, Side::One).matrix())?;
    if residual >= tol.tol_recon {
        return Err(Error::CertificationFailed { residual, tolerance: tol.tol_recon });
    }
    Ok(out)
}

fn outer_of(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

#[derive(Debug, Clone, Serialize)]
pub struct FinegrainUnitary {
    #[serde(with = "json::matrix")]
    pub u23: CMatrix,
    pub dims: FinegrainDims,
    pub unitary_residual: f64,
    /// `||(1 (x) U23)(psi (x) phi0) - Phi||`
    pub state_residual: f64,
    /// `||rho_1 after - rho_1 before||_HS`
    pub rho1_residual: f64,
}

impl FinegrainUnitary {
    /// `(1 (x) U23)(psi (x) |0>_3)` as a vector on `H1 (x) H2' (x) H3`.
    pub fn apply(&self, psi: &BipartiteState) -> CVector {
        let (d1, d2) = psi.dims();
        let n = self.dims.d2p * self.dims.d3;
        let mut embedded = CMatrix::zeros(d1, n);
        for k in 0..d1 {
            for l in 0..d2 {
                embedded[(k, l * self.dims.d3)] = psi.amplitude(k, l);
            }
        }
        let out = embedded * self.u23.transpose();
        CVector::from_fn(d1 * n, |idx, _| out[(idx / n, idx % n)])
    }
}

/// A unitary on `H2' (x) H3` sending each Schmidt partner `|j,k>_2 |0>_3`
/// to `sum_l m_j^{-1/2} |j,k,l>_2' |j,k,l>_3`. Both vector families are
/// completed to bases by Gram-Schmidt over computational vectors.
pub fn finegrain_unitary(
    psi: &BipartiteState,
    spec: &RationalSpectrum,
    dims: Option<FinegrainDims>,
    tol: &Tolerances,
) -> Result<FinegrainUnitary> {
    require_exact(spec)?;
    let dims = dims.unwrap_or_else(|| FinegrainDims::minimal(psi, spec));
    dims.check(psi, spec)?;
    let s = canonical_schmidt(psi, tol)?;
    let owners = block_owners(&s, spec)?;
    let offsets = label_offsets(&owners, spec);
    let n = dims.d2p * dims.d3;
    let rank = owners.len();

    let mut pre = CMatrix::zeros(n, rank);
    let mut img = CMatrix::zeros(n, rank);
    for (i, &j) in owners.iter().enumerate() {
        let b2 = s.vector2(i);
        for (l, z) in b2.iter().enumerate() {
            pre[(l * dims.d3, i)] = *z;
        }
        let m = spec.numerators[j] as usize;
        let w = C64::new((m as f64).recip().sqrt(), 0.0);
        for l in 0..m {
            let label = offsets[i] + l;
            img[(label * dims.d3 + label, i)] = w;
        }
    }
    let u23 = complete_orthonormal_basis(&img) * complete_orthonormal_basis(&pre).adjoint();

    let mut out = FinegrainUnitary {
        unitary_residual: unitary_residual(&u23),
        u23,
        dims,
        state_residual: 0.0,
        rho1_residual: 0.0,
    };
    let after = out.apply(psi);
    let target = finegrain_state(psi, spec, Some(dims), tol)?;
    out.state_residual = (&after - &target.amplitudes).norm();
    let rho1_after = partial_trace(&outer_of(&after), psi.d1(), n, Side::One)?;
    out.rho1_residual = hs_distance(&rho1_after, reduced_density(psi, Side::One).matrix())?;
    if out.state_residual >= tol.tol_recon || out.unitary_residual >= tol.tol_op {
        return Err(Error::CertificationFailed {
            residual: out.state_residual.max(out.unitary_residual),
            tolerance: tol.tol_recon,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingReport {
    pub denominator: u64,
    /// Schmidt coefficients of the `(1+2) | 3` cut.
    pub coefficients: Vec<f64>,
    /// `max_i |c_i - M^{-1/2}|`
    pub coefficient_residual: f64,
    /// `p(Q1^j (x) 1)` per block.
    pub blocks: Vec<ProbabilityReport>,
    /// Probability of one eigenvector in each block.
    pub per_vector: Vec<ProbabilityReport>,
}

/// Counts equal-amplitude branches of the fine-grained state.
///
/// The `(1+2) | 3` Schmidt coefficients must all equal `M^{-1/2}`. The
/// number of branches inside `R(Q1^j) (x) H2'` is then `tr((Q1^j (x) 1) P)`
/// with `P` the projector onto the `(1+2)` support, and each branch carries
/// probability `1/M`.
pub fn counting_probabilities(phi: &TripartiteState, tol: &Tolerances) -> Result<CountingReport> {
    let big_m = phi.spectrum.denominator;
    let expected = (big_m as f64).recip().sqrt();
    let s = canonical_schmidt(&phi.cut_12_3(tol)?, tol)?;
    let coefficient_residual = if s.rank() == big_m as usize {
        s.coefficients.iter().map(|c| (c - expected).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    if coefficient_residual >= tol.tol_op {
        return Err(Error::CertificationFailed { residual: coefficient_residual, tolerance: tol.tol_op });
    }

    let (d1, d2p) = (phi.d1, phi.dims.d2p);
    // tr((X (x) 1) P) = sum_i tr(X V_i V_i^dagger), V_i the branch reshaped d1 x d2p.
    let branch_weight = |x: &CMatrix| -> f64 {
        (0..s.rank())
            .map(|i| {
                let v = s.vector1(i);
                let vm = CMatrix::from_fn(d1, d2p, |a, b| v[a * d2p + b]);
                crate::hilbert::trace(&(x * &vm * vm.adjoint())).re
            })
            .sum()
    };
    let count = |x: &CMatrix| -> (u64, f64) {
        let w = branch_weight(x);
        (w.round().max(0.0) as u64, (w - w.round()).abs())
    };

    let spectral = reduced_density(&phi.source, Side::One).spectral(tol);
    if spectral.blocks.len() != phi.spectrum.len() {
        return Err(Error::SpectrumMismatch("block structure differs from the spectrum".into()));
    }
    let mut blocks = Vec::new();
    let mut per_vector = Vec::new();
    for block in &spectral.blocks {
        let (n, res) = count(&block.projector);
        let f = Fraction::new(n, big_m);
        blocks.push(
            ProbabilityReport::new(Event::Projector { matrix: block.projector.clone() }, f.value(), Route::Counting)
                .with_fraction(f)
                .with_residual("count", res)
                .with_residual("equal-coefficients", coefficient_residual),
        );
        let v = block.basis.column(0).into_owned();
        let (n, res) = count(&(&v * v.adjoint()));
        let f = Fraction::new(n, big_m);
        per_vector.push(
            ProbabilityReport::new(Event::Vector { vector: v }, f.value(), Route::Counting)
                .with_fraction(f)
                .with_residual("count", res)
                .with_residual("equal-coefficients", coefficient_residual),
        );
    }
    Ok(CountingReport { denominator: big_m, coefficients: s.coefficients, coefficient_residual, blocks, per_vector })
}
