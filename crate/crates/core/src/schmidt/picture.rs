use serde::Serialize;

use super::correlation::{correlation_operator, CorrelationOperator};
use crate::error::{Error, Result};
use crate::hilbert::{
    hs_distance, reduced_density, BipartiteState, CMatrix, DensityOperator, Side,
};
use crate::json;
use crate::tolerance::Tolerances;

/// A pair of matched positive-eigenvalue eigen-subspaces.
#[derive(Debug, Clone, Serialize)]
pub struct PictureBlock {
    pub value: f64,
    pub multiplicity: usize,
    /// Orthonormal eigenvectors of `rho_1` spanning the block.
    #[serde(with = "json::matrix")]
    pub basis1: CMatrix,
    #[serde(with = "json::matrix")]
    pub q1: CMatrix,
    /// `U_a Q1^j U_a^{-1}`
    #[serde(with = "json::matrix")]
    pub q2: CMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct PictureResiduals {
    /// `||rho_2 - U_a rho_1 U_a^{-1}||_HS`
    pub image_of_rho1: f64,
    /// Largest `||Q2^j - P_2^j||_HS` against the independent spectral
    /// projectors of `rho_2`.
    pub block_images: f64,
    /// `||U_a Q1 U_a^{-1} - Q2||_HS` for the full supports.
    pub support_image: f64,
}

/// Both reduced densities decomposed into matched eigen-subspaces.
#[derive(Debug, Clone, Serialize)]
pub struct SubsystemPicture {
    #[serde(skip)]
    state: BipartiteState,
    #[serde(skip)]
    rho1: DensityOperator,
    #[serde(skip)]
    rho2: DensityOperator,
    pub correlation: CorrelationOperator,
    pub blocks: Vec<PictureBlock>,
    #[serde(with = "json::matrix")]
    pub null1: CMatrix,
    #[serde(with = "json::matrix")]
    pub null2: CMatrix,
    pub residuals: PictureResiduals,
}

impl SubsystemPicture {
    pub fn state(&self) -> &BipartiteState {
        &self.state
    }

    pub fn rho(&self, side: Side) -> &DensityOperator {
        match side {
            Side::One => &self.rho1,
            Side::Two => &self.rho2,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.state.dims()
    }

    pub fn dim(&self, side: Side) -> usize {
        match side {
            Side::One => self.state.d1(),
            Side::Two => self.state.d2(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.value).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity).collect()
    }

    pub fn block_projector(&self, j: usize, side: Side) -> &CMatrix {
        match side {
            Side::One => &self.blocks[j].q1,
            Side::Two => &self.blocks[j].q2,
        }
    }

    pub fn null_projector(&self, side: Side) -> &CMatrix {
        match side {
            Side::One => &self.null1,
            Side::Two => &self.null2,
        }
    }

    pub fn support_projector(&self, side: Side) -> CMatrix {
        let d = self.dim(side);
        CMatrix::identity(d, d) - self.null_projector(side)
    }

    /// Index of the block whose first-factor subspace contains `v`.
    pub fn block_containing(&self, v: &crate::hilbert::CVector, tol: f64) -> Option<usize> {
        let norm = v.norm();
        if norm == 0.0 {
            return None;
        }
        self.blocks.iter().position(|b| (v - &b.q1 * v).norm() < tol * norm.max(1.0))
    }
}

pub fn subsystem_picture(psi: &BipartiteState, tol: &Tolerances) -> Result<SubsystemPicture> {
    let correlation = correlation_operator(psi, tol)?;
    let rho1 = reduced_density(psi, Side::One);
    let rho2 = reduced_density(psi, Side::Two);
    let spec1 = rho1.spectral(tol);
    let spec2 = rho2.spectral(tol);

    let image = correlation.conjugate(rho1.matrix());
    let image_of_rho1 = hs_distance(&image, rho2.matrix())?;
    if image_of_rho1 >= tol.tol_recon {
        return Err(Error::CertificationFailed { residual: image_of_rho1, tolerance: tol.tol_recon });
    }

    let blocks: Vec<PictureBlock> = spec1
        .blocks
        .iter()
        .map(|b| PictureBlock {
            value: b.value,
            multiplicity: b.multiplicity,
            basis1: b.basis.clone(),
            q1: b.projector.clone(),
            q2: correlation.conjugate(&b.projector),
        })
        .collect();

    let mut block_images: f64 = 0.0;
    if spec2.blocks.len() == blocks.len() {
        for (a, b) in blocks.iter().zip(&spec2.blocks) {
            block_images = block_images.max(hs_distance(&a.q2, &b.projector)?);
        }
    } else {
        block_images = f64::INFINITY;
    }
    let support_image =
        hs_distance(&correlation.conjugate(correlation.domain_projector()), correlation.codomain_projector())?;

    let (d1, d2) = psi.dims();
    let null1 = CMatrix::identity(d1, d1) - correlation.domain_projector();
    let null2 = CMatrix::identity(d2, d2) - correlation.codomain_projector();
    Ok(SubsystemPicture {
        state: psi.clone(),
        rho1,
        rho2,
        correlation,
        blocks,
        null1,
        null2,
        residuals: PictureResiduals { image_of_rho1, block_images, support_image },
    })
}
