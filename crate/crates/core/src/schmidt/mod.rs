//! Schmidt decompositions, the antiunitary correlation operator and the
//! correlated subsystem picture.

mod correlation;
mod decomposition;
mod picture;

pub use correlation::{
    correlation_image_by_expansion, correlation_operator, random_schmidt_state,
    strong_schmidt_reconstruct, uniqueness_certificate, CorrelationOperator,
    UniquenessCertificate,
};
pub use decomposition::{
    canonical_schmidt, coefficient_overlap, expand_in_basis, SchmidtDecomposition,
};
pub use picture::{subsystem_picture, PictureBlock, PictureResiduals, SubsystemPicture};
