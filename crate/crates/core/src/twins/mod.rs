//! Twin unitaries and twin Hermitians: operators on opposite factors that act
//! equally on a bipartite state.

mod construct;
mod hermitian;
mod pair;

pub use construct::{first_theorem_residual, sample_twin, swap_twin, twin_of, two_vector_rotation};
pub use hermitian::{
    hermitian_to_unitary, is_mixed_twin, twin_hermitian_of, unitary_to_hermitian, HermitianTwin,
    MixedTwinCheck,
};
pub use pair::{compose, inverse, is_twin_pair, TwinCheck, TwinPair};
