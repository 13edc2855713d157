//! Almost-iid states: preferred bases, witnesses and their verification.

pub mod basis;
pub mod symmetrize;
pub mod verify;
pub mod witness;

pub use basis::{defect_count, defect_count_chain, PreferredBasis};
pub use symmetrize::{perm_symmetrize, perm_symmetrize_defects};
pub use verify::{
    beta_matrix, pinching_check, strict_definition_gap, verify_membership, MembershipReport,
    PinchingReport,
};
pub use witness::{
    construct_mixture_with_defects, extend_witness, iid_witness, marginal_witness, singlet_witness,
    tensor_power_witness, trace_visible_tail, Extension, PlacementTerm, Witness, WitnessKind,
};

/// Largest state-vector dimension handled when a structured extension is
/// expanded into explicit vectors.
pub const MAX_VECTOR_DIM: usize = 1 << 16;

pub fn build_preferred_basis(
    theta: &crate::linalg::Vector,
    n: usize,
    r: usize,
) -> crate::Result<PreferredBasis> {
    PreferredBasis::build(theta, n, r)
}
