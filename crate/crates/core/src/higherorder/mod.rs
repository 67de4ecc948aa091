//! Higher-order quantum operations on types `⊗_i [H_i, H_i]`: supermaps,
//! states as non-signalling channels, discarding effects and process matrices.

mod deterministic;
mod effects;
mod nonsignalling;
mod types;

pub use deterministic::{
    closure_defect, deterministic_defect, is_deterministic_supermap, DEFAULT_ANCILLAS,
};
pub use effects::{
    apply_effect, is_deterministic_state, is_process_matrix, normalisation_defect,
    prep_discard_state, random_nonsignalling_state, reduced_state, sample_discard,
    sequential_comb, state_defect, verify_no_superluminal, DiscardEffect, DiscardEffectJson,
    EffectFamily,
};
pub use nonsignalling::{
    decompose_channel, decompose_nonsignalling, is_nonsignalling, local_basis_size,
    controlled_not, local_cptp_basis, nonsignalling_affine_basis, nonsignalling_defect,
    random_nonsignalling_channel, reconstruction_residual, trace_preservation_defect,
    NSChannel, Partition, ProductBasis, DECOMPOSITION_TOL, MAX_BASIS_CHOI_DIM,
};
pub use types::{
    bottom_label, random_comb, top_label, HigherOrderMap, HigherOrderMapJson, HigherOrderType,
};
pub(crate) use types::{max_entangled, IN, OUT};
pub use crate::tensorcore::link_product;
