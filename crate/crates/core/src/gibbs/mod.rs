//! Finite-volume Gibbs measures on the Cayley tree.

pub mod compat;
pub mod measure;
pub mod transition;
pub mod volume;

pub use compat::{
    check_compatibility, check_compatibility_with, resolve_field, verify_compatibility,
    CompatReport, CompatStatus, FieldChoice,
};
pub use measure::{
    hamiltonian, norm_profile, partition_and_measures, partition_function, weight,
    BoundaryFieldAssignment, MeasureTable, NormProfile,
};
pub use transition::{marginal_path_norms, transition_matrix, InvariantMethod, TransitionMatrix};
pub use volume::{build_volume, CayleyVolume, Configuration, DEFAULT_CAP};
