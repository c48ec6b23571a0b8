//! Spin-spin couplings induced by a static magnetic gradient, and the
//! classical response of the normal modes to an alternating gradient.
//!
//! J is in rad/s. With `E/ħ = −½ Σ_{n<m} J_nm s_n s_m`, positive entries
//! favor parallel spins.

mod driven;
mod matrix;

pub use driven::{driven_mode_response, Drive, DrivenResponse, ModeResponse};
pub use matrix::{
    coupling_axial, coupling_matrix_general, coupling_matrix_with, coupling_prefactor, coupling_transverse,
    coupling_transverse_with, coupling_two_chain, guarded_inverse, zeeman_gradient, BlockStats, BlockSummary,
    CouplingMatrix, CouplingOptions, GradientSpec, SignPattern, DEFAULT_CONDITION_LIMIT, SIGN_CONVENTION,
};
