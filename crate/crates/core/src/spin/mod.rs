//! Exact Ising ground states of a coupling matrix and frustration
//! diagnostics for two-chain crystals.

mod frustration;
mod ising;
mod order;

pub use frustration::{frustration_report, FrustrationReport, Triple};
pub use ising::{
    ground_state, ground_state_with_cap, ising_energy, ising_energy_matrix, unsatisfied_fraction, GroundState,
    SpinConfiguration, DEFAULT_STATE_CAP, DEGENERACY_TOLERANCE, MAX_EXHAUSTIVE_SPINS,
};
pub use order::{classify_order, SpinOrder};
