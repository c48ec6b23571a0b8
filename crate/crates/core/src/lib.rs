//! Design of magnetic-gradient induced spin-spin couplings in one- and
//! two-chain trapped-ion crystals.
//!
//! - [`crystal`]: equilibrium, Hessian, normal modes and zig-zag stability
//! - [`magnetics`]: Biot-Savart fields of chip conductors, Mathieu secular frequencies
//! - [`coupling`]: coupling matrices J and driven mode response
//! - [`spin`]: exact Ising ground states and frustration diagnostics

pub mod constants;
pub mod coupling;
pub mod crystal;
pub mod error;
pub mod magnetics;
pub mod spin;

pub use coupling::{CouplingMatrix, GradientSpec};
pub use crystal::{Axis, ChainLayout, CrystalState, IonSpecies, StabilityReport, TrapSpec};
pub use error::{Error, Result};
pub use magnetics::{CircuitGeometry, MathieuMatrices};
pub use spin::{GroundState, SpinConfiguration};
