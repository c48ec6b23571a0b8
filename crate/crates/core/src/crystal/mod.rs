//! One- and two-chain ion crystals: trap description, equilibrium, Hessian,
//! normal modes and zig-zag stability.
//!
//! Internally everything is dimensionless: lengths in units of the scale
//! length `l` (`l³ = q²/(4πε₀ m ω_z²)`), energies in `m ω_z² l²` and
//! squared frequencies in `ω_z²`. SI values appear only at the accessors.
//!
//! Matrices over ion coordinates use direction-major ordering: index
//! `axis * n_ions + ion`, with axes `x` (in-plane, along the chain
//! separation), `y` (out of plane) and `z` (trap axis). Ions are ordered
//! chain-major and, within a chain, by increasing `z`.

mod equilibrium;
mod modes;
mod potential;
mod stability;

pub use equilibrium::{linear_chain_positions, solve_equilibrium, Equilibrium};
pub use modes::{hessian, normal_modes, CrystalState, Mode, NormalModes};
pub use potential::{potential_energy, Potential};
pub use stability::{
    critical_anisotropy, linear_chain_blocks, stability_report, zigzag_frequency,
    CriticalAnisotropy, LinearChainBlocks, ModeFrequency, StabilityReport,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{ATOMIC_MASS_UNIT, COULOMB_CONSTANT, ELECTRON_MASS, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};

/// Cartesian axis of the trap frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
    pub lande_g: f64,
    pub label: String,
}

impl IonSpecies {
    /// Singly charged ⁴⁰Ca⁺ with `g_J = 2`.
    pub fn calcium40() -> Self {
        IonSpecies {
            mass: 39.962_590_863 * ATOMIC_MASS_UNIT - ELECTRON_MASS,
            charge: ELEMENTARY_CHARGE,
            lande_g: 2.0,
            label: "40Ca+".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("ion mass must be positive, got {}", self.mass)));
        }
        if !(self.charge > 0.0 && self.charge.is_finite()) {
            return Err(Error::InvalidParameter(format!("ion charge must be positive, got {}", self.charge)));
        }
        if !self.lande_g.is_finite() {
            return Err(Error::InvalidParameter("Landé factor must be finite".into()));
        }
        Ok(())
    }
}

/// Arrangement of the ion chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chains", rename_all = "snake_case")]
pub enum ChainLayout {
    Single,
    /// Two parallel chains; the second trap center sits at `x = separation`
    /// and is displaced along the axis by `axial_shift` (both in m).
    Double { separation: f64, axial_shift: f64 },
}

impl ChainLayout {
    pub fn chain_count(&self) -> usize {
        match self {
            ChainLayout::Single => 1,
            ChainLayout::Double { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    pub species: IonSpecies,
    /// Axial angular frequency ω_z (rad/s).
    pub omega_z: f64,
    /// α_x = ω_z²/ω_x²
    pub alpha_x: f64,
    /// α_y = ω_z²/ω_y²
    pub alpha_y: f64,
    pub ions_per_chain: usize,
    pub layout: ChainLayout,
}

/// α_i = ω_z²/ω_i².
pub fn anisotropy(omega_z: f64, omega_radial: f64) -> f64 {
    (omega_z / omega_radial).powi(2)
}

/// Radial angular frequency for a given anisotropy.
pub fn radial_frequency(omega_z: f64, alpha: f64) -> f64 {
    omega_z / alpha.sqrt()
}

impl TrapSpec {
    pub fn single_chain(species: IonSpecies, omega_z: f64, alpha_x: f64, alpha_y: f64, ions: usize) -> Self {
        TrapSpec {
            species,
            omega_z,
            alpha_x,
            alpha_y,
            ions_per_chain: ions,
            layout: ChainLayout::Single,
        }
    }

    pub fn double_chain(
        species: IonSpecies,
        omega_z: f64,
        alpha_x: f64,
        alpha_y: f64,
        ions_per_chain: usize,
        separation: f64,
        axial_shift: f64,
    ) -> Self {
        TrapSpec {
            species,
            omega_z,
            alpha_x,
            alpha_y,
            ions_per_chain,
            layout: ChainLayout::Double {
                separation,
                axial_shift,
            },
        }
    }

    /// Builds a trap from ordinary frequencies (Hz) in all three directions.
    pub fn from_frequencies_hz(species: IonSpecies, nu_x: f64, nu_y: f64, nu_z: f64, ions: usize) -> Self {
        let omega_z = 2.0 * PI * nu_z;
        TrapSpec::single_chain(species, omega_z, anisotropy(nu_z, nu_x), anisotropy(nu_z, nu_y), ions)
    }

    pub fn with_layout(mut self, layout: ChainLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn chain_count(&self) -> usize {
        self.layout.chain_count()
    }

    pub fn total_ions(&self) -> usize {
        self.ions_per_chain * self.chain_count()
    }

    /// `[α_x, α_y, α_z = 1]`
    pub fn alphas(&self) -> [f64; 3] {
        [self.alpha_x, self.alpha_y, 1.0]
    }

    /// l = (q²/(4πε₀ m ω_z²))^{1/3} in m.
    pub fn scale_length(&self) -> f64 {
        let q = self.species.charge;
        (COULOMB_CONSTANT * q * q / (self.species.mass * self.omega_z * self.omega_z)).cbrt()
    }

    pub fn omega_x(&self) -> f64 {
        radial_frequency(self.omega_z, self.alpha_x)
    }

    pub fn omega_y(&self) -> f64 {
        radial_frequency(self.omega_z, self.alpha_y)
    }

    /// (chain, ion-within-chain) for a global ion index.
    pub fn ion_label(&self, index: usize) -> (usize, usize) {
        (index / self.ions_per_chain, index % self.ions_per_chain)
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if !(self.omega_z > 0.0 && self.omega_z.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_z must be positive, got {}", self.omega_z)));
        }
        for (name, a) in [("alpha_x", self.alpha_x), ("alpha_y", self.alpha_y)] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {a}")));
            }
        }
        if self.ions_per_chain == 0 {
            return Err(Error::InvalidParameter("ions_per_chain must be at least 1".into()));
        }
        if let ChainLayout::Double {
            separation,
            axial_shift,
        } = self.layout
        {
            if !(separation > 0.0 && separation.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "chain separation must be positive, got {separation}"
                )));
            }
            if !axial_shift.is_finite() {
                return Err(Error::InvalidParameter("axial shift must be finite".into()));
            }
        }
        Ok(())
    }
}
