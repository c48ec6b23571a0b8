use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::equilibrium::linear_chain_positions;
use super::modes::CrystalState;
use super::{Axis, ChainLayout, TrapSpec};
use crate::error::{Error, Result};

/// Axial Hessian `A` of a linear chain and the positions it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearChainBlocks {
    /// Dimensionless axial positions.
    pub positions: Vec<f64>,
    pub a: DMatrix<f64>,
}

impl LinearChainBlocks {
    /// `B^i = (1/α_i + 1/2)·1 − A/2`
    pub fn b(&self, alpha: f64) -> DMatrix<f64> {
        let n = self.a.nrows();
        DMatrix::identity(n, n) * (1.0 / alpha + 0.5) - &self.a * 0.5
    }

    pub fn axial_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.a.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

/// Closed-form blocks of a single linear chain of `n` ions:
/// `A_nn = 1 + 2 Σ_{p≠n} 1/|u_n − u_p|³`, `A_nm = −2/|u_n − u_m|³`.
pub fn linear_chain_blocks(n: usize) -> Result<LinearChainBlocks> {
    let u = linear_chain_positions(n)?;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, i)] += c;
                a[(i, j)] = -c;
            }
        }
    }
    Ok(LinearChainBlocks { positions: u, a })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalAnisotropy {
    pub ions: usize,
    /// `2/(ν̄² − 1)` with ν̄ the largest axial frequency in units of ω_z.
    /// Infinite for a single ion.
    pub exact: f64,
    /// `2.53 N^{-1.73}`
    pub approx: f64,
    /// ν̄ in units of ω_z.
    pub nu_max: f64,
}

/// Anisotropy at which the linear chain of `n` ions becomes unstable.
///
/// For `n = 2` the value is 1 (the pair turns perpendicular to the axis);
/// for `n = 1` there is no transition and the exact value is `+∞`.
pub fn critical_anisotropy(n: usize) -> Result<CriticalAnisotropy> {
    if n == 0 {
        return Err(Error::InvalidParameter("critical anisotropy needs N ≥ 1".into()));
    }
    let blocks = linear_chain_blocks(n)?;
    let lmax = blocks.axial_eigenvalues()[0];
    let exact = if n == 1 { f64::INFINITY } else { 2.0 / (lmax - 1.0) };
    Ok(CriticalAnisotropy {
        ions: n,
        exact,
        approx: 2.53 * (n as f64).powf(-1.73),
        nu_max: lmax.sqrt(),
    })
}

/// A mode frequency that may be imaginary (unstable direction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFrequency {
    /// `√|λ| ω_z / 2π`
    pub hz: f64,
    pub imaginary: bool,
}

impl ModeFrequency {
    fn from_eigenvalue(lambda: f64, omega_z: f64) -> Self {
        ModeFrequency {
            hz: lambda.abs().sqrt() * omega_z / (2.0 * PI),
            imaginary: lambda < 0.0,
        }
    }
}

/// Lowest transverse (x) mode of a single linear chain.
pub fn zigzag_frequency(trap: &TrapSpec) -> Result<ModeFrequency> {
    if trap.layout != ChainLayout::Single {
        return Err(Error::InvalidParameter(
            "zig-zag frequency of a linear chain needs a single-chain trap".into(),
        ));
    }
    trap.validate()?;
    let blocks = linear_chain_blocks(trap.ions_per_chain)?;
    let lmax = blocks.axial_eigenvalues()[0];
    Ok(ModeFrequency::from_eigenvalue(1.0 / trap.alpha_x + 0.5 - 0.5 * lmax, trap.omega_z))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Single-chain critical anisotropy for `ions_per_chain`.
    pub alpha_crit_exact: f64,
    pub alpha_crit_approx: f64,
    /// Lowest x-polarized mode.
    pub zigzag_frequency: ModeFrequency,
    /// All transverse eigenvalues positive.
    pub is_linear_stable: bool,
}

impl StabilityReport {
    pub fn nu_zz(&self) -> f64 {
        self.zigzag_frequency.hz
    }
}

/// Structural stability of the configuration described by `trap`.
///
/// For two chains the full Hessian at the bent equilibrium is used and the
/// zig-zag mode is the lowest mode polarized mostly along x.
pub fn stability_report(trap: &TrapSpec) -> Result<StabilityReport> {
    let crit = critical_anisotropy(trap.ions_per_chain)?;
    match trap.layout {
        ChainLayout::Single => {
            trap.validate()?;
            let blocks = linear_chain_blocks(trap.ions_per_chain)?;
            let lmax = blocks.axial_eigenvalues()[0];
            let lx = 1.0 / trap.alpha_x + 0.5 - 0.5 * lmax;
            let ly = 1.0 / trap.alpha_y + 0.5 - 0.5 * lmax;
            Ok(StabilityReport {
                alpha_crit_exact: crit.exact,
                alpha_crit_approx: crit.approx,
                zigzag_frequency: ModeFrequency::from_eigenvalue(lx, trap.omega_z),
                is_linear_stable: lx > 0.0 && ly > 0.0,
            })
        }
        ChainLayout::Double { .. } => {
            let state = CrystalState::new(trap)?;
            let zz = state
                .modes
                .modes
                .iter()
                .rev()
                .find(|m| m.axis_weight(Axis::X) > 0.5)
                .ok_or_else(|| Error::InvalidParameter("no x-polarized mode found".into()))?;
            let transverse_ok = state
                .modes
                .modes
                .iter()
                .filter(|m| m.axis_weight(Axis::Z) < 0.5)
                .all(|m| m.eigenvalue > 0.0);
            Ok(StabilityReport {
                alpha_crit_exact: crit.exact,
                alpha_crit_approx: crit.approx,
                zigzag_frequency: ModeFrequency::from_eigenvalue(zz.eigenvalue, trap.omega_z),
                is_linear_stable: transverse_ok && !state.is_saddle,
            })
        }
    }
}
