use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::equilibrium::{solve_equilibrium, Equilibrium, EQUILIBRIUM_TOLERANCE};
use super::potential::Potential;
use super::{Axis, TrapSpec};
use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`normal_modes`].
const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Hessian of the potential at an equilibrium, dimensionless
/// (multiply by `m ω_z²` for SI).
pub fn hessian(eq: &Equilibrium) -> Result<DMatrix<f64>> {
    let potential = Potential::new(&eq.trap);
    let g = potential.gradient(&eq.positions)?;
    let residual = g.iter().flat_map(|v| v.iter()).fold(0.0f64, |a, &b| a.max(b.abs()));
    if residual > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotEquilibrium { residual });
    }
    potential.hessian(&eq.positions)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    /// Eigenvalue of the dimensionless Hessian (units of ω_z²).
    pub eigenvalue: f64,
    /// `√|λ| ω_z / 2π` in Hz.
    pub frequency_hz: f64,
    /// Negative eigenvalue: the configuration is unstable along this mode.
    pub imaginary: bool,
    /// Unit eigenvector, direction-major.
    pub vector: DVector<f64>,
}

impl Mode {
    /// Frequency in units of ω_z (negative for imaginary modes).
    pub fn frequency_reduced(&self) -> f64 {
        let f = self.eigenvalue.abs().sqrt();
        if self.imaginary {
            -f
        } else {
            f
        }
    }

    /// Weight `Σ_n v_{axis,n}²` of the mode on one axis.
    pub fn axis_weight(&self, axis: Axis) -> f64 {
        let k = self.vector.len() / 3;
        let a = axis.index();
        self.vector.rows(a * k, k).norm_squared()
    }

    /// Component for ion `ion` along `axis`.
    pub fn component(&self, ion: usize, axis: Axis) -> f64 {
        let k = self.vector.len() / 3;
        self.vector[axis.index() * k + ion]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalModes {
    pub omega_z: f64,
    /// Sorted by descending eigenvalue.
    pub modes: Vec<Mode>,
}

impl NormalModes {
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency_hz).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// Eigenvectors as columns, in mode order.
    pub fn vectors(&self) -> DMatrix<f64> {
        let n = self.modes.first().map_or(0, |m| m.vector.len());
        DMatrix::from_fn(n, self.modes.len(), |i, j| self.modes[j].vector[i])
    }

    pub fn is_stable(&self) -> bool {
        self.modes.iter().all(|m| m.eigenvalue > 0.0)
    }

    pub fn lowest(&self) -> Option<&Mode> {
        self.modes.last()
    }
}

/// Fixes the eigenvector sign: the first component of (near-)maximal
/// magnitude is made positive.
fn canonical_sign(v: &mut DVector<f64>) {
    let max = v.amax();
    if let Some(i) = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if v[i] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigen-decomposition of a dimensionless Hessian. Frequencies are in Hz
/// for the given axial angular frequency.
pub fn normal_modes(hessian: &DMatrix<f64>, omega_z: f64) -> Result<NormalModes> {
    if !hessian.is_square() {
        return Err(Error::DimensionMismatch {
            expected: hessian.nrows(),
            found: hessian.ncols(),
        });
    }
    let scale = hessian.amax();
    let asym = (hessian - hessian.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "Hessian is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let sym = (hessian + hessian.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let modes = order
        .into_iter()
        .map(|i| {
            let lambda = eig.eigenvalues[i];
            let mut vector = eig.eigenvectors.column(i).into_owned();
            canonical_sign(&mut vector);
            Mode {
                eigenvalue: lambda,
                frequency_hz: lambda.abs().sqrt() * omega_z / (2.0 * PI),
                imaginary: lambda < 0.0,
                vector,
            }
        })
        .collect();
    Ok(NormalModes { omega_z, modes })
}

/// Equilibrium, Hessian and normal modes of one crystal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrystalState {
    pub trap: TrapSpec,
    /// m
    pub positions: Vec<Vector3<f64>>,
    pub positions_dimensionless: Vec<Vector3<f64>>,
    /// m
    pub scale_length: f64,
    /// Dimensionless Hessian (units of `m ω_z²`), direction-major.
    pub hessian: DMatrix<f64>,
    pub modes: NormalModes,
    /// Gradient max-norm of the equilibrium solve.
    pub residual: f64,
    pub is_saddle: bool,
}

impl CrystalState {
    pub fn new(trap: &TrapSpec) -> Result<Self> {
        let eq = solve_equilibrium(trap)?;
        Self::from_equilibrium(eq)
    }

    pub fn from_equilibrium(eq: Equilibrium) -> Result<Self> {
        let h = hessian(&eq)?;
        let modes = normal_modes(&h, eq.trap.omega_z)?;
        Ok(CrystalState {
            positions: eq.positions_si(),
            is_saddle: eq.is_saddle(),
            trap: eq.trap,
            positions_dimensionless: eq.positions,
            scale_length: eq.scale_length,
            hessian: h,
            modes,
            residual: eq.residual,
        })
    }

    pub fn ion_count(&self) -> usize {
        self.positions.len()
    }

    pub fn mode_frequencies(&self) -> Vec<f64> {
        self.modes.frequencies_hz()
    }

    pub fn mode_vectors(&self) -> DMatrix<f64> {
        self.modes.vectors()
    }

    pub fn is_stable(&self) -> bool {
        !self.is_saddle && self.modes.is_stable()
    }

    /// `K × K` block of the Hessian coupling `row` and `col` displacements.
    pub fn hessian_block(&self, row: Axis, col: Axis) -> DMatrix<f64> {
        let k = self.ion_count();
        self.hessian
            .view((row.index() * k, col.index() * k), (k, k))
            .into_owned()
    }
}
