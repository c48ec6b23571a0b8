use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{BOHR_MAGNETON, HBAR};
use crate::crystal::{critical_anisotropy, linear_chain_blocks, ChainLayout, CrystalState, IonSpecies, TrapSpec};
use crate::error::{Error, Result};

/// Default limit on the Hessian condition number before inversion.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

pub const SIGN_CONVENTION: &str =
    "E/hbar = -(1/2) sum_{n<m} J_nm s_n s_m; positive J is ferromagnetic (favors parallel spins)";

/// Magnetic gradient acting on the crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSpec {
    /// Gradient of `|B|` (T/m).
    pub b_vector: Vector3<f64>,
    /// Offset field defining the quantization axis (T).
    #[serde(default)]
    pub b0: f64,
    /// Per-ion gradients replacing `b_vector` (T/m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_ion_override: Option<Vec<Vector3<f64>>>,
}

impl GradientSpec {
    pub fn new(b_vector: Vector3<f64>) -> Self {
        GradientSpec {
            b_vector,
            b0: 0.0,
            per_ion_override: None,
        }
    }

    /// Gradient along the trap axis.
    pub fn axial(b: f64) -> Self {
        Self::new(Vector3::new(0.0, 0.0, b))
    }

    /// Gradient along x (the in-plane radial direction).
    pub fn transverse(b: f64) -> Self {
        Self::new(Vector3::new(b, 0.0, 0.0))
    }

    /// Gradient of magnitude `b` in the x–z plane at `angle` from the z axis.
    pub fn in_plane(b: f64, angle: f64) -> Self {
        Self::new(Vector3::new(b * angle.sin(), 0.0, b * angle.cos()))
    }

    pub fn with_offset(mut self, b0: f64) -> Self {
        self.b0 = b0;
        self
    }

    /// Every gradient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        GradientSpec {
            b_vector: self.b_vector * factor,
            b0: self.b0,
            per_ion_override: self
                .per_ion_override
                .as_ref()
                .map(|v| v.iter().map(|b| b * factor).collect()),
        }
    }

    pub fn per_ion(&self, ions: usize) -> Result<Vec<Vector3<f64>>> {
        match &self.per_ion_override {
            Some(v) if v.len() != ions => Err(Error::DimensionMismatch {
                expected: ions,
                found: v.len(),
            }),
            Some(v) => Ok(v.clone()),
            None => Ok(vec![self.b_vector; ions]),
        }
    }
}

/// `∂ω/∂x = g μ_B b / ħ` per component, in rad/(s·m).
pub fn zeeman_gradient(spec: &GradientSpec, species: &IonSpecies) -> Vector3<f64> {
    spec.b_vector * (species.lande_g * BOHR_MAGNETON / HBAR)
}

/// `(g μ_B)² / (2 ħ m ω_z²)`: J in rad/s for a unit (T/m)² gradient and a
/// unit entry of the dimensionless inverse Hessian.
pub fn coupling_prefactor(trap: &TrapSpec) -> f64 {
    let gm = trap.species.lande_g * BOHR_MAGNETON;
    gm * gm / (2.0 * HBAR * trap.species.mass * trap.omega_z * trap.omega_z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub condition_limit: f64,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            condition_limit: DEFAULT_CONDITION_LIMIT,
        }
    }
}

/// Largest magnitude and sign statistics of a set of couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    /// rad/s
    pub max_abs: f64,
    /// Sign of the largest-magnitude entry (+1 ferromagnetic, −1
    /// antiferromagnetic, 0 if all vanish).
    pub dominant_sign: i8,
    pub positive: usize,
    pub negative: usize,
}

impl BlockStats {
    fn collect(values: impl Iterator<Item = f64>) -> Self {
        let mut s = BlockStats {
            max_abs: 0.0,
            dominant_sign: 0,
            positive: 0,
            negative: 0,
        };
        let mut best = 0.0f64;
        for v in values {
            if v > 0.0 {
                s.positive += 1;
            } else if v < 0.0 {
                s.negative += 1;
            }
            if v.abs() > best.abs() {
                best = v;
            }
        }
        s.max_abs = best.abs();
        s.dominant_sign = if best > 0.0 {
            1
        } else if best < 0.0 {
            -1
        } else {
            0
        };
        s
    }

    pub fn max_abs_hz(&self) -> f64 {
        self.max_abs / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    /// Couplings within either chain.
    pub intra: BlockStats,
    /// Couplings between the chains.
    pub inter: BlockStats,
}

impl BlockSummary {
    pub fn ratio(&self) -> f64 {
        self.intra.max_abs / self.inter.max_abs
    }
}

/// Sign structure of a coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Zero,
    Ferromagnetic,
    Antiferromagnetic,
    /// `sign(J_nm) = (−1)^{n−m}` for all pairs.
    Alternating,
    Mixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingMatrix {
    /// rad/s, symmetric with zero diagonal.
    pub j: DMatrix<f64>,
    pub gradient: GradientSpec,
    pub trap: TrapSpec,
    pub sign_convention: String,
}

impl CouplingMatrix {
    pub fn new(j: DMatrix<f64>, gradient: GradientSpec, trap: TrapSpec) -> Self {
        CouplingMatrix {
            j,
            gradient,
            trap,
            sign_convention: SIGN_CONVENTION.to_string(),
        }
    }

    pub fn size(&self) -> usize {
        self.j.nrows()
    }

    /// J/2π in Hz.
    pub fn j_hz(&self) -> DMatrix<f64> {
        &self.j / (2.0 * PI)
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.size();
        (0..n).flat_map(move |a| (a + 1..n).map(move |b| self.j[(a, b)]))
    }

    /// Largest |J_nm| (rad/s).
    pub fn max_abs(&self) -> f64 {
        self.off_diagonal().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_hz(&self) -> f64 {
        self.max_abs() / (2.0 * PI)
    }

    /// Largest nearest-neighbor |J| within a chain (rad/s).
    pub fn max_nearest_neighbor(&self) -> f64 {
        let n = self.trap.ions_per_chain;
        (0..self.size())
            .filter(|&a| (a + 1) % n != 0 && a + 1 < self.size())
            .map(|a| self.j[(a, a + 1)].abs())
            .fold(0.0, f64::max)
    }

    pub fn stats(&self) -> BlockStats {
        BlockStats::collect(self.off_diagonal())
    }

    /// Intra/inter-chain statistics; `None` for a single chain.
    pub fn block_summary(&self) -> Option<BlockSummary> {
        if self.trap.chain_count() != 2 {
            return None;
        }
        let n = self.trap.ions_per_chain;
        let k = self.size();
        let pairs = (0..k).flat_map(move |a| (a + 1..k).map(move |b| (a, b)));
        let intra = BlockStats::collect(pairs.clone().filter(|&(a, b)| a / n == b / n).map(|(a, b)| self.j[(a, b)]));
        let inter = BlockStats::collect(pairs.filter(|&(a, b)| a / n != b / n).map(|(a, b)| self.j[(a, b)]));
        Some(BlockSummary { intra, inter })
    }

    /// Sign structure of the whole matrix; entries below `1e-12·max|J|`
    /// are ignored.
    pub fn sign_pattern(&self) -> SignPattern {
        let max = self.max_abs();
        if max == 0.0 {
            return SignPattern::Zero;
        }
        let tol = 1e-12 * max;
        let n = self.size();
        let mut pos = true;
        let mut neg = true;
        let mut alt = true;
        for a in 0..n {
            for b in a + 1..n {
                let v = self.j[(a, b)];
                if v.abs() <= tol {
                    continue;
                }
                pos &= v > 0.0;
                neg &= v < 0.0;
                let want = if (b - a) % 2 == 0 { 1.0 } else { -1.0 };
                alt &= v * want > 0.0;
            }
        }
        if pos {
            SignPattern::Ferromagnetic
        } else if alt {
            SignPattern::Alternating
        } else if neg {
            SignPattern::Antiferromagnetic
        } else {
            SignPattern::Mixed
        }
    }

    /// Same couplings with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingMatrix {
        CouplingMatrix {
            j: &self.j * factor,
            ..self.clone()
        }
    }
}

/// Inverse of a symmetric positive-definite dimensionless Hessian, with the
/// soft-mode and condition guards. Mode indices count from the highest
/// eigenvalue.
pub fn guarded_inverse(h: &DMatrix<f64>, options: &CouplingOptions) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(h.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]];
    let lmin_idx = order[n - 1];
    let lmin = eig.eigenvalues[lmin_idx];
    if lmin <= 0.0 {
        return Err(Error::SoftMode {
            mode: n - 1,
            eigenvalue: lmin,
        });
    }
    let condition = lmax / lmin;
    if condition > options.condition_limit {
        return Err(Error::IllConditioned {
            condition,
            limit: options.condition_limit,
            mode: n - 1,
            eigenvalue: lmin,
        });
    }
    let v = &eig.eigenvectors;
    let inv_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = v * inv_l * v.transpose();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `J_nm = (ħ/2) Σ_ij k_{n,i} k_{m,j} (M⁻¹)_{(i,n),(j,m)}` with
/// `k = g μ_B ∇|B| / ħ` per ion, over the full Hessian of `state`.
pub fn coupling_matrix_general(state: &CrystalState, grad: &GradientSpec) -> Result<CouplingMatrix> {
    coupling_matrix_with(state, grad, &CouplingOptions::default())
}

pub fn coupling_matrix_with(
    state: &CrystalState,
    grad: &GradientSpec,
    options: &CouplingOptions,
) -> Result<CouplingMatrix> {
    let k = state.ion_count();
    let b = grad.per_ion(k)?;
    let inv = guarded_inverse(&state.hessian, options)?;
    let pref = coupling_prefactor(&state.trap);
    let mut j = DMatrix::zeros(k, k);
    for n in 0..k {
        for m in n + 1..k {
            let mut s = 0.0;
            for i in 0..3 {
                if b[n][i] == 0.0 {
                    continue;
                }
                for jx in 0..3 {
                    s += b[n][i] * b[m][jx] * inv[(i * k + n, jx * k + m)];
                }
            }
            j[(n, m)] = pref * s;
            j[(m, n)] = pref * s;
        }
    }
    Ok(CouplingMatrix::new(j, grad.clone(), state.trap.clone()))
}

fn single_chain_only(trap: &TrapSpec) -> Result<()> {
    if trap.layout != ChainLayout::Single {
        return Err(Error::InvalidParameter("expected a single-chain trap".into()));
    }
    trap.validate()
}

fn from_block(trap: &TrapSpec, inv: &DMatrix<f64>, grad: GradientSpec, b: f64) -> CouplingMatrix {
    let mut j = inv * (coupling_prefactor(trap) * b * b);
    j.fill_diagonal(0.0);
    CouplingMatrix::new(j, grad, trap.clone())
}

/// Couplings of a linear chain for a gradient `b` along the axis:
/// `J = (gμ_B b)²/(2ħmω_z²) · A⁻¹`.
pub fn coupling_axial(trap: &TrapSpec, b: f64) -> Result<CouplingMatrix> {
    single_chain_only(trap)?;
    let blocks = linear_chain_blocks(trap.ions_per_chain)?;
    let inv = guarded_inverse(&blocks.a, &CouplingOptions::default())?;
    Ok(from_block(trap, &inv, GradientSpec::axial(b), b))
}

/// Couplings of a linear chain for a gradient `b` along x:
/// `J = (gμ_B b)²/(2ħmω_z²) · (B^x)⁻¹`.
pub fn coupling_transverse(trap: &TrapSpec, b: f64) -> Result<CouplingMatrix> {
    coupling_transverse_with(trap, b, &CouplingOptions::default())
}

pub fn coupling_transverse_with(trap: &TrapSpec, b: f64, options: &CouplingOptions) -> Result<CouplingMatrix> {
    single_chain_only(trap)?;
    let crit = critical_anisotropy(trap.ions_per_chain)?;
    let blocks = linear_chain_blocks(trap.ions_per_chain)?;
    let bx = blocks.b(trap.alpha_x);
    if trap.alpha_x >= crit.exact {
        let lmin = SymmetricEigen::new(bx).eigenvalues.min();
        return Err(Error::SoftMode {
            mode: trap.ions_per_chain - 1,
            eigenvalue: lmin,
        });
    }
    let inv = guarded_inverse(&bx, options)?;
    Ok(from_block(trap, &inv, GradientSpec::transverse(b), b))
}

/// Couplings of two parallel chains from the full Hessian at the bent
/// equilibrium; the block summary is available through
/// [`CouplingMatrix::block_summary`].
pub fn coupling_two_chain(trap: &TrapSpec, grad: &GradientSpec) -> Result<CouplingMatrix> {
    if trap.chain_count() != 2 {
        return Err(Error::InvalidParameter("expected a two-chain trap".into()));
    }
    let state = CrystalState::new(trap)?;
    coupling_matrix_general(&state, grad)
}
