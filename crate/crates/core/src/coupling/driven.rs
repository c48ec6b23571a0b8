use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::matrix::GradientSpec;
use crate::constants::BOHR_MAGNETON;
use crate::crystal::CrystalState;
use crate::error::{Error, Result};

/// Relative detuning below which a drive counts as exactly resonant.
const RESONANCE_TOLERANCE: f64 = 1e-12;

/// One cosine component `amplitude · cos(omega t)` of the gradient drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Multiplies the gradient of the `GradientSpec`.
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeResponse {
    /// Mode index in descending-frequency order.
    pub mode: usize,
    /// rad/s
    pub omega: f64,
    /// Projection of the spin-dependent force onto the mode vector (N).
    pub modal_force: f64,
    /// `ω_drive − ω_mode` for each drive (rad/s).
    pub detunings: Vec<f64>,
    /// Some drive hits the mode exactly; the amplitude then grows linearly.
    pub resonant: bool,
    /// Slowly varying amplitude `ξ(t)` (m) with `q(t) = Re(ξ e^{iω t})`.
    pub envelope: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrivenResponse {
    /// s
    pub times: Vec<f64>,
    pub modes: Vec<ModeResponse>,
    /// Mode vectors, one per mode (direction-major).
    vectors: Vec<Vec<f64>>,
    ions: usize,
}

impl DrivenResponse {
    /// Mode displacement `q_k(t)` (m) at sample `t_index`.
    pub fn mode_displacement(&self, mode: usize, t_index: usize) -> f64 {
        let m = &self.modes[mode];
        let t = self.times[t_index];
        (m.envelope[t_index] * Complex64::from_polar(1.0, m.omega * t)).re
    }

    /// Ion displacements (m) at sample `t_index` from the listed modes.
    pub fn ion_displacements(&self, modes: &[usize], t_index: usize) -> Vec<Vector3<f64>> {
        let k = self.ions;
        let mut out = vec![Vector3::zeros(); k];
        for &mode in modes {
            let q = self.mode_displacement(mode, t_index);
            let v = &self.vectors[mode];
            for (ion, d) in out.iter_mut().enumerate() {
                for axis in 0..3 {
                    d[axis] += q * v[axis * k + ion];
                }
            }
        }
        out
    }

    /// Ion displacements summed over all modes.
    pub fn total_displacements(&self, t_index: usize) -> Vec<Vector3<f64>> {
        let all: Vec<usize> = (0..self.modes.len()).collect();
        self.ion_displacements(&all, t_index)
    }

    /// Largest |displacement| of each ion over time, from the listed modes.
    pub fn peak_displacements(&self, modes: &[usize]) -> Vec<f64> {
        let mut peak = vec![0.0f64; self.ions];
        for t in 0..self.times.len() {
            for (p, d) in peak.iter_mut().zip(self.ion_displacements(modes, t)) {
                *p = p.max(d.norm());
            }
        }
        peak
    }
}

/// `∫₀ᵗ e^{ixt'} dt'`, continuous through `x = 0`.
fn phase_integral(x: f64, t: f64) -> Complex64 {
    let xt = x * t;
    if xt.abs() < 1e-6 {
        let i = Complex64::i();
        // t (1 + i xt/2 − (xt)²/6 − i (xt)³/24)
        t * (1.0 + i * xt / 2.0 - xt * xt / 6.0 - i * xt * xt * xt / 24.0)
    } else {
        (Complex64::from_polar(1.0, xt) - 1.0) / (Complex64::i() * x)
    }
}

/// Classical response of every normal mode to a spin-dependent gradient
/// force `F_n(t) = −s_n (g μ_B / 2) ∇|B| Σ_d a_d cos(ω_d t)`, starting at
/// rest, sampled at `samples` equally spaced times over `[0, duration]`.
pub fn driven_mode_response(
    state: &CrystalState,
    grad: &GradientSpec,
    spins: &[i8],
    drives: &[Drive],
    duration: f64,
    samples: usize,
) -> Result<DrivenResponse> {
    let k = state.ion_count();
    if spins.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: spins.len(),
        });
    }
    if spins.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter("spins must be ±1".into()));
    }
    if drives.is_empty() {
        return Err(Error::InvalidParameter("at least one drive is required".into()));
    }
    if samples < 2 || duration.is_nan() || duration <= 0.0 {
        return Err(Error::InvalidParameter("need duration > 0 and at least two samples".into()));
    }
    let b = grad.per_ion(k)?;
    let half_g = 0.5 * state.trap.species.lande_g * BOHR_MAGNETON;
    let mass = state.trap.species.mass;
    let times: Vec<f64> = (0..samples)
        .map(|i| duration * i as f64 / (samples - 1) as f64)
        .collect();

    let mut modes = Vec::with_capacity(state.modes.modes.len());
    let mut vectors = Vec::with_capacity(state.modes.modes.len());
    for (idx, mode) in state.modes.modes.iter().enumerate() {
        if mode.imaginary {
            return Err(Error::SoftMode {
                mode: idx,
                eigenvalue: mode.eigenvalue,
            });
        }
        let omega = 2.0 * PI * mode.frequency_hz;
        let mut force = 0.0;
        for (ion, (bn, &s)) in b.iter().zip(spins).enumerate() {
            for axis in 0..3 {
                force += -(s as f64) * half_g * bn[axis] * mode.vector[axis * k + ion];
            }
        }
        let detunings: Vec<f64> = drives.iter().map(|d| d.omega - omega).collect();
        let resonant = detunings
            .iter()
            .any(|d| d.abs() <= RESONANCE_TOLERANCE * omega.max(f64::MIN_POSITIVE));
        let envelope = times
            .iter()
            .map(|&t| {
                // A(t) = ∫ f(t')/m e^{−iωt'} dt', ξ = A/(iω).
                let a: Complex64 = drives
                    .iter()
                    .map(|d| {
                        0.5 * d.amplitude
                            * (phase_integral(d.omega - omega, t) + phase_integral(-d.omega - omega, t))
                    })
                    .sum::<Complex64>()
                    * (force / mass);
                a / (Complex64::i() * omega)
            })
            .collect();
        modes.push(ModeResponse {
            mode: idx,
            omega,
            modal_force: force,
            detunings,
            resonant,
            envelope,
        });
        vectors.push(mode.vector.iter().copied().collect());
    }
    Ok(DrivenResponse {
        times,
        modes,
        vectors,
        ions: k,
    })
}
