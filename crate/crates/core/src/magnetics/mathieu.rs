use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::crystal::IonSpecies;
use crate::error::{Error, Result};

/// Off-diagonal entries below this fraction of the largest entry count as zero.
const DIAGONAL_TOLERANCE: f64 = 1e-9;
/// Bounds of the lowest-order secular approximation.
const MAX_A: f64 = 0.1;
const MAX_Q: f64 = 0.4;

/// Dimensionless stability matrices of the Mathieu equation
/// `ẍ + (Ω²/4)(A − 2Q cos Ωt) x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuMatrices {
    pub a: Matrix3<f64>,
    pub q: Matrix3<f64>,
    /// rf drive angular frequency (rad/s).
    pub omega: f64,
}

impl MathieuMatrices {
    /// From curvature matrices `∂²φ/∂x_i∂x_j` (V/m²) of the dc potential and
    /// of the rf amplitude:
    /// `A = 4q/(mΩ²) ∂²φ_dc`, `Q = 2q/(mΩ²) ∂²φ_rf`.
    pub fn from_curvatures(species: &IonSpecies, dc: &Matrix3<f64>, rf: &Matrix3<f64>, omega: f64) -> Self {
        let k = species.charge / (species.mass * omega * omega);
        MathieuMatrices {
            a: dc * (4.0 * k),
            q: rf * (2.0 * k),
            omega,
        }
    }

    /// Largest of `|tr A|/‖A‖` and `|tr Q|/‖Q‖`; zero for Laplace-satisfying
    /// potentials.
    pub fn laplace_residual(&self) -> f64 {
        let rel = |m: &Matrix3<f64>| {
            let s = m.amax();
            if s == 0.0 {
                0.0
            } else {
                m.trace().abs() / s
            }
        };
        rel(&self.a).max(rel(&self.q))
    }

    pub fn is_symmetric(&self) -> bool {
        let tol = |m: &Matrix3<f64>| 1e-12 * m.amax();
        (self.a - self.a.transpose()).amax() <= tol(&self.a) && (self.q - self.q.transpose()).amax() <= tol(&self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularFrequencies {
    /// `|κ_i| Ω / (2·2π)` in Hz.
    pub hz: [f64; 3],
    /// `κ_i² < 0`: no confinement along this axis.
    pub imaginary: [bool; 3],
    /// All `|A_ii|` and `|Q_ii|` inside the lowest-order regime.
    pub lowest_order_valid: bool,
}

/// Secular frequencies `κ_i Ω/2` with `κ_i = √(A_ii + Q_ii²/2)`.
pub fn secular_frequencies(mm: &MathieuMatrices) -> Result<SecularFrequencies> {
    let scale = mm.a.amax().max(mm.q.amax());
    let mut off: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                off = off.max(mm.a[(i, j)].abs()).max(mm.q[(i, j)].abs());
            }
        }
    }
    if off > DIAGONAL_TOLERANCE * scale {
        return Err(Error::NotDiagonal(off));
    }
    let mut out = SecularFrequencies {
        hz: [0.0; 3],
        imaginary: [false; 3],
        lowest_order_valid: true,
    };
    for i in 0..3 {
        let a = mm.a[(i, i)];
        let q = mm.q[(i, i)];
        let k2 = a + 0.5 * q * q;
        out.hz[i] = k2.abs().sqrt() * mm.omega / (4.0 * PI);
        out.imaginary[i] = k2 < 0.0;
        if a.abs() > MAX_A || q.abs() > MAX_Q {
            out.lowest_order_valid = false;
        }
    }
    Ok(out)
}

/// Characteristic exponent β of `u'' + (a − 2q cos 2τ) u = 0` from the
/// Floquet monodromy matrix over one period (RK4, `steps` steps).
/// `None` outside the first stability region.
pub fn mathieu_characteristic_exponent(a: f64, q: f64, steps: usize) -> Option<f64> {
    let rhs = |t: f64, y: [f64; 2]| [y[1], -(a - 2.0 * q * (2.0 * t).cos()) * y[0]];
    let propagate = |mut y: [f64; 2]| {
        let h = PI / steps as f64;
        for s in 0..steps {
            let t = s as f64 * h;
            let k1 = rhs(t, y);
            let k2 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        y
    };
    let c1 = propagate([1.0, 0.0]);
    let c2 = propagate([0.0, 1.0]);
    let half_trace = 0.5 * (c1[0] + c2[1]);
    if half_trace.abs() > 1.0 {
        return None;
    }
    Some(half_trace.acos() / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c))
    }

    #[test]
    fn pure_rf_trap() {
        let omega = 2.0 * PI * 34.88e6;
        let mm = MathieuMatrices {
            a: Matrix3::zeros(),
            q: diag(0.2, -0.2, 0.0),
            omega,
        };
        let f = secular_frequencies(&mm).unwrap();
        let want = 0.2 / 2f64.sqrt() * 34.88e6 / 2.0;
        assert!((f.hz[0] - want).abs() < 1e-6 * want);
        assert!((f.hz[1] - want).abs() < 1e-6 * want);
        assert!((f.hz[0] - 2.47e6).abs() < 0.01e6);
        assert_eq!(f.hz[2], 0.0);
        assert!(f.lowest_order_valid);
        assert!(mm.laplace_residual() < 1e-12);

        // The exact Floquet exponent agrees with κ to lowest order.
        let beta = mathieu_characteristic_exponent(0.0, 0.2, 4000).unwrap();
        assert!((beta - 0.2 / 2f64.sqrt()).abs() < 0.01 * beta);
    }

    #[test]
    fn static_saddle() {
        let a = 0.01;
        let mm = MathieuMatrices {
            a: diag(a, a, -2.0 * a),
            q: Matrix3::zeros(),
            omega: 2.0 * PI * 10e6,
        };
        let f = secular_frequencies(&mm).unwrap();
        assert!(f.imaginary[2] && !f.imaginary[0] && !f.imaginary[1]);
        let want = a.sqrt() * 10e6 / 2.0;
        assert!((f.hz[0] - want).abs() < 1e-9 * want);
    }

    #[test]
    fn off_diagonal_needs_diagonalization() {
        let mut q = diag(0.2, -0.2, 0.0);
        q[(0, 1)] = 0.01;
        q[(1, 0)] = 0.01;
        let mm = MathieuMatrices {
            a: Matrix3::zeros(),
            q,
            omega: 1.0,
        };
        assert!(matches!(secular_frequencies(&mm), Err(Error::NotDiagonal(_))));
    }

    #[test]
    fn strong_drive_is_flagged() {
        let mm = MathieuMatrices {
            a: Matrix3::zeros(),
            q: diag(0.7, -0.7, 0.0),
            omega: 1.0,
        };
        assert!(!secular_frequencies(&mm).unwrap().lowest_order_valid);
    }

    #[test]
    fn harmonic_curvatures_are_traceless() {
        let sp = IonSpecies::calcium40();
        let dc = diag(1e6, 2e6, -3e6);
        let rf = Matrix3::new(5e7, 1e6, 0.0, 1e6, -5e7, 0.0, 0.0, 0.0, 0.0);
        let mm = MathieuMatrices::from_curvatures(&sp, &dc, &rf, 2.0 * PI * 30e6);
        assert!(mm.laplace_residual() < 1e-9);
        assert!(mm.is_symmetric());
    }
}
