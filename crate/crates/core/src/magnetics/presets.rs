//! Built-in chip layouts. The chip surface is the plane `y = 0`, the trap
//! axis is `z` and the ions sit above the chip at positive `y`.

use nalgebra::Vector3;

use super::geometry::{CircuitGeometry, Sheet};

fn um(x: f64) -> f64 {
    x / 1e6
}

/// Ion height above the loop chip (m).
pub const LOOP_CHIP_ION_HEIGHT: f64 = 164e-6;
/// Half-length of the modeled wires along the axis (m).
pub const RETURN_TRUNCATION: f64 = 5e-3;
/// Default number of filaments per sheet.
pub const DEFAULT_FILAMENTS: usize = 16;

/// Center-wire loop chip.
///
/// `W1` (100 μm wide, centered at x = −51.5 μm) makes a rectangular detour
/// toward −x between z = ±100 μm; the detour legs are 50 μm wide, so the
/// opening is 150 μm inside and 250 μm outside. `W2` (100 μm wide, centered
/// at x = +51.5 μm) runs straight. Both are truncated at |z| = 5 mm.
pub fn loop_chip(i_w1: f64, i_w2: f64, filaments: usize) -> CircuitGeometry {
    let x1 = um(-51.5);
    let xd = x1 - um(150.0);
    let zl = um(100.0);
    let l = RETURN_TRUNCATION;
    let p = |x: f64, z: f64| Vector3::new(x, 0.0, z);
    CircuitGeometry {
        segments: vec![],
        sheets: vec![
            Sheet::new("W1", vec![p(x1, -l), p(x1, -zl)], um(100.0), i_w1, filaments),
            Sheet::new(
                "W1",
                vec![p(x1, -zl), p(xd, -zl), p(xd, zl), p(x1, zl)],
                um(50.0),
                i_w1,
                filaments,
            ),
            Sheet::new("W1", vec![p(x1, zl), p(x1, l)], um(100.0), i_w1, filaments),
            Sheet::new("W2", vec![p(-x1, -l), p(-x1, l)], um(100.0), i_w2, filaments),
        ],
    }
}

/// Current density of the U-chip conductors (A/m², 4·10⁶ A/cm²).
pub const U_CHIP_CURRENT_DENSITY: f64 = 4e10;
/// Metal thickness of the U-chip conductors (m).
pub const U_CHIP_THICKNESS: f64 = 1.9e-6;
pub const U_CHIP_STRIP_WIDTH: f64 = 400e-6;
pub const U_CHIP_GAP: f64 = 50e-6;
/// Ion height above the U-chip (m).
pub const U_CHIP_ION_HEIGHT: f64 = 400e-6;

/// Current per strip of the U-chip at the design current density.
pub fn u_chip_current() -> f64 {
    U_CHIP_CURRENT_DENSITY * U_CHIP_THICKNESS * U_CHIP_STRIP_WIDTH
}

/// Two broad strips parallel to the axis carrying opposite currents,
/// joined at z = +5 mm.
pub fn u_chip(current: f64, filaments: usize) -> CircuitGeometry {
    let xc = 0.5 * (U_CHIP_GAP + U_CHIP_STRIP_WIDTH);
    let l = RETURN_TRUNCATION;
    let p = |x: f64, z: f64| Vector3::new(x, 0.0, z);
    CircuitGeometry {
        segments: vec![],
        sheets: vec![Sheet::new(
            "U",
            vec![p(xc, -l), p(xc, l), p(-xc, l), p(-xc, -l)],
            U_CHIP_STRIP_WIDTH,
            current,
            filaments,
        )],
    }
}
