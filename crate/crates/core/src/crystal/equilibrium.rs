use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use super::{ChainLayout, TrapSpec};
use crate::error::{Error, Result};

/// Required gradient max-norm (dimensionless) of a converged equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;
/// Newton keeps iterating below [`EQUILIBRIUM_TOLERANCE`] until this or stagnation.
const TARGET_RESIDUAL: f64 = 1e-13;
const MAX_ITERATIONS: usize = 200;
/// Largest coordinate change (units of l) allowed in one Newton step.
const MAX_STEP: f64 = 0.5;
/// Hessian eigenvalues below `-SADDLE_TOLERANCE` mark a saddle point.
pub const SADDLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equilibrium {
    pub trap: TrapSpec,
    /// Dimensionless positions (units of `scale_length`).
    pub positions: Vec<Vector3<f64>>,
    /// m
    pub scale_length: f64,
    /// Gradient max-norm at `positions`.
    pub residual: f64,
    pub iterations: usize,
    /// Smallest eigenvalue of the full Hessian (units of `m ω_z²`).
    pub min_curvature: f64,
}

impl Equilibrium {
    pub fn positions_si(&self) -> Vec<Vector3<f64>> {
        self.positions.iter().map(|p| p * self.scale_length).collect()
    }

    /// Converged onto a stationary point that is not a minimum.
    pub fn is_saddle(&self) -> bool {
        self.min_curvature < -SADDLE_TOLERANCE
    }

    pub fn chain(&self, c: usize) -> &[Vector3<f64>] {
        let n = self.trap.ions_per_chain;
        &self.positions[c * n..(c + 1) * n]
    }
}

pub(crate) struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let rhs = -g;
    if let Some(d) = h.clone().lu().solve(&rhs) {
        if d.iter().all(|v| v.is_finite()) {
            return d;
        }
    }
    // Singular Hessian: Levenberg damping.
    let scale = h.amax().max(1.0);
    let mut mu = 1e-8 * scale;
    loop {
        let damped = h + DMatrix::identity(h.nrows(), h.ncols()) * mu;
        if let Some(d) = damped.lu().solve(&rhs) {
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        mu *= 10.0;
        if mu > 1e6 * scale {
            return rhs / scale;
        }
    }
}

/// Damped Newton on `∇V = 0` with a backtracking line search on `|∇V|²/2`.
///
/// The merit function makes saddles reachable as well as minima; callers
/// classify the result through the Hessian spectrum.
pub(crate) fn newton_solve<F>(mut x: DVector<f64>, eval: F) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let (mut g, mut h) = eval(&x)?;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && max_norm(&g) > TARGET_RESIDUAL {
        iterations += 1;
        let mut step = newton_direction(&h, &g);
        let big = max_norm(&step);
        if big > MAX_STEP {
            step *= MAX_STEP / big;
        }
        let phi = 0.5 * g.norm_squared();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &step * t;
            if let Ok((gt, ht)) = eval(&trial) {
                if 0.5 * gt.norm_squared() <= phi * (1.0 - 1e-4 * t) {
                    accepted = Some((trial, gt, ht));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, gn, hn)) => {
                x = xn;
                g = gn;
                h = hn;
            }
            None => break,
        }
    }
    let residual = max_norm(&g);
    if residual > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotConverged { iterations, residual });
    }
    Ok(NewtonOutcome { x, iterations })
}

/// Minimizes the potential over the listed `(ion, axis)` coordinates while
/// holding the rest at their initial values.
fn solve_reduced(
    potential: &Potential,
    initial: Vec<Vector3<f64>>,
    free: &[(usize, usize)],
) -> Result<(Vec<Vector3<f64>>, usize)> {
    let k = initial.len();
    let assemble = |x: &DVector<f64>| {
        let mut pos = initial.clone();
        for (v, &(ion, axis)) in x.iter().zip(free) {
            pos[ion][axis] = *v;
        }
        pos
    };
    let eval = |x: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let pos = assemble(x);
        let g = potential.gradient(&pos)?;
        let h = potential.hessian(&pos)?;
        let gr = DVector::from_iterator(free.len(), free.iter().map(|&(ion, axis)| g[ion][axis]));
        let hr = DMatrix::from_fn(free.len(), free.len(), |a, b| {
            let (ia, xa) = free[a];
            let (ib, xb) = free[b];
            h[(xa * k + ia, xb * k + ib)]
        });
        Ok((gr, hr))
    };
    let x0 = DVector::from_iterator(free.len(), free.iter().map(|&(ion, axis)| initial[ion][axis]));
    let out = newton_solve(x0, eval)?;
    Ok((assemble(&out.x), out.iterations))
}

fn initial_chain(n: usize, center: Vector3<f64>) -> impl Iterator<Item = Vector3<f64>> {
    let length = 2.0 * (n as f64).powf(0.56);
    (0..n).map(move |i| {
        let z = if n == 1 {
            0.0
        } else {
            -0.5 * length + length * i as f64 / (n - 1) as f64
        };
        center + Vector3::new(0.0, 0.0, z)
    })
}

/// Dimensionless axial positions of a single linear chain of `n` ions
/// (independent of the radial confinement).
pub fn linear_chain_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("a chain needs at least one ion".into()));
    }
    let potential = Potential::with_centers(vec![Vector3::zeros(); n], [1.0, 1.0, 1.0]);
    let free: Vec<_> = (0..n).map(|i| (i, 2)).collect();
    let (pos, _) = solve_reduced(&potential, initial_chain(n, Vector3::zeros()).collect(), &free)?;
    Ok(pos.iter().map(|p| p.z).collect())
}

/// Equilibrium positions of the crystal described by `trap`.
///
/// A single chain is solved along the axis only, so above the critical
/// anisotropy the linear configuration is returned as a saddle. Two chains
/// are solved in the x–z plane with `y = 0`.
pub fn solve_equilibrium(trap: &TrapSpec) -> Result<Equilibrium> {
    trap.validate()?;
    let potential = Potential::new(trap);
    let n = trap.ions_per_chain;
    let initial: Vec<Vector3<f64>> = potential
        .centers()
        .chunks(n)
        .flat_map(|c| initial_chain(n, c[0]))
        .collect();
    let axes: &[usize] = match trap.layout {
        ChainLayout::Single => &[2],
        ChainLayout::Double { .. } => &[0, 2],
    };
    let free: Vec<(usize, usize)> = (0..initial.len())
        .flat_map(|ion| axes.iter().map(move |&a| (ion, a)))
        .collect();
    let (positions, iterations) = solve_reduced(&potential, initial, &free)?;

    let g = potential.gradient(&positions)?;
    let residual = g.iter().flat_map(|v| v.iter()).fold(0.0f64, |a, &b| a.max(b.abs()));
    let h = potential.hessian(&positions)?;
    let min_curvature = SymmetricEigen::new(h).eigenvalues.min();
    Ok(Equilibrium {
        trap: trap.clone(),
        positions,
        scale_length: trap.scale_length(),
        residual,
        iterations,
        min_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::IonSpecies;
    use std::f64::consts::PI;

    #[test]
    fn two_ions() {
        let z = linear_chain_positions(2).unwrap();
        let u = 0.25f64.cbrt();
        assert!((z[0] + u).abs() < 1e-12 && (z[1] - u).abs() < 1e-12);
        assert!((z[1] - 0.6300).abs() < 1e-4);
    }

    #[test]
    fn three_ions_match_force_balance() {
        // Outer ion: u = 1/u² + 1/(2u)² → u³ = 5/4.
        let z = linear_chain_positions(3).unwrap();
        let u = 1.25f64.cbrt();
        assert!((z[2] - u).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] - 1.0772).abs() < 1e-3);
    }

    #[test]
    fn single_ion_sits_at_center() {
        assert_eq!(linear_chain_positions(1).unwrap(), vec![0.0]);
    }

    #[test]
    fn above_critical_single_chain_is_flagged() {
        let t = TrapSpec::single_chain(IonSpecies::calcium40(), 2.0 * PI * 1e6, 0.1, 0.1, 10);
        let eq = solve_equilibrium(&t).unwrap();
        assert!(eq.is_saddle());
        let t = TrapSpec::single_chain(IonSpecies::calcium40(), 2.0 * PI * 1e6, 0.01, 0.01, 10);
        let eq = solve_equilibrium(&t).unwrap();
        assert!(!eq.is_saddle());
        assert!(eq.residual < EQUILIBRIUM_TOLERANCE);
        assert!(eq.positions.iter().all(|p| p.x == 0.0 && p.y == 0.0));
    }

    #[test]
    fn two_chain_mirror_symmetry() {
        let t = TrapSpec::single_chain(IonSpecies::calcium40(), 2.0 * PI * 310e3, 0.00975, 0.00939, 6);
        let l = t.scale_length();
        let t = t.with_layout(ChainLayout::Double {
            separation: 5.0 * l,
            axial_shift: 0.0,
        });
        let eq = solve_equilibrium(&t).unwrap();
        for c in 0..2 {
            let chain = eq.chain(c);
            for i in 0..6 {
                let a = chain[i];
                let b = chain[5 - i];
                assert!((a.z + b.z).abs() < 1e-9);
                assert!((a.x - b.x).abs() < 1e-9);
            }
        }
        // The chains push each other apart.
        assert!(eq.chain(0)[2].x < 0.0 && eq.chain(1)[2].x > 5.0);
    }
}
