use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{ChainLayout, TrapSpec};
use crate::error::{Error, Result};

/// Dimensionless crystal potential
///
/// `V = Σ_n Σ_i (x_{n,i} − c_{n,i})² / (2 α_i) + Σ_{n<m} 1/|x_n − x_m|`
///
/// where `c_n` is the trap center of the chain holding ion `n`.
#[derive(Debug, Clone)]
pub struct Potential {
    centers: Vec<Vector3<f64>>,
    inv_alpha: [f64; 3],
}

impl Potential {
    pub fn new(trap: &TrapSpec) -> Self {
        let l = trap.scale_length();
        let mut centers = vec![Vector3::zeros(); trap.ions_per_chain];
        if let ChainLayout::Double {
            separation,
            axial_shift,
        } = trap.layout
        {
            let c = Vector3::new(separation / l, 0.0, axial_shift / l);
            centers.extend(std::iter::repeat_n(c, trap.ions_per_chain));
        }
        let [ax, ay, az] = trap.alphas();
        Potential {
            centers,
            inv_alpha: [1.0 / ax, 1.0 / ay, 1.0 / az],
        }
    }

    /// Same potential with explicit (dimensionless) trap centers.
    pub fn with_centers(centers: Vec<Vector3<f64>>, alphas: [f64; 3]) -> Self {
        Potential {
            centers,
            inv_alpha: [1.0 / alphas[0], 1.0 / alphas[1], 1.0 / alphas[2]],
        }
    }

    pub fn ion_count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vector3<f64>] {
        &self.centers
    }

    fn check_len(&self, pos: &[Vector3<f64>]) -> Result<()> {
        if pos.len() != self.centers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.centers.len(),
                found: pos.len(),
            });
        }
        Ok(())
    }

    fn separation(pos: &[Vector3<f64>], n: usize, m: usize) -> Result<(Vector3<f64>, f64)> {
        let r = pos[n] - pos[m];
        let d = r.norm();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::CoincidentIons(n, m));
        }
        Ok((r, d))
    }

    pub fn energy(&self, pos: &[Vector3<f64>]) -> Result<f64> {
        self.check_len(pos)?;
        let mut e = 0.0;
        for (p, c) in pos.iter().zip(&self.centers) {
            let u = p - c;
            e += 0.5 * (u.x * u.x * self.inv_alpha[0] + u.y * u.y * self.inv_alpha[1] + u.z * u.z * self.inv_alpha[2]);
        }
        for n in 0..pos.len() {
            for m in n + 1..pos.len() {
                e += 1.0 / Self::separation(pos, n, m)?.1;
            }
        }
        Ok(e)
    }

    pub fn gradient(&self, pos: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        self.check_len(pos)?;
        let mut g: Vec<Vector3<f64>> = pos
            .iter()
            .zip(&self.centers)
            .map(|(p, c)| {
                let u = p - c;
                Vector3::new(u.x * self.inv_alpha[0], u.y * self.inv_alpha[1], u.z * self.inv_alpha[2])
            })
            .collect();
        for n in 0..pos.len() {
            for m in n + 1..pos.len() {
                let (r, d) = Self::separation(pos, n, m)?;
                let f = r / (d * d * d);
                g[n] -= f;
                g[m] += f;
            }
        }
        Ok(g)
    }

    /// Full `3K × 3K` Hessian in direction-major order.
    pub fn hessian(&self, pos: &[Vector3<f64>]) -> Result<DMatrix<f64>> {
        self.check_len(pos)?;
        let k = pos.len();
        let mut h = DMatrix::zeros(3 * k, 3 * k);
        for n in 0..k {
            for i in 0..3 {
                h[(i * k + n, i * k + n)] = self.inv_alpha[i];
            }
        }
        for n in 0..k {
            for m in n + 1..k {
                let (r, d) = Self::separation(pos, n, m)?;
                let d3 = d * d * d;
                let blk: Matrix3<f64> = r * r.transpose() * (3.0 / (d3 * d * d)) - Matrix3::identity() / d3;
                for i in 0..3 {
                    for j in 0..3 {
                        let b = blk[(i, j)];
                        h[(i * k + n, j * k + n)] += b;
                        h[(i * k + m, j * k + m)] += b;
                        h[(i * k + n, j * k + m)] -= b;
                        h[(i * k + m, j * k + n)] -= b;
                    }
                }
            }
        }
        Ok(h)
    }
}

/// Dimensionless potential energy (units of `m ω_z² l²`) of the given
/// dimensionless positions.
pub fn potential_energy(positions: &[Vector3<f64>], trap: &TrapSpec) -> Result<f64> {
    Potential::new(trap).energy(positions)
}
