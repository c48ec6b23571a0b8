use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::geometry::{CircuitGeometry, Segment};
use crate::constants::VACUUM_PERMEABILITY;
use crate::crystal::Axis;
use crate::error::{Error, Result};

/// Points closer than this to a filament are rejected (m).
const ON_FILAMENT_DISTANCE: f64 = 1e-12;
/// Largest finite-difference step for derivatives of the field (m).
pub const GRADIENT_STEP: f64 = 1e-7;
/// `|B|` below this fraction of the local field scale counts as a null.
const NULL_FRACTION: f64 = 1e-10;

fn distance_to_segment(p: &Vector3<f64>, s: &Segment) -> f64 {
    let d = s.end - s.start;
    let t = ((p - s.start).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (s.start + d * t)).norm()
}

/// Exact field of a finite straight filament.
fn segment_field(p: &Vector3<f64>, s: &Segment) -> Vector3<f64> {
    let r1 = p - s.start;
    let r2 = p - s.end;
    let n1 = r1.norm();
    let n2 = r2.norm();
    let denom = n1 * n2 * (n1 * n2 + r1.dot(&r2));
    if denom <= 0.0 {
        return Vector3::zeros();
    }
    r1.cross(&r2) * (VACUUM_PERMEABILITY * s.current / (4.0 * PI) * (n1 + n2) / denom)
}

/// Filaments of a geometry prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FieldSource {
    filaments: Vec<Segment>,
}

impl FieldSource {
    pub fn new(geometry: &CircuitGeometry) -> Result<Self> {
        geometry.validate()?;
        Ok(FieldSource {
            filaments: geometry.filaments(),
        })
    }

    pub fn filaments(&self) -> &[Segment] {
        &self.filaments
    }

    fn nearest(&self, p: &Vector3<f64>) -> Result<f64> {
        let mut dmin = f64::INFINITY;
        for (i, s) in self.filaments.iter().enumerate() {
            let d = distance_to_segment(p, s);
            if d < ON_FILAMENT_DISTANCE {
                return Err(Error::OnFilament(i));
            }
            dmin = dmin.min(d);
        }
        Ok(dmin)
    }

    fn raw_field(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.filaments.iter().map(|s| segment_field(p, s)).sum()
    }

    pub fn field(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.nearest(p)?;
        Ok(self.raw_field(p))
    }

    fn step(&self, p: &Vector3<f64>) -> Result<f64> {
        Ok(GRADIENT_STEP.min(0.01 * self.nearest(p)?))
    }

    /// `∇|B|` by central differences.
    pub fn gradient_of_magnitude(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let dmin = self.nearest(p)?;
        let b = self.raw_field(p).norm();
        let scale: f64 = self
            .filaments
            .iter()
            .map(|s| s.current.abs())
            .sum::<f64>()
            * VACUUM_PERMEABILITY
            / (2.0 * PI * dmin);
        if b <= NULL_FRACTION * scale || b == 0.0 {
            return Err(Error::FieldNull(b));
        }
        let h = GRADIENT_STEP.min(0.01 * dmin);
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            g[i] = (self.raw_field(&(p + e)).norm() - self.raw_field(&(p - e)).norm()) / (2.0 * h);
        }
        Ok(g)
    }

    /// Jacobian `∂B_i/∂x_j` by central differences.
    pub fn field_jacobian(&self, p: &Vector3<f64>) -> Result<nalgebra::Matrix3<f64>> {
        let h = self.step(p)?;
        let mut j = nalgebra::Matrix3::zeros();
        for c in 0..3 {
            let mut e = Vector3::zeros();
            e[c] = h;
            let d = (self.raw_field(&(p + e)) - self.raw_field(&(p - e))) / (2.0 * h);
            j.set_column(c, &d);
        }
        Ok(j)
    }
}

/// Magnetic field (T) of `geometry` at `point` (m).
pub fn field_at(point: &Vector3<f64>, geometry: &CircuitGeometry) -> Result<Vector3<f64>> {
    FieldSource::new(geometry)?.field(point)
}

/// Gradient of `|B|` (T/m) of `geometry` at `point`.
pub fn gradient_of_magnitude(point: &Vector3<f64>, geometry: &CircuitGeometry) -> Result<Vector3<f64>> {
    FieldSource::new(geometry)?.gradient_of_magnitude(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    /// Coordinate along the sweep axis (m).
    pub coordinate: f64,
    pub position: Vector3<f64>,
    /// T
    pub field: Vector3<f64>,
    pub magnitude: f64,
    /// `∇|B|` in T/m; `None` at a field null.
    pub gradient: Option<Vector3<f64>>,
}

/// Samples `B` and `∇|B|` along `axis` through `origin`, from `range.0` to
/// `range.1` (inclusive) in `samples` points.
pub fn gradient_profile(
    axis: Axis,
    range: (f64, f64),
    samples: usize,
    origin: &Vector3<f64>,
    geometry: &CircuitGeometry,
) -> Result<Vec<ProfileSample>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("a profile needs at least two samples".into()));
    }
    if !(range.0.is_finite() && range.1.is_finite()) {
        return Err(Error::InvalidParameter("profile range must be finite".into()));
    }
    let source = FieldSource::new(geometry)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let c = range.0 + (range.1 - range.0) * i as f64 / (samples - 1) as f64;
            let mut p = *origin;
            p[axis.index()] = c;
            let field = source.field(&p)?;
            let gradient = match source.gradient_of_magnitude(&p) {
                Ok(g) => Some(g),
                Err(Error::FieldNull(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(ProfileSample {
                coordinate: c,
                position: p,
                field,
                magnitude: field.norm(),
                gradient,
            })
        })
        .collect()
}
