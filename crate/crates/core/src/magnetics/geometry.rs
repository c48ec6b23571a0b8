use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight current filament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// m
    pub start: Vector3<f64>,
    /// m
    pub end: Vector3<f64>,
    /// A, flowing from `start` to `end`.
    pub current: f64,
}

fn default_normal() -> Vector3<f64> {
    Vector3::new(0.0, 1.0, 0.0)
}

/// Flat conductor of constant width following a polyline centerline.
///
/// The current is split equally over `filaments` parallel filaments placed
/// at the centers of equal-width strips; corners are mitred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Centerline vertices (m), in the direction of current flow.
    pub corners: Vec<Vector3<f64>>,
    /// m
    pub width: f64,
    /// A
    pub current: f64,
    pub filaments: usize,
    /// Surface normal of the sheet (defaults to +y, the chip normal).
    #[serde(default = "default_normal")]
    pub normal: Vector3<f64>,
}

impl Sheet {
    pub fn new(label: &str, corners: Vec<Vector3<f64>>, width: f64, current: f64, filaments: usize) -> Self {
        Sheet {
            label: Some(label.to_string()),
            corners,
            width,
            current,
            filaments,
            normal: default_normal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.label.as_deref().unwrap_or("<unnamed>");
        if self.filaments == 0 {
            return Err(Error::InvalidParameter(format!("sheet {name}: filaments must be ≥ 1")));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!("sheet {name}: width must be positive")));
        }
        if self.corners.len() < 2 {
            return Err(Error::InvalidParameter(format!("sheet {name}: needs at least two corners")));
        }
        if self.normal.norm() == 0.0 {
            return Err(Error::InvalidParameter(format!("sheet {name}: normal must be nonzero")));
        }
        for w in self.corners.windows(2) {
            let t = w[1] - w[0];
            if t.norm() == 0.0 {
                return Err(Error::InvalidParameter(format!("sheet {name}: repeated corner")));
            }
            if t.cross(&self.normal).norm() == 0.0 {
                return Err(Error::InvalidParameter(format!("sheet {name}: edge parallel to normal")));
            }
        }
        Ok(())
    }

    /// Filament discretization of the sheet.
    pub fn filaments(&self) -> Vec<Segment> {
        let n = self.normal.normalize();
        let pts = &self.corners;
        let last = pts.len() - 1;
        let side = |a: usize, b: usize| n.cross(&(pts[b] - pts[a]).normalize());
        // Offset direction at each vertex, scaled so that parallel edges stay
        // at constant distance from the centerline.
        let dirs: Vec<Vector3<f64>> = (0..pts.len())
            .map(|i| {
                if i == 0 {
                    side(0, 1)
                } else if i == last {
                    side(last - 1, last)
                } else {
                    let s1 = side(i - 1, i);
                    let s2 = side(i, i + 1);
                    let m = (s1 + s2).normalize();
                    m / m.dot(&s1)
                }
            })
            .collect();
        let f = self.filaments;
        let i = self.current / f as f64;
        let mut out = Vec::with_capacity(f * last);
        for k in 0..f {
            let o = -0.5 * self.width + (k as f64 + 0.5) * self.width / f as f64;
            for v in 0..last {
                out.push(Segment {
                    start: pts[v] + dirs[v] * o,
                    end: pts[v + 1] + dirs[v + 1] * o,
                    current: i,
                });
            }
        }
        out
    }
}

/// Current paths of a chip: explicit filaments plus discretized sheets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitGeometry {
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub sheets: Vec<Sheet>,
}

impl CircuitGeometry {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            let len = (s.end - s.start).norm();
            if len.is_nan() || len <= 0.0 {
                return Err(Error::InvalidParameter(format!("segment {i} has zero length")));
            }
            if !s.current.is_finite() {
                return Err(Error::InvalidParameter(format!("segment {i} current is not finite")));
            }
        }
        for s in &self.sheets {
            s.validate()?;
        }
        Ok(())
    }

    /// All filaments, explicit segments first.
    pub fn filaments(&self) -> Vec<Segment> {
        let mut out = self.segments.clone();
        for s in &self.sheets {
            out.extend(s.filaments());
        }
        out
    }

    /// Union of two geometries.
    pub fn merged(&self, other: &CircuitGeometry) -> CircuitGeometry {
        let mut g = self.clone();
        g.segments.extend(other.segments.iter().cloned());
        g.sheets.extend(other.sheets.iter().cloned());
        g
    }

    /// Same paths with every current multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CircuitGeometry {
        let mut g = self.clone();
        g.segments.iter_mut().for_each(|s| s.current *= factor);
        g.sheets.iter_mut().for_each(|s| s.current *= factor);
        g
    }

    /// Sets the current of every sheet carrying `label`; returns how many
    /// sheets matched.
    pub fn set_current(&mut self, label: &str, current: f64) -> usize {
        let mut n = 0;
        for s in self.sheets.iter_mut().filter(|s| s.label.as_deref() == Some(label)) {
            s.current = current;
            n += 1;
        }
        n
    }

    /// Overrides the filament count of every sheet.
    pub fn with_filaments(mut self, filaments: usize) -> CircuitGeometry {
        self.sheets.iter_mut().for_each(|s| s.filaments = filaments);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<CircuitGeometry> {
        let g: CircuitGeometry = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}
