//! Biot-Savart fields and `|B|` gradients of chip current paths, and secular
//! frequencies from Mathieu stability matrices.

mod field;
mod geometry;
mod mathieu;
pub mod presets;

pub use field::{field_at, gradient_of_magnitude, gradient_profile, FieldSource, ProfileSample, GRADIENT_STEP};
pub use geometry::{CircuitGeometry, Segment, Sheet};
pub use mathieu::{mathieu_characteristic_exponent, secular_frequencies, MathieuMatrices, SecularFrequencies};
