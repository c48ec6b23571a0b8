//! Trap-parameter tables: electrode voltages, secular frequencies and
//! anisotropies, one row per operating point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapTableRow {
    pub u1_v: f64,
    pub u2_v: f64,
    pub nu_x_mhz: f64,
    pub nu_y_mhz: f64,
    pub nu_z_mhz: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
}

pub fn parse_trap_table(text: &str) -> Result<Vec<TrapTableRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::config(format!("table row {}: {e}", i + 1))))
        .collect()
}

pub fn load_trap_table(path: &Path) -> Result<Vec<TrapTableRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse_trap_table(&text)
}

/// Half a unit in the last printed place of a decimal string.
pub fn rounding_half_unit(printed: &str) -> f64 {
    let t = printed.trim().trim_start_matches('-');
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(p) => (&t[..p], t[p + 1..].parse::<i32>().unwrap_or(0)),
        None => (t, 0),
    };
    let decimals = mantissa.split_once('.').map(|(_, f)| f.len() as i32).unwrap_or(0);
    0.5 * 10f64.powi(exp - decimals)
}

/// Anisotropy recomputed from printed frequencies, with the interval the
/// printed rounding allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCheck {
    pub tabulated: f64,
    pub computed: f64,
    pub lower: f64,
    pub upper: f64,
    /// Tabulated value (± its own rounding) overlaps `[lower, upper]`.
    pub consistent: bool,
}

pub fn check_alpha(nu_z: f64, dz: f64, nu_r: f64, dr: f64, alpha: f64, da: f64) -> AlphaCheck {
    let computed = (nu_z / nu_r).powi(2);
    let lower = ((nu_z - dz) / (nu_r + dr)).powi(2);
    let upper = ((nu_z + dz) / (nu_r - dr)).powi(2);
    AlphaCheck {
        tabulated: alpha,
        computed,
        lower,
        upper,
        consistent: alpha + da >= lower && alpha - da <= upper,
    }
}

/// Checks `alpha_x` and `alpha_y` of every row against the printed
/// frequencies, honoring the printed precision of each column.
pub fn table_consistency(text: &str) -> Result<Vec<[AlphaCheck; 2]>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::config(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("table has no column '{name}'")))
    };
    let cols = [col("nu_z_mhz")?, col("nu_x_mhz")?, col("nu_y_mhz")?, col("alpha_x")?, col("alpha_y")?];
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(format!("table row {}: {e}", i + 1)))?;
        let field = |c: usize| -> Result<(f64, f64), CliError> {
            let s = &rec[c];
            let v = s
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("table row {}: '{s}' is not a number", i + 1)))?;
            Ok((v, rounding_half_unit(s)))
        };
        let (z, dz) = field(cols[0])?;
        let (x, dx) = field(cols[1])?;
        let (y, dy) = field(cols[2])?;
        let (ax, dax) = field(cols[3])?;
        let (ay, day) = field(cols[4])?;
        out.push([check_alpha(z, dz, x, dx, ax, dax), check_alpha(z, dz, y, dy, ay, day)]);
    }
    Ok(out)
}
