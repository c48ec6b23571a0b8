//! Experiment configuration files.
//!
//! Units are carried in key names: `_hz` ordinary frequency, `_m` meters,
//! `_t` tesla, `_t_per_m` tesla per meter, `_a` amperes.

use std::collections::BTreeMap;
use std::path::Path;

use magic_core::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};
use magic_core::crystal::{anisotropy, linear_chain_positions, radial_frequency, Axis};
use magic_core::magnetics::CircuitGeometry;
use magic_core::{ChainLayout, IonSpecies, TrapSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::CliError;

/// Relative mismatch tolerated when both α and the radial frequency are given.
const ALPHA_CONSISTENCY: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    /// "40Ca+" unless `mass_amu` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<String>,
    /// Ion mass in atomic mass units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    /// Charge in units of e (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_e: Option<f64>,
    /// Landé factor (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lande_g: Option<f64>,
    /// Axial trap frequency ω_z/2π.
    pub omega_z_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_y: Option<f64>,
    /// Radial frequencies ω_x/2π, ω_y/2π (alternative to α).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_x_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_y_hz: Option<f64>,
    #[serde(default = "one")]
    pub chains: usize,
    pub ions_per_chain: usize,
    /// Distance between the two trap centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_shift_m: Option<f64>,
    /// Axial shift in units of the central ion spacing of a single chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_shift_spacings: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientConfig {
    /// Direct gradient of |B|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_t_per_m: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0_t: Option<f64>,
    /// Per-ion gradients overriding `b_t_per_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_ion_t_per_m: Option<Vec<[f64; 3]>>,
    /// Geometry file evaluated at `position_m` (path relative to the config).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_inline: Option<CircuitGeometry>,
    /// Sheet currents by label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub currents_a: BTreeMap<String, f64>,
    /// Crystal center in chip coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_m: Option<[f64; 3]>,
    /// Sample the geometry at every ion instead of the crystal center.
    #[serde(default)]
    pub sample_per_ion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_inline: Option<CircuitGeometry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub currents_a: BTreeMap<String, f64>,
    /// Filament count override for every sheet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filaments: Option<usize>,
    pub axis: Axis,
    pub start_m: f64,
    pub stop_m: f64,
    pub samples: usize,
    /// Point the sweep passes through.
    pub origin_m: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    AlphaX,
    D,
    B,
    OmegaZ,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::AlphaX => "alpha_x",
            ScanParameter::D => "d",
            ScanParameter::B => "b",
            ScanParameter::OmegaZ => "omega_z",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "alpha_x" => Ok(ScanParameter::AlphaX),
            "d" => Ok(ScanParameter::D),
            "b" => Ok(ScanParameter::B),
            "omega_z" => Ok(ScanParameter::OmegaZ),
            _ => Err(CliError::config(format!(
                "unknown scan parameter '{s}' (expected alpha_x, d, b or omega_z)"
            ))),
        }
    }
}

/// Linear scan, endpoints included. `d` is in m, `b` in T/m, `omega_z` in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub parameter: ScanParameter,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanConfig {
    /// Parses `key=start:stop:steps`.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (key, range) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--scan expects key=start:stop:steps, got '{spec}'")))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!("--scan expects key=start:stop:steps, got '{spec}'")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("--scan: '{s}' is not a number")))
        };
        let scan = ScanConfig {
            parameter: ScanParameter::parse(key.trim())?,
            start: num(parts[0])?,
            stop: num(parts[1])?,
            steps: parts[2]
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("--scan: '{}' is not a step count", parts[2])))?,
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::config("scan: start and stop must be finite"));
        }
        if self.stop < self.start {
            return Err(CliError::config("scan: stop must not be below start"));
        }
        if self.steps == 0 {
            return Err(CliError::config("scan: steps must be at least 1"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Hessian condition-number limit for coupling matrices.
    #[serde(default = "default_condition_limit")]
    pub condition_limit: f64,
    /// Ground states stored per point.
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
}

fn default_condition_limit() -> f64 {
    magic_core::coupling::DEFAULT_CONDITION_LIMIT
}

fn default_state_cap() -> usize {
    64
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            condition_limit: default_condition_limit(),
            state_cap: default_state_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    /// Reads a TOML config, a JSON config, or a JSON artifact (its embedded
    /// `config` is used). Geometry paths are resolved relative to the file
    /// and inlined.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let mut cfg = if is_json {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.inline_geometries(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        let value = match value.get("config") {
            Some(c) if value.get("artifact").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::config(format!("config: {e}")))
    }

    fn inline_geometries(&mut self, base: &Path) -> Result<(), CliError> {
        let load = |p: &str| -> Result<CircuitGeometry, CliError> {
            let full = base.join(p);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::config(format!("cannot read geometry {}: {e}", full.display())))?;
            CircuitGeometry::from_toml_str(&text)
                .map_err(|e| CliError::config(format!("geometry {}: {e}", full.display())))
        };
        if let Some(g) = &mut self.gradient {
            if let Some(p) = g.geometry.take() {
                if g.geometry_inline.is_some() {
                    return Err(CliError::config("gradient: give either geometry or geometry_inline"));
                }
                g.geometry_inline = Some(load(&p)?);
            }
        }
        if let Some(f) = &mut self.field {
            if let Some(p) = f.geometry.take() {
                if f.geometry_inline.is_some() {
                    return Err(CliError::config("field: give either geometry or geometry_inline"));
                }
                f.geometry_inline = Some(load(&p)?);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.scan {
            s.validate()?;
        }
        if let Some(g) = &self.gradient {
            let direct = g.b_t_per_m.is_some() || g.per_ion_t_per_m.is_some();
            let geometric = g.geometry.is_some() || g.geometry_inline.is_some();
            if direct == geometric {
                return Err(CliError::config(
                    "gradient: give exactly one of b_t_per_m/per_ion_t_per_m or a geometry",
                ));
            }
            if geometric && g.position_m.is_none() {
                return Err(CliError::config("gradient.position_m is required with a geometry"));
            }
        }
        if let Some(f) = &self.field {
            if f.geometry.is_none() && f.geometry_inline.is_none() {
                return Err(CliError::config("field.geometry is required"));
            }
            if f.samples < 2 {
                return Err(CliError::config("field.samples must be at least 2"));
            }
            if !(f.start_m.is_finite() && f.stop_m.is_finite()) || f.stop_m < f.start_m {
                return Err(CliError::config("field: start_m and stop_m must be finite and ordered"));
            }
        }
        if let Some(t) = &self.trap {
            t.species()?;
            if t.chains != 1 && t.chains != 2 {
                return Err(CliError::config("trap.chains must be 1 or 2"));
            }
            if t.chains == 2 && t.d_m.is_none() {
                return Err(CliError::config("trap.d_m is required for two chains"));
            }
            if t.axial_shift_m.is_some() && t.axial_shift_spacings.is_some() {
                return Err(CliError::config("trap: give axial_shift_m or axial_shift_spacings, not both"));
            }
        }
        Ok(())
    }

    pub fn trap_config(&self) -> Result<&TrapConfig, CliError> {
        self.trap.as_ref().ok_or_else(|| CliError::config("missing [trap] section"))
    }
}

impl TrapConfig {
    pub fn species(&self) -> Result<IonSpecies, CliError> {
        let mut sp = match (self.species.as_deref(), self.mass_amu) {
            (_, Some(m)) => IonSpecies {
                mass: m * ATOMIC_MASS_UNIT,
                charge: ELEMENTARY_CHARGE,
                lande_g: 2.0,
                label: self.species.clone().unwrap_or_else(|| "custom".into()),
            },
            (None | Some("40Ca+") | Some("Ca40+"), None) => IonSpecies::calcium40(),
            (Some(other), None) => {
                return Err(CliError::config(format!(
                    "trap.species '{other}' is not built in; give trap.mass_amu"
                )))
            }
        };
        if let Some(q) = self.charge_e {
            sp.charge = q * ELEMENTARY_CHARGE;
        }
        if let Some(g) = self.lande_g {
            sp.lande_g = g;
        }
        sp.validate().map_err(|e| CliError::config(format!("trap: {e}")))?;
        Ok(sp)
    }

    fn alpha(&self, key: &str, alpha: Option<f64>, nu: Option<f64>) -> Result<f64, CliError> {
        match (alpha, nu) {
            (Some(a), None) => Ok(a),
            (None, Some(n)) => Ok(anisotropy(self.omega_z_hz, n)),
            (Some(a), Some(n)) => {
                let b = anisotropy(self.omega_z_hz, n);
                if ((a - b) / a).abs() > ALPHA_CONSISTENCY {
                    Err(CliError::config(format!(
                        "trap: alpha_{key} = {a} disagrees with nu_{key}_hz (gives {b})"
                    )))
                } else {
                    Ok(a)
                }
            }
            (None, None) => Err(CliError::config(format!("trap: give alpha_{key} or nu_{key}_hz"))),
        }
    }

    /// Builds the trap, applying an optional scan value.
    pub fn build(&self, scan: Option<(ScanParameter, f64)>) -> Result<TrapSpec, CliError> {
        let mut cfg = self.clone();
        match scan {
            Some((ScanParameter::AlphaX, v)) => {
                cfg.alpha_x = Some(v);
                cfg.nu_x_hz = None;
            }
            Some((ScanParameter::D, v)) => cfg.d_m = Some(v),
            Some((ScanParameter::OmegaZ, v)) => cfg.omega_z_hz = v,
            _ => {}
        }
        if cfg.omega_z_hz.is_nan() || cfg.omega_z_hz <= 0.0 {
            return Err(CliError::config("trap.omega_z_hz must be positive"));
        }
        let species = cfg.species()?;
        let alpha_x = cfg.alpha("x", cfg.alpha_x, cfg.nu_x_hz)?;
        let alpha_y = cfg.alpha("y", cfg.alpha_y, cfg.nu_y_hz)?;
        let mut trap = TrapSpec::single_chain(species, 2.0 * PI * cfg.omega_z_hz, alpha_x, alpha_y, cfg.ions_per_chain);
        if cfg.chains == 2 {
            let shift = match (cfg.axial_shift_m, cfg.axial_shift_spacings) {
                (Some(s), _) => s,
                (None, Some(f)) => f * central_spacing(cfg.ions_per_chain)? * trap.scale_length(),
                (None, None) => 0.0,
            };
            trap.layout = ChainLayout::Double {
                separation: cfg.d_m.ok_or_else(|| CliError::config("trap.d_m is required for two chains"))?,
                axial_shift: shift,
            };
        }
        trap.validate().map_err(|e| CliError::config(format!("trap: {e}")))?;
        Ok(trap)
    }
}

/// Spacing of the two central ions of a single chain, in units of l.
pub fn central_spacing(n: usize) -> Result<f64, CliError> {
    if n < 2 {
        return Err(CliError::config("an axial shift in spacings needs at least two ions per chain"));
    }
    let z = linear_chain_positions(n).map_err(CliError::from)?;
    Ok(z[n / 2] - z[n / 2 - 1])
}

/// Radial frequencies (Hz) echoed next to the anisotropies.
pub fn radial_hz(trap: &TrapSpec) -> (f64, f64) {
    let nu_z = trap.omega_z / (2.0 * PI);
    (radial_frequency(nu_z, trap.alpha_x), radial_frequency(nu_z, trap.alpha_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[trap]
omega_z_hz = 310e3
alpha_x = 0.0097819
nu_y_hz = 3.2e6
ions_per_chain = 10
"#;

    #[test]
    fn parses_and_builds() {
        let c = ExperimentConfig::from_toml_str(BASIC).unwrap();
        c.validate().unwrap();
        let t = c.trap_config().unwrap().build(None).unwrap();
        assert_eq!(t.alpha_x, 0.0097819);
        assert!((t.alpha_y - (0.31f64 / 3.2).powi(2)).abs() < 1e-15);
        let t2 = c
            .trap_config()
            .unwrap()
            .build(Some((ScanParameter::AlphaX, 0.02)))
            .unwrap();
        assert_eq!(t2.alpha_x, 0.02);
    }

    #[test]
    fn unknown_keys_are_reported() {
        let e = ExperimentConfig::from_toml_str("[trap]\nomega_z = 1.0\n").unwrap_err();
        assert!(e.message.contains("omega_z"), "{}", e.message);
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn inconsistent_alpha_is_rejected() {
        let text = BASIC.replace("alpha_x = 0.0097819", "alpha_x = 0.0097819\nnu_x_hz = 1e6");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(c.trap_config().unwrap().build(None).is_err());
    }

    #[test]
    fn scan_spec() {
        let s = ScanConfig::parse("d=20e-6:200e-6:10").unwrap();
        assert_eq!(s.parameter, ScanParameter::D);
        let v = s.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 20e-6);
        assert_eq!(v[9], 200e-6);
        assert!(ScanConfig::parse("q=1:2:3").is_err());
        assert!(ScanConfig::parse("b=2:1:3").is_err());
        assert!(ScanConfig::parse("b=1:2").is_err());
        assert!(ScanConfig::parse("b=1:inf:2").is_err());
    }

    #[test]
    fn gradient_source_must_be_unique() {
        let text = format!("{BASIC}\n[gradient]\n");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(c.validate().is_err());
    }
}
