//! The four subcommands, evaluated over an optional parameter scan.

use std::f64::consts::PI;

use magic_core::constants::ADVISORY_MAX_SUSTAINED_CURRENT;
use magic_core::coupling::{coupling_matrix_with, BlockStats, CouplingOptions};
use magic_core::crystal::{stability_report, Axis};
use magic_core::magnetics::{gradient_profile, FieldSource};
use magic_core::spin::{classify_order, frustration_report, ground_state_with_cap};
use magic_core::{ChainLayout, Error, CircuitGeometry, CouplingMatrix, CrystalState, GradientSpec, TrapSpec};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{radial_hz, ExperimentConfig, GradientConfig, ScanParameter};
use crate::error::{CliError, ErrorKind};
use crate::output::{cell, num, nums, object, to_csv_string};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Modes,
    Couple,
    Field,
    GroundState,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Couple => "couple",
            Command::Field => "field",
            Command::GroundState => "ground-state",
        }
    }
}

/// Result of one command over all scan points.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub json: Value,
    pub csv: String,
    /// Failed scan points.
    pub failures: Vec<(usize, CliError)>,
}

impl Artifact {
    /// 0 on success, 3 if any point failed numerically, 2 if points failed
    /// only on invalid input.
    pub fn exit_code(&self) -> i32 {
        self.failures.iter().map(|(_, e)| e.exit_code()).max().unwrap_or(0)
    }
}

struct Point {
    json: Value,
    rows: Vec<Vec<String>>,
}

/// Runs `command` on a validated config.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    cfg.validate()?;
    let scan_values: Vec<Option<(ScanParameter, f64)>> = match &cfg.scan {
        Some(s) => s.values().into_iter().map(|v| Some((s.parameter, v))).collect(),
        None => vec![None],
    };
    let header = match command {
        Command::Modes => {
            cfg.trap_config()?;
            modes_header()
        }
        Command::Couple => {
            cfg.trap_config()?;
            gradient_config(cfg)?;
            couple_header()
        }
        Command::GroundState => {
            cfg.trap_config()?;
            gradient_config(cfg)?;
            ground_state_header()
        }
        Command::Field => {
            if cfg.scan.is_some() {
                return Err(CliError::config("field does not support scans"));
            }
            cfg.field.as_ref().ok_or_else(|| CliError::config("field needs a [field] section"))?;
            field_header()
        }
    };

    let results: Vec<Result<Point, CliError>> = scan_values
        .par_iter()
        .map(|&scan| match command {
            Command::Modes => modes_point(cfg, scan),
            Command::Couple => couple_point(cfg, scan),
            Command::GroundState => ground_state_point(cfg, scan),
            Command::Field => field_point(cfg),
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, (scan, result)) in scan_values.iter().zip(results).enumerate() {
        let scan_json = match scan {
            Some((p, v)) => object([("parameter", Value::String(p.name().into())), ("value", num(*v))]),
            None => Value::Null,
        };
        let (scan_name, scan_cell) = match scan {
            Some((p, v)) => (p.name().to_string(), cell(*v)),
            None => (String::new(), String::new()),
        };
        match result {
            Ok(p) => {
                for r in p.rows {
                    let mut full = vec![scan_name.clone(), scan_cell.clone()];
                    full.extend(r);
                    rows.push(full);
                }
                points.push(object([("index", Value::from(i)), ("scan", scan_json), ("result", p.json)]));
            }
            Err(e) => {
                points.push(object([
                    ("index", Value::from(i)),
                    ("scan", scan_json),
                    (
                        "error",
                        object([
                            ("kind", Value::String(e.kind_name().into())),
                            ("message", Value::String(e.message.clone())),
                        ]),
                    ),
                ]));
                failures.push((i, e));
            }
        }
    }
    // The output path is where this artifact goes, not part of what it describes.
    let mut embedded = cfg.clone();
    embedded.output.path = None;
    let config = serde_json::to_value(&embedded).map_err(|e| CliError::config(e.to_string()))?;
    let json = object([
        ("artifact", Value::String("magic-design".into())),
        ("command", Value::String(command.name().into())),
        ("config", config),
        ("points", Value::Array(points)),
        ("failed_points", Value::from(failures.len())),
    ]);
    let mut full_header = vec!["scan_parameter".to_string(), "scan_value".to_string()];
    full_header.extend(header);
    Ok(Artifact {
        json,
        csv: to_csv_string(&full_header, &rows),
        failures,
    })
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn vec3(v: &Vector3<f64>) -> Value {
    nums(v.iter().copied())
}

fn trap_json(trap: &TrapSpec) -> Value {
    let (nu_x, nu_y) = radial_hz(trap);
    let (d, shift) = match trap.layout {
        ChainLayout::Single => (Value::Null, Value::Null),
        ChainLayout::Double {
            separation,
            axial_shift,
        } => (num(separation), num(axial_shift)),
    };
    object([
        ("species", Value::String(trap.species.label.clone())),
        ("mass_kg", num(trap.species.mass)),
        ("charge_c", num(trap.species.charge)),
        ("lande_g", num(trap.species.lande_g)),
        ("omega_z_hz", num(trap.omega_z / (2.0 * PI))),
        ("nu_x_hz", num(nu_x)),
        ("nu_y_hz", num(nu_y)),
        ("alpha_x", num(trap.alpha_x)),
        ("alpha_y", num(trap.alpha_y)),
        ("chains", Value::from(trap.chain_count())),
        ("ions_per_chain", Value::from(trap.ions_per_chain)),
        ("d_m", d),
        ("axial_shift_m", shift),
        ("scale_length_m", num(trap.scale_length())),
    ])
}

/// Matrix index to (chain, ion), both counted from 0.
fn legend(trap: &TrapSpec) -> Value {
    Value::Array(
        (0..trap.total_ions())
            .map(|i| {
                let (c, k) = trap.ion_label(i);
                object([("index", Value::from(i)), ("chain", Value::from(c)), ("ion", Value::from(k))])
            })
            .collect(),
    )
}

fn crystal_json(state: &CrystalState) -> Value {
    object([
        ("positions_m", Value::Array(state.positions.iter().map(vec3).collect())),
        ("equilibrium_residual", num(state.residual)),
        ("is_saddle", Value::Bool(state.is_saddle)),
        ("is_stable", Value::Bool(state.is_stable())),
    ])
}

fn build_state(cfg: &ExperimentConfig, scan: Option<(ScanParameter, f64)>) -> Result<CrystalState, CliError> {
    let trap = cfg.trap_config()?.build(scan)?;
    Ok(CrystalState::new(&trap)?)
}

fn modes_header() -> Vec<String> {
    strings(&[
        "mode",
        "frequency_hz",
        "frequency_reduced",
        "eigenvalue",
        "imaginary",
        "weight_x",
        "weight_y",
        "weight_z",
        "axis",
        "ion",
        "chain",
        "component",
    ])
}

fn modes_point(cfg: &ExperimentConfig, scan: Option<(ScanParameter, f64)>) -> Result<Point, CliError> {
    let state = build_state(cfg, scan)?;
    let trap = &state.trap;
    let stability = stability_report(trap)?;
    let k = state.ion_count();
    let mut rows = Vec::new();
    let modes: Vec<Value> = state
        .modes
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let w = Axis::ALL.map(|a| m.axis_weight(a));
            for a in Axis::ALL {
                for ion in 0..k {
                    rows.push(vec![
                        i.to_string(),
                        cell(m.frequency_hz),
                        cell(m.frequency_reduced()),
                        cell(m.eigenvalue),
                        m.imaginary.to_string(),
                        cell(w[0]),
                        cell(w[1]),
                        cell(w[2]),
                        format!("{a:?}").to_lowercase(),
                        trap.ion_label(ion).1.to_string(),
                        trap.ion_label(ion).0.to_string(),
                        cell(m.component(ion, a)),
                    ]);
                }
            }
            object([
                ("index", Value::from(i)),
                ("frequency_hz", num(m.frequency_hz)),
                ("frequency_reduced", num(m.frequency_reduced())),
                ("eigenvalue", num(m.eigenvalue)),
                ("imaginary", Value::Bool(m.imaginary)),
                ("axis_weights", object([("x", num(w[0])), ("y", num(w[1])), ("z", num(w[2]))])),
                ("vector", nums(m.vector.iter().copied())),
            ])
        })
        .collect();
    let json = object([
        ("trap", trap_json(trap)),
        ("index", legend(trap)),
        ("crystal", crystal_json(&state)),
        (
            "stability",
            object([
                ("alpha_crit_exact", num(stability.alpha_crit_exact)),
                ("alpha_crit_approx", num(stability.alpha_crit_approx)),
                ("zigzag_frequency_hz", num(stability.zigzag_frequency.hz)),
                ("zigzag_imaginary", Value::Bool(stability.zigzag_frequency.imaginary)),
                ("is_linear_stable", Value::Bool(stability.is_linear_stable)),
            ]),
        ),
        ("vector_layout", Value::String("axis * ions + ion, axes x, y, z".into())),
        ("modes", Value::Array(modes)),
    ]);
    Ok(Point { json, rows })
}

fn gradient_config(cfg: &ExperimentConfig) -> Result<&GradientConfig, CliError> {
    cfg.gradient
        .as_ref()
        .ok_or_else(|| CliError::config("this command needs a [gradient] section"))
}

fn with_currents(geometry: &CircuitGeometry, currents: &std::collections::BTreeMap<String, f64>) -> Result<CircuitGeometry, CliError> {
    let mut g = geometry.clone();
    for (label, i) in currents {
        if g.set_current(label, *i) == 0 {
            return Err(CliError::config(format!("currents_a: no sheet labeled '{label}'")));
        }
    }
    Ok(g)
}

fn current_warnings(geometry: &CircuitGeometry) -> Vec<Value> {
    let mut warn = Vec::new();
    for s in &geometry.sheets {
        if s.current.abs() > ADVISORY_MAX_SUSTAINED_CURRENT {
            warn.push(Value::String(format!(
                "sheet {} carries {} A, above the advisory sustained limit of {} A",
                s.label.as_deref().unwrap_or("(unlabeled)"),
                s.current,
                ADVISORY_MAX_SUSTAINED_CURRENT
            )));
        }
    }
    for (i, s) in geometry.segments.iter().enumerate() {
        if s.current.abs() > ADVISORY_MAX_SUSTAINED_CURRENT {
            warn.push(Value::String(format!(
                "segment {i} carries {} A, above the advisory sustained limit of {} A",
                s.current, ADVISORY_MAX_SUSTAINED_CURRENT
            )));
        }
    }
    warn
}

/// Gradient for one point plus any advisory warnings.
fn resolve_gradient(
    g: &GradientConfig,
    state: &CrystalState,
    scan: Option<(ScanParameter, f64)>,
) -> Result<(GradientSpec, Vec<Value>), CliError> {
    if let Some(geometry) = &g.geometry_inline {
        if matches!(scan, Some((ScanParameter::B, _))) {
            return Err(CliError::config("scanning b needs a direct gradient (b_t_per_m)"));
        }
        let geometry = with_currents(geometry, &g.currents_a)?;
        let source = FieldSource::new(&geometry)?;
        let center = Vector3::from(g.position_m.expect("validated"));
        let b_center = source.gradient_of_magnitude(&center)?;
        let mut spec = GradientSpec::new(b_center).with_offset(source.field(&center)?.norm());
        if g.sample_per_ion {
            spec.per_ion_override = Some(
                state
                    .positions
                    .iter()
                    .map(|p| source.gradient_of_magnitude(&(center + p)))
                    .collect::<Result<_, _>>()?,
            );
        }
        return Ok((spec, current_warnings(&geometry)));
    }
    let mut spec = GradientSpec::new(Vector3::from(g.b_t_per_m.unwrap_or([0.0; 3]))).with_offset(g.b0_t.unwrap_or(0.0));
    if let Some(per_ion) = &g.per_ion_t_per_m {
        spec.per_ion_override = Some(per_ion.iter().map(|b| Vector3::from(*b)).collect());
    }
    if let Some((ScanParameter::B, v)) = scan {
        let reference = match &spec.per_ion_override {
            Some(p) => p.iter().map(|b| b.norm()).fold(0.0, f64::max),
            None => spec.b_vector.norm(),
        };
        if reference == 0.0 {
            return Err(CliError::config("scanning b needs a nonzero gradient direction"));
        }
        spec = spec.scaled(v / reference);
    }
    Ok((spec, Vec::new()))
}

fn coupling_for(
    cfg: &ExperimentConfig,
    scan: Option<(ScanParameter, f64)>,
) -> Result<(CrystalState, CouplingMatrix, Vec<Value>), CliError> {
    let state = build_state(cfg, scan)?;
    let (grad, warnings) = resolve_gradient(gradient_config(cfg)?, &state, scan)?;
    let opts = CouplingOptions {
        condition_limit: cfg.solver.condition_limit,
    };
    let j = coupling_matrix_with(&state, &grad, &opts).map_err(|e| {
        let soft = matches!(e, Error::SoftMode { .. } | Error::IllConditioned { .. });
        let mut err = CliError::from(e);
        if soft {
            err.message = format!("{} at alpha_x = {}", err.message, state.trap.alpha_x);
        }
        err
    })?;
    Ok((state, j, warnings))
}

fn stats_json(s: &BlockStats) -> Value {
    object([
        ("max_abs_rad_s", num(s.max_abs)),
        ("max_abs_hz", num(s.max_abs_hz())),
        ("dominant_sign", Value::from(s.dominant_sign)),
        ("positive", Value::from(s.positive)),
        ("negative", Value::from(s.negative)),
    ])
}

fn gradient_json(j: &CouplingMatrix) -> Value {
    let per_ion = j.gradient.per_ion(j.size()).unwrap_or_default();
    object([
        ("b_t_per_m", vec3(&j.gradient.b_vector)),
        ("b0_t", num(j.gradient.b0)),
        ("per_ion_t_per_m", Value::Array(per_ion.iter().map(vec3).collect())),
    ])
}

fn coupling_json(j: &CouplingMatrix) -> Value {
    let rows = |m: &nalgebra::DMatrix<f64>| Value::Array(m.row_iter().map(|r| nums(r.iter().copied())).collect());
    let blocks = match j.block_summary() {
        Some(b) => object([
            ("intra", stats_json(&b.intra)),
            ("inter", stats_json(&b.inter)),
            ("ratio", num(b.ratio())),
        ]),
        None => Value::Null,
    };
    object([
        ("j_rad_s", rows(&j.j)),
        ("j_hz", rows(&j.j_hz())),
        ("max_abs_hz", num(j.max_abs_hz())),
        ("max_nearest_neighbor_hz", num(j.max_nearest_neighbor() / (2.0 * PI))),
        ("sign_pattern", serde_json::to_value(j.sign_pattern()).expect("enum serializes")),
        ("sign_convention", Value::String(j.sign_convention.clone())),
        ("blocks", blocks),
    ])
}

fn couple_header() -> Vec<String> {
    strings(&["row", "col", "row_chain", "row_ion", "col_chain", "col_ion", "j_rad_s", "j_hz"])
}

fn couple_point(cfg: &ExperimentConfig, scan: Option<(ScanParameter, f64)>) -> Result<Point, CliError> {
    let (state, j, warnings) = coupling_for(cfg, scan)?;
    let trap = &state.trap;
    let mut rows = Vec::new();
    for a in 0..j.size() {
        for b in 0..j.size() {
            let (ca, ia) = trap.ion_label(a);
            let (cb, ib) = trap.ion_label(b);
            rows.push(vec![
                a.to_string(),
                b.to_string(),
                ca.to_string(),
                ia.to_string(),
                cb.to_string(),
                ib.to_string(),
                cell(j.j[(a, b)]),
                cell(j.j[(a, b)] / (2.0 * PI)),
            ]);
        }
    }
    let json = object([
        ("trap", trap_json(trap)),
        ("index", legend(trap)),
        ("crystal", crystal_json(&state)),
        ("gradient", gradient_json(&j)),
        ("coupling", coupling_json(&j)),
        ("warnings", Value::Array(warnings)),
    ]);
    Ok(Point { json, rows })
}

fn ground_state_header() -> Vec<String> {
    strings(&["configuration", "energy_rad_s", "spins", "order", "degeneracy", "truncated"])
}

fn spin_string(spins: &[i8]) -> String {
    spins.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn ground_state_point(cfg: &ExperimentConfig, scan: Option<(ScanParameter, f64)>) -> Result<Point, CliError> {
    let (state, j, warnings) = coupling_for(cfg, scan)?;
    let trap = &state.trap;
    let cap = cfg.solver.state_cap;
    let (gs, frustration) = if trap.chain_count() == 2 {
        let f = frustration_report(&j)?;
        let summary = object([
            ("ratio", num(f.ratio)),
            ("intra", stats_json(&f.intra)),
            ("inter", stats_json(&f.inter)),
            ("extra_degeneracy", Value::from(f.extra_degeneracy)),
            ("unsatisfied_fraction", num(f.unsatisfied_fraction)),
            ("min_triple_asymmetry", num(f.min_triple_asymmetry)),
        ]);
        let mut gs = f.ground_state;
        if gs.configurations.len() > cap {
            gs.configurations.truncate(cap);
            gs.truncated = true;
        }
        (gs, summary)
    } else {
        (ground_state_with_cap(&j.j, cap)?, Value::Null)
    };
    let n = trap.ions_per_chain;
    let mut rows = Vec::new();
    let configurations: Vec<Value> = gs
        .configurations
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let order = classify_order(&c.spins, n);
            let order_json = serde_json::to_value(order).expect("enum serializes");
            rows.push(vec![
                i.to_string(),
                cell(c.energy),
                spin_string(&c.spins),
                order_json.as_str().unwrap_or_default().to_string(),
                gs.degeneracy.to_string(),
                gs.truncated.to_string(),
            ]);
            object([
                ("spins", Value::Array(c.spins.iter().map(|&s| Value::from(s)).collect())),
                ("energy_rad_s", num(c.energy)),
                ("order", order_json),
            ])
        })
        .collect();
    let json = object([
        ("trap", trap_json(trap)),
        ("index", legend(trap)),
        ("gradient", gradient_json(&j)),
        ("coupling", coupling_json(&j)),
        (
            "ground_state",
            object([
                ("energy_rad_s", num(gs.energy)),
                ("degeneracy", Value::from(gs.degeneracy)),
                ("degeneracy_with_flip", Value::from(gs.degeneracy_with_flip())),
                ("truncated", Value::Bool(gs.truncated)),
                ("configurations", Value::Array(configurations)),
            ]),
        ),
        ("frustration", frustration),
        ("warnings", Value::Array(warnings)),
    ]);
    Ok(Point { json, rows })
}

fn field_header() -> Vec<String> {
    strings(&[
        "coordinate_m",
        "x_m",
        "y_m",
        "z_m",
        "bx_t",
        "by_t",
        "bz_t",
        "b_abs_t",
        "grad_x_t_per_m",
        "grad_y_t_per_m",
        "grad_z_t_per_m",
    ])
}

fn field_point(cfg: &ExperimentConfig) -> Result<Point, CliError> {
    let f = cfg.field.as_ref().expect("checked by run");
    let mut geometry = with_currents(f.geometry_inline.as_ref().expect("validated"), &f.currents_a)?;
    if let Some(n) = f.filaments {
        geometry = geometry.with_filaments(n);
    }
    let origin = Vector3::from(f.origin_m);
    let profile = gradient_profile(f.axis, (f.start_m, f.stop_m), f.samples, &origin, &geometry)?;
    let mut rows = Vec::new();
    let mut peak = [0.0f64; 3];
    let samples: Vec<Value> = profile
        .iter()
        .map(|s| {
            let g = s.gradient.map(|g| [g.x, g.y, g.z]);
            if let Some(g) = g {
                for i in 0..3 {
                    peak[i] = peak[i].max(g[i].abs());
                }
            }
            let mut row = vec![cell(s.coordinate)];
            row.extend(s.position.iter().map(|&v| cell(v)));
            row.extend(s.field.iter().map(|&v| cell(v)));
            row.push(cell(s.magnitude));
            row.extend((0..3).map(|i| g.map(|g| cell(g[i])).unwrap_or_default()));
            rows.push(row);
            object([
                ("coordinate_m", num(s.coordinate)),
                ("position_m", vec3(&s.position)),
                ("b_t", vec3(&s.field)),
                ("b_abs_t", num(s.magnitude)),
                ("grad_abs_b_t_per_m", s.gradient.as_ref().map(vec3).unwrap_or(Value::Null)),
            ])
        })
        .collect();
    let json = object([
        ("axis", serde_json::to_value(f.axis).expect("enum serializes")),
        ("filaments", Value::from(geometry.filaments().len())),
        ("peak_abs_gradient_t_per_m", nums(peak)),
        ("samples", Value::Array(samples)),
        ("warnings", Value::Array(current_warnings(&geometry))),
    ]);
    Ok(Point { json, rows })
}

/// True when the error is a configuration problem.
pub fn is_config_error(e: &CliError) -> bool {
    e.kind == ErrorKind::Config
}
