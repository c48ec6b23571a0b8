use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

/// Largest system handled by the exhaustive search.
pub const MAX_EXHAUSTIVE_SPINS: usize = 26;
/// Minima within this fraction of the energy scale are degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;
/// Ground states stored by default.
pub const DEFAULT_STATE_CAP: usize = 1024;
/// Low bits enumerated per work unit.
const CHUNK_BITS: usize = 16;
/// Screening window for incrementally updated energies.
const SCREEN_WINDOW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub spins: Vec<i8>,
    /// E/ħ in rad/s.
    pub energy: f64,
}

fn check_spins(n: usize, spins: &[i8]) -> Result<()> {
    if spins.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: spins.len(),
        });
    }
    if spins.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter("spins must be ±1".into()));
    }
    Ok(())
}

/// `E/ħ = −½ Σ_{n<m} J_nm s_n s_m` for a plain matrix.
pub fn ising_energy_matrix(j: &DMatrix<f64>, spins: &[i8]) -> Result<f64> {
    check_spins(j.nrows(), spins)?;
    Ok(energy_unchecked(j, spins.iter().map(|&s| s as f64)))
}

/// `E/ħ = −½ Σ_{n<m} J_nm s_n s_m` (rad/s).
pub fn ising_energy(j: &CouplingMatrix, spins: &[i8]) -> Result<f64> {
    ising_energy_matrix(&j.j, spins)
}

fn energy_unchecked(j: &DMatrix<f64>, spins: impl Iterator<Item = f64>) -> f64 {
    let s: Vec<f64> = spins.collect();
    let n = s.len();
    let mut e = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in a + 1..n {
            row += j[(a, b)] * s[b];
        }
        e += s[a] * row;
    }
    -0.5 * e
}

#[inline]
fn spin(state: u32, i: usize) -> f64 {
    if state >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn exact_energy(j: &DMatrix<f64>, state: u32) -> f64 {
    energy_unchecked(j, (0..j.nrows()).map(|i| spin(state, i)))
}

fn to_spins(state: u32, n: usize) -> Vec<i8> {
    (0..n).map(|i| spin(state, i) as i8).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    /// E/ħ of the minimum (rad/s).
    pub energy: f64,
    /// Minimizing configurations with spin 0 = +1, sorted; at most the cap.
    pub configurations: Vec<SpinConfiguration>,
    /// Number of minimizing configurations up to global flip.
    pub degeneracy: u64,
    /// More minima exist than were stored.
    pub truncated: bool,
}

impl GroundState {
    /// Degeneracy counting both members of each flip pair.
    pub fn degeneracy_with_flip(&self) -> u64 {
        2 * self.degeneracy
    }
}

/// Gray-code walk over one chunk of states. `visit(incremental_energy, state)`.
fn walk_chunk(j: &DMatrix<f64>, n: usize, low_bits: usize, chunk: u32, mut visit: impl FnMut(f64, u32)) {
    // Bits 1..n of the state are free; spin 0 stays +1.
    let base = chunk << (low_bits + 1);
    let mut state = base;
    let mut h: Vec<f64> = (0..n)
        .map(|a| (0..n).filter(|&b| b != a).map(|b| j[(a, b)] * spin(state, b)).sum())
        .collect();
    let mut e = exact_energy(j, state);
    visit(e, state);
    for t in 1u32..(1u32 << low_bits) {
        let i = 1 + t.trailing_zeros() as usize;
        let si = spin(state, i);
        e += si * h[i];
        state ^= 1 << i;
        for (m, hm) in h.iter_mut().enumerate() {
            if m != i {
                *hm -= 2.0 * si * j[(m, i)];
            }
        }
        visit(e, state);
    }
}

/// Exhaustive ground-state search over all `2^(N−1)` configurations with
/// spin 0 fixed to +1, storing at most `cap` minimizers.
pub fn ground_state_with_cap(j: &DMatrix<f64>, cap: usize) -> Result<GroundState> {
    let n = j.nrows();
    if n == 0 {
        return Err(Error::InvalidParameter("empty coupling matrix".into()));
    }
    if n > MAX_EXHAUSTIVE_SPINS {
        return Err(Error::TooManySpins {
            count: n,
            max: MAX_EXHAUSTIVE_SPINS,
        });
    }
    if j.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: j.ncols(),
        });
    }
    let mut scale = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            scale += 0.5 * j[(a, b)].abs();
        }
    }
    let tol = DEGENERACY_TOLERANCE * scale;
    let window = SCREEN_WINDOW * scale;
    let free = n - 1;
    let low_bits = free.min(CHUNK_BITS);
    let chunks = 1u32 << (free - low_bits);

    // Pass 1: exact minimum.
    let emin = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut best_inc = f64::INFINITY;
            let mut best_exact = f64::INFINITY;
            walk_chunk(j, n, low_bits, c, |e, s| {
                if e <= best_inc + window {
                    best_inc = best_inc.min(e);
                    best_exact = best_exact.min(exact_energy(j, s));
                }
            });
            best_exact
        })
        .reduce(|| f64::INFINITY, f64::min);

    // Pass 2: every state within tolerance of the minimum.
    let threshold = emin + tol;
    let per_chunk: Vec<(u64, Vec<u32>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut count = 0u64;
            let mut states = Vec::new();
            walk_chunk(j, n, low_bits, c, |e, s| {
                if e > threshold + window {
                    return;
                }
                if e <= threshold - window || exact_energy(j, s) <= threshold {
                    count += 1;
                    if states.len() < cap {
                        states.push(s);
                    }
                }
            });
            (count, states)
        })
        .collect();

    let degeneracy = per_chunk.iter().map(|(c, _)| c).sum();
    let mut states: Vec<u32> = per_chunk.into_iter().flat_map(|(_, s)| s).collect();
    states.sort_unstable();
    states.truncate(cap);
    let configurations = states
        .iter()
        .map(|&s| SpinConfiguration {
            spins: to_spins(s, n),
            energy: exact_energy(j, s),
        })
        .collect::<Vec<_>>();
    Ok(GroundState {
        energy: emin,
        truncated: (configurations.len() as u64) < degeneracy,
        configurations,
        degeneracy,
    })
}

/// All minimizing configurations of `J` (up to global flip).
pub fn ground_state(j: &CouplingMatrix) -> Result<GroundState> {
    ground_state_with_cap(&j.j, DEFAULT_STATE_CAP)
}

/// Fraction of nonvanishing bonds with `J_nm s_n s_m < 0` in `spins`.
pub fn unsatisfied_fraction(j: &DMatrix<f64>, spins: &[i8]) -> Result<f64> {
    check_spins(j.nrows(), spins)?;
    let n = spins.len();
    let max = j.amax();
    let mut bonds = 0usize;
    let mut bad = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            let v = j[(a, b)];
            if v.abs() <= 1e-12 * max || v == 0.0 {
                continue;
            }
            bonds += 1;
            if v * f64::from(spins[a] * spins[b]) < 0.0 {
                bad += 1;
            }
        }
    }
    Ok(if bonds == 0 { 0.0 } else { bad as f64 / bonds as f64 })
}
