use serde::{Deserialize, Serialize};

use super::ising::{ground_state, unsatisfied_fraction, GroundState};
use crate::coupling::{BlockStats, CouplingMatrix};
use crate::crystal::{solve_equilibrium, ChainLayout};
use crate::error::{Error, Result};

/// Two neighbors in one chain and the closest ion of the other chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub pair: (usize, usize),
    pub apex: usize,
    /// `|d(a, apex) − d(b, apex)| / mean` from the equilibrium positions.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrustrationReport {
    pub intra: BlockStats,
    pub inter: BlockStats,
    /// `max|J_intra| / max|J_inter|`
    pub ratio: f64,
    pub ground_state: GroundState,
    /// Ground-state degeneracy beyond the global flip.
    pub extra_degeneracy: u64,
    /// Fraction of bonds unsatisfied in the first stored ground state.
    pub unsatisfied_fraction: f64,
    pub triples: Vec<Triple>,
    /// Smallest triple asymmetry: only such a triple can be exactly frustrated.
    pub min_triple_asymmetry: f64,
}

/// Block maxima, their ratio, ground-state degeneracy and triangle
/// asymmetries of a two-chain coupling matrix.
pub fn frustration_report(j: &CouplingMatrix) -> Result<FrustrationReport> {
    if !matches!(j.trap.layout, ChainLayout::Double { .. }) {
        return Err(Error::InvalidParameter("frustration analysis needs two chains".into()));
    }
    let summary = j
        .block_summary()
        .ok_or_else(|| Error::InvalidParameter("frustration analysis needs two chains".into()))?;
    let gs = ground_state(j)?;
    let unsatisfied = match gs.configurations.first() {
        Some(c) => unsatisfied_fraction(&j.j, &c.spins)?,
        None => 0.0,
    };

    let eq = solve_equilibrium(&j.trap)?;
    let n = j.trap.ions_per_chain;
    let pos = &eq.positions;
    let mut triples = Vec::new();
    for chain in 0..2 {
        let other = 1 - chain;
        for i in 0..n.saturating_sub(1) {
            let a = chain * n + i;
            let b = a + 1;
            let mid = (pos[a] + pos[b]) * 0.5;
            let apex = (other * n..other * n + n)
                .min_by(|&p, &q| (pos[p] - mid).norm().total_cmp(&(pos[q] - mid).norm()))
                .expect("chain is not empty");
            let da = (pos[a] - pos[apex]).norm();
            let db = (pos[b] - pos[apex]).norm();
            triples.push(Triple {
                pair: (a, b),
                apex,
                asymmetry: (da - db).abs() / (0.5 * (da + db)),
            });
        }
    }
    let min_triple_asymmetry = triples.iter().map(|t| t.asymmetry).fold(f64::INFINITY, f64::min);
    Ok(FrustrationReport {
        intra: summary.intra,
        inter: summary.inter,
        ratio: summary.ratio(),
        extra_degeneracy: gs.degeneracy - 1,
        ground_state: gs,
        unsatisfied_fraction: unsatisfied,
        triples,
        min_triple_asymmetry,
    })
}
