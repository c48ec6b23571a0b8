use serde::{Deserialize, Serialize};

/// Coarse classification of a spin configuration on one or two chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinOrder {
    Ferromagnetic,
    /// Alternating along every chain.
    Neel,
    /// Each chain aligned internally, the two chains opposite.
    ChainAntiAligned,
    Other,
}

/// Classifies `spins` (chain-major, `ions_per_chain` per chain). Up to a
/// global flip, so the classes do not depend on the sign of spin 0.
pub fn classify_order(spins: &[i8], ions_per_chain: usize) -> SpinOrder {
    if spins.is_empty() || ions_per_chain == 0 {
        return SpinOrder::Other;
    }
    if spins.iter().all(|&s| s == spins[0]) {
        return SpinOrder::Ferromagnetic;
    }
    let chains: Vec<&[i8]> = spins.chunks(ions_per_chain).collect();
    if ions_per_chain > 1 && chains.iter().all(|c| c.windows(2).all(|w| w[0] == -w[1])) {
        return SpinOrder::Neel;
    }
    if chains.len() == 2
        && chains.iter().all(|c| c.iter().all(|&s| s == c[0]))
        && chains[0][0] == -chains[1][0]
    {
        return SpinOrder::ChainAntiAligned;
    }
    SpinOrder::Other
}
