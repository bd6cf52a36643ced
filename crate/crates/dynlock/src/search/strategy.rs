use serde::{Deserialize, Serialize};

/// Classical search over discrete action sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SearchStrategy {
    /// Every action sequence of exactly `depth` steps.
    Exhaustive { depth: usize },
    /// Random single-action mutations with Metropolis acceptance on the score.
    StochasticHillClimb { restarts: usize, iterations: usize, temperature: f64, seed: u64 },
    /// Breadth-first expansion keeping the `width` best partial sequences.
    Beam { width: usize },
}

impl SearchStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SearchStrategy::Exhaustive { .. } => "exhaustive",
            SearchStrategy::StochasticHillClimb { .. } => "stochastic_hill_climb",
            SearchStrategy::Beam { .. } => "beam",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SearchStrategy::StochasticHillClimb { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}
