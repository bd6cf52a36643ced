//! Sequence design: Phase-1 construction of short cycles from single pulses and
//! Phase-2 composition of cycles into long protocols, both scored against a
//! target evolution and explored by classical search strategies.

mod export;
mod fidelity;
mod phase1;
mod phase2;
mod strategy;

pub use export::{export_winners, WinnerManifest};
pub use fidelity::{fidelity, fidelity_with, reward_phase1, FidelityKind};
pub use phase1::{
    actions_to_sequence, phase1_search, wahuha_actions, Candidate, Phase1Action, Phase1Config, Phase1Env,
    Phase1Outcome, Phase1State, Phase1Target, StepOutcome,
};
pub use phase2::{
    naive_protocol, phase2_extend, projected_reward, Phase2Action, Phase2Config, Phase2Env, Phase2Outcome,
};
pub use strategy::SearchStrategy;
