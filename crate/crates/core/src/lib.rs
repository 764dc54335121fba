//! Tick-based soccer simulator in which every agent, player or supporter,
//! proposes a complete next state of the match and a central scheduler
//! samples one proposal as the next reality. The draw is weighted by each
//! agent's soccer consciousness: its power of will divided by how far its
//! last proposal landed from what actually happened.

pub mod agent;
pub mod consciousness;
pub mod model;
pub mod net;
mod numeric;
pub mod rng;
pub mod runner;
pub mod scheduler;
pub mod wire;

pub use consciousness::{
    late_filtered_distribution, sample, selection_distribution, soccer_consciousness, update_will, Fallback,
    ScoredProposal, Selection, SelectionDistribution,
};
pub use model::{
    distance, make_kickoff_lineup, validate_state_vector, AgentId, BoundsCheck, MatchConfig, Pitch, Position, Role,
    Roster, StateVector, Team, WillTable,
};
pub use rng::SelectionRng;
pub use scheduler::{Lobby, Scheduler, SupporterBudget, TickRecord, TimedProposal};
