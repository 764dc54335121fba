//! Domain vocabulary: state vectors, roles, rosters, will tables and the
//! match configuration.

mod config;
mod roster;
mod state;
mod will;

pub use config::{BoundsCheck, ConfigError, MatchConfig, Pitch};
pub use roster::{PlayerSlot, Roster, RosterError, MAX_PLAYERS};
pub use state::{
    distance, make_kickoff_lineup, validate_state_vector, InvalidReason, Position, StateVector,
    COORDINATE_COUNT, SQUAD_SIZE,
};
pub use will::{WillError, WillTable, SUM_TOLERANCE};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Side of the match. Home attacks towards `x = pitch.length`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Home,
    Guest,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Guest,
            Team::Guest => Team::Home,
        }
    }

    /// +1 for Home (attacking towards increasing x), -1 for Guest.
    pub fn attack_sign(self) -> f64 {
        match self {
            Team::Home => 1.0,
            Team::Guest => -1.0,
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Team::Home => "home",
            Team::Guest => "guest",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Player,
    Supporter,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Player => "player",
            Role::Supporter => "supporter",
        })
    }
}

/// Identifier handed out by the scheduler when an agent joins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
