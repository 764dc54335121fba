use serde::{Deserialize, Serialize};

use super::{validate_state_vector, InvalidReason, Position, Role, Roster, StateVector, WillTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pitch {
    pub length: f64,
    pub width: f64,
}

impl Pitch {
    pub const fn new(length: f64, width: f64) -> Self {
        Pitch { length, width }
    }

    pub fn center(&self) -> Position {
        Position::new(self.length / 2.0, self.width / 2.0)
    }
}

impl Default for Pitch {
    fn default() -> Self {
        Pitch::new(105.0, 68.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsCheck {
    #[default]
    Off,
    Reject,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("proposal deadline {deadline_ms} ms must be shorter than the tick period {period_ms} ms")]
    Deadline { deadline_ms: u32, period_ms: u32 },
    #[error("match must last at least one tick")]
    NoTicks,
    #[error("pitch dimensions must be positive and finite")]
    Pitch,
    #[error("will update rate {0} outside [0, 1]")]
    WillRate(f64),
    #[error("roster is empty")]
    EmptyRoster,
    #[error("will table does not match the roster at agent {0}")]
    WillMismatch(super::AgentId),
    #[error("starting lineup invalid: {0}")]
    Lineup(InvalidReason),
}

/// A match: the agents, the starting lineup, the initial will, and the
/// runtime parameters of the scheduler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub roster: Roster,
    /// `None` means the kickoff lineup for `pitch`.
    pub starting_lineup: Option<StateVector>,
    pub initial_will: WillTable,
    pub tick_period_ms: u32,
    pub proposal_deadline_ms: u32,
    pub match_ticks: u32,
    pub rng_seed: u64,
    pub pitch: Pitch,
    pub bounds_check: BoundsCheck,
    pub will_update_rate: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            roster: Roster::new(),
            starting_lineup: None,
            initial_will: WillTable::new(),
            tick_period_ms: 100,
            proposal_deadline_ms: 80,
            match_ticks: 6000,
            rng_seed: 0,
            pitch: Pitch::default(),
            bounds_check: BoundsCheck::Off,
            will_update_rate: 0.1,
        }
    }
}

impl MatchConfig {
    /// Checks the runtime parameters, ignoring the roster.
    pub fn validate_parameters(&self) -> Result<(), ConfigError> {
        if self.proposal_deadline_ms >= self.tick_period_ms {
            return Err(ConfigError::Deadline {
                deadline_ms: self.proposal_deadline_ms,
                period_ms: self.tick_period_ms,
            });
        }
        if self.match_ticks == 0 {
            return Err(ConfigError::NoTicks);
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.pitch.length) || !positive(self.pitch.width) {
            return Err(ConfigError::Pitch);
        }
        if !(0.0..=1.0).contains(&self.will_update_rate) {
            return Err(ConfigError::WillRate(self.will_update_rate));
        }
        Ok(())
    }

    /// Full check, including roster, will table and lineup.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_parameters()?;
        if self.roster.is_empty() {
            return Err(ConfigError::EmptyRoster);
        }
        for id in self.roster.ids() {
            if self.initial_will.role(id) != self.roster.role_of(id) {
                return Err(ConfigError::WillMismatch(id));
            }
        }
        if let Some((id, _, _)) = self.initial_will.iter().find(|(id, _, _)| !self.roster.contains(*id)) {
            return Err(ConfigError::WillMismatch(id));
        }
        validate_state_vector(&self.lineup(), &self.pitch, self.bounds_check).map_err(ConfigError::Lineup)
    }

    pub fn lineup(&self) -> StateVector {
        self.starting_lineup.unwrap_or_else(|| super::make_kickoff_lineup(&self.pitch))
    }

    pub fn role_of(&self, id: super::AgentId) -> Option<Role> {
        self.roster.role_of(id)
    }
}
