//! The authoritative tick loop.
//!
//! Each tick the scheduler broadcasts the current reality, collects whole
//! world proposals until the deadline, scores the agents that were on time
//! now and on the previous tick, draws one proposal as the next reality and
//! updates the power of will. It never computes a state itself: the next
//! reality is always some agent's proposal or the current one repeated.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::consciousness::{
    sample, selection_distribution, soccer_consciousness, update_will, ScoreError, ScoredProposal, ScoringInput,
    Selection, SelectionDistribution,
};
use crate::model::{
    validate_state_vector, AgentId, ConfigError, InvalidReason, MatchConfig, Role, RosterError, StateVector, Team,
    WillError, WillTable,
};
use crate::rng::SelectionRng;

/// A proposal as delivered to the scheduler, stamped with its arrival time
/// relative to the start of the tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedProposal {
    pub agent: AgentId,
    pub state: StateVector,
    pub arrival_us: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalStatus {
    OnTime,
    Late,
    Invalid(InvalidReason),
    Duplicate,
    UnknownAgent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceivedProposal {
    pub agent: AgentId,
    pub arrival_us: u64,
    pub state: StateVector,
    pub status: ProposalStatus,
}

/// Everything that happened in one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u32,
    /// Reality broadcast at the start of this tick.
    pub reality: StateVector,
    /// In arrival order; ties keep submission order.
    pub proposals: Vec<ReceivedProposal>,
    pub eligible: BTreeSet<AgentId>,
    /// Consciousness of each eligible agent, ascending by agent.
    pub scores: Vec<(AgentId, f64)>,
    pub distribution: SelectionDistribution,
    pub winner: Selection,
    /// Will in force during this tick.
    pub will_snapshot: WillTable,
}

impl TickRecord {
    /// The state the winner proposed, if any.
    pub fn winning_state(&self) -> Option<&StateVector> {
        match self.winner {
            Selection::Agent(id) => self
                .proposals
                .iter()
                .find(|p| p.agent == id && p.status == ProposalStatus::OnTime)
                .map(|p| &p.state),
            Selection::RepeatReality => None,
        }
    }

    /// Reality of the following tick.
    pub fn next_reality(&self) -> StateVector {
        self.winning_state().copied().unwrap_or(self.reality)
    }

    pub fn is_stall(&self) -> bool {
        self.winner == Selection::RepeatReality
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Broadcasting,
    Collecting,
    Selecting,
    Finished,
}

#[derive(Debug, thiserror::Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("match already finished")]
    Finished,
    #[error("scoring failed: {0}")]
    Score(#[from] ScoreError),
}

const NO_SLOT: u32 = u32::MAX;

/// Authoritative match state.
#[derive(Clone, Debug)]
pub struct Scheduler {
    config: MatchConfig,
    current_tick: u32,
    current_reality: StateVector,
    // Roster ids ascending, with their roles at the same index.
    ids: Vec<AgentId>,
    roles: Vec<Role>,
    // On-time states of the previous tick; `prev_slot[i]` indexes them for
    // `ids[i]`, or is NO_SLOT.
    prev_states: Vec<StateVector>,
    prev_slot: Vec<u32>,
    will: WillTable,
    phase: Phase,
}

impl Scheduler {
    /// Validates `config` and positions the match at tick 0 with the
    /// starting lineup as reality.
    pub fn start_match(config: MatchConfig) -> Result<Self, SchedulerError> {
        config.validate()?;
        let ids = config.roster.ids();
        let roles = ids.iter().map(|&a| config.roster.role_of(a).unwrap_or(Role::Supporter)).collect();
        Ok(Scheduler {
            current_reality: config.lineup(),
            will: config.initial_will.clone(),
            config,
            current_tick: 0,
            prev_slot: vec![NO_SLOT; ids.len()],
            prev_states: Vec::new(),
            ids,
            roles,
            phase: Phase::Broadcasting,
        })
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn tick(&self) -> u32 {
        self.current_tick
    }

    pub fn reality(&self) -> &StateVector {
        &self.current_reality
    }

    pub fn will(&self) -> &WillTable {
        &self.will
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn deadline_us(&self) -> u64 {
        u64::from(self.config.proposal_deadline_ms) * 1000
    }

    /// Opens proposal collection for the current tick and returns the
    /// reality to send out.
    pub fn broadcast(&mut self) -> Result<(u32, StateVector), SchedulerError> {
        match self.phase {
            Phase::Finished => Err(SchedulerError::Finished),
            _ => {
                self.phase = Phase::Collecting;
                Ok((self.current_tick, self.current_reality))
            }
        }
    }

    /// Closes the current tick with the proposals collected for it.
    pub fn run_tick(&mut self, proposals: &[TimedProposal]) -> Result<TickRecord, SchedulerError> {
        if self.phase == Phase::Finished {
            return Err(SchedulerError::Finished);
        }
        self.phase = Phase::Selecting;

        let (received, now_slot) = self.classify(proposals);
        let bootstrap = self.current_tick == 0;
        let is_eligible =
            |i: usize| now_slot[i] != NO_SLOT && (bootstrap || self.prev_slot[i] != NO_SLOT);

        // The will table holds exactly the roster, in the same order.
        let wills: Vec<f64> = self.will.iter().map(|e| e.2).collect();
        debug_assert!(self.will.iter().map(|e| e.0).eq(self.ids.iter().copied()));

        let eligible_idx: Vec<usize> = (0..self.ids.len()).filter(|&i| is_eligible(i)).collect();
        let scores: Vec<(AgentId, f64)> = if bootstrap {
            eligible_idx.iter().map(|&i| (self.ids[i], wills[i])).collect()
        } else {
            let inputs: Vec<ScoringInput<'_>> = eligible_idx
                .iter()
                .map(|&i| ScoringInput {
                    agent: self.ids[i],
                    role: self.roles[i],
                    will: wills[i],
                    prev_sent: Some(&self.prev_states[self.prev_slot[i] as usize]),
                })
                .collect();
            soccer_consciousness(&inputs, &self.current_reality)?
        };

        let mut next_score = scores.iter().map(|e| e.1);
        let scored: Vec<ScoredProposal> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, &agent)| match is_eligible(i) {
                true => ScoredProposal { agent, sc_value: next_score.next().unwrap_or(0.0), eligible: true },
                false => ScoredProposal { agent, sc_value: 0.0, eligible: false },
            })
            .collect();
        let distribution = selection_distribution(&scored)?;
        let mut rng = SelectionRng::split(self.config.rng_seed, u64::from(self.current_tick));
        let winner = sample(&distribution, &mut rng);
        let next_will = update_will(&self.will, &scored, self.config.will_update_rate)?;

        let mut states = Vec::with_capacity(self.prev_states.len());
        let mut slot = now_slot;
        for s in slot.iter_mut().filter(|s| **s != NO_SLOT) {
            states.push(received[*s as usize].state);
            *s = (states.len() - 1) as u32;
        }
        let reality = self.current_reality;
        if let Selection::Agent(id) = winner {
            if let Ok(i) = self.ids.binary_search(&id) {
                self.current_reality = states[slot[i] as usize];
            }
        }

        let record = TickRecord {
            tick: self.current_tick,
            reality,
            proposals: received,
            eligible: eligible_idx.iter().map(|&i| self.ids[i]).collect(),
            scores,
            distribution,
            winner,
            will_snapshot: std::mem::replace(&mut self.will, next_will),
        };
        self.prev_states = states;
        self.prev_slot = slot;
        self.current_tick += 1;
        self.phase = if self.current_tick >= self.config.match_ticks {
            Phase::Finished
        } else {
            Phase::Broadcasting
        };
        Ok(record)
    }

    /// Classifies proposals in arrival order. The second value maps each
    /// roster index to its on-time entry in the first, or NO_SLOT.
    fn classify(&self, proposals: &[TimedProposal]) -> (Vec<ReceivedProposal>, Vec<u32>) {
        let mut order: Vec<usize> = (0..proposals.len()).collect();
        order.sort_by_key(|&i| proposals[i].arrival_us);

        let deadline = self.deadline_us();
        let mut seen = vec![false; self.ids.len()];
        let mut slot = vec![NO_SLOT; self.ids.len()];
        let received = order
            .into_iter()
            .enumerate()
            .map(|(k, i)| {
                let p = &proposals[i];
                let status = match self.ids.binary_search(&p.agent) {
                    Err(_) => ProposalStatus::UnknownAgent,
                    Ok(idx) if std::mem::replace(&mut seen[idx], true) => ProposalStatus::Duplicate,
                    Ok(_) if p.arrival_us >= deadline => ProposalStatus::Late,
                    Ok(idx) => match validate_state_vector(&p.state, &self.config.pitch, self.config.bounds_check) {
                        Err(reason) => ProposalStatus::Invalid(reason),
                        Ok(()) => {
                            slot[idx] = k as u32;
                            ProposalStatus::OnTime
                        }
                    },
                };
                ReceivedProposal { agent: p.agent, arrival_us: p.arrival_us, state: p.state, status }
            })
            .collect();
        (received, slot)
    }
}

/// How supporter will is handed out at registration: each registrant gets
/// `budget / expected` of its pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupporterBudget {
    /// One pool for all supporters.
    Shared { budget: f64, expected: u32 },
    /// Separate pools by favoured side.
    PerSide { home: f64, guest: f64, expected_home: u32, expected_guest: u32 },
}

impl Default for SupporterBudget {
    fn default() -> Self {
        SupporterBudget::Shared { budget: 1.0, expected: 0 }
    }
}

impl SupporterBudget {
    fn total(&self) -> f64 {
        match *self {
            SupporterBudget::Shared { budget, .. } => budget,
            SupporterBudget::PerSide { home, guest, .. } => home + guest,
        }
    }

    fn is_valid(&self) -> bool {
        let non_negative = match *self {
            SupporterBudget::Shared { budget, .. } => budget >= 0.0,
            SupporterBudget::PerSide { home, guest, .. } => home >= 0.0 && guest >= 0.0,
        };
        non_negative && self.total() <= 1.0 + crate::model::SUM_TOLERANCE
    }

    /// Will for the next supporter of `team`, or `None` once the pool is full.
    fn next_share(&self, team: Team, joined: [u32; 2]) -> Option<f64> {
        let (budget, expected, already) = match *self {
            SupporterBudget::Shared { budget, expected } => (budget, expected, joined[0] + joined[1]),
            SupporterBudget::PerSide { home, guest, expected_home, expected_guest } => match team {
                Team::Home => (home, expected_home, joined[0]),
                Team::Guest => (guest, expected_guest, joined[1]),
            },
        };
        (already < expected).then(|| budget / f64::from(expected))
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RegisterError {
    #[error("roster full")]
    RosterFull,
    #[error("shirt {shirt} already taken in the {team} team")]
    DuplicateShirt { team: Team, shirt: u8 },
    #[error("match already started")]
    MatchAlreadyStarted,
    #[error("shirt {0} outside 1..=11")]
    BadShirt(u8),
    #[error("supporter budget invalid: {0}")]
    Budget(String),
    #[error(transparent)]
    Will(#[from] WillError),
}

impl From<RosterError> for RegisterError {
    fn from(e: RosterError) -> Self {
        match e {
            RosterError::RosterFull => RegisterError::RosterFull,
            RosterError::DuplicateShirt { team, shirt } => RegisterError::DuplicateShirt { team, shirt },
            RosterError::BadShirt(s) => RegisterError::BadShirt(s),
            RosterError::DuplicateAgent(_) => RegisterError::RosterFull,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Registration {
    pub agent: AgentId,
    pub role: Role,
    pub team: Team,
    pub shirt: Option<u8>,
    pub will: f64,
}

/// Pre-match registration. Hands out agent ids and initial wills, then
/// becomes the [`MatchConfig`] for [`Scheduler::start_match`].
#[derive(Clone, Debug)]
pub struct Lobby {
    config: MatchConfig,
    budget: SupporterBudget,
    supporters_joined: [u32; 2],
    next_id: u32,
}

impl Lobby {
    /// `base` supplies the runtime parameters; its roster and will are
    /// replaced by the registrations.
    pub fn new(mut base: MatchConfig, budget: SupporterBudget) -> Result<Self, RegisterError> {
        if !budget.is_valid() {
            return Err(RegisterError::Budget(format!("{budget:?} must be non-negative and total at most 1")));
        }
        base.roster = Default::default();
        base.initial_will = WillTable::new();
        Ok(Lobby { config: base, budget, supporters_joined: [0, 0], next_id: 1 })
    }

    pub fn register_agent(&mut self, role: Role, team: Team, shirt: Option<u8>) -> Result<Registration, RegisterError> {
        let agent = AgentId(self.next_id);
        let roster = &self.config.roster;
        let (shirt, will) = match role {
            Role::Player => {
                if roster.player_count() >= crate::model::MAX_PLAYERS {
                    return Err(RegisterError::RosterFull);
                }
                let shirt = match shirt {
                    Some(s) if !(1..=crate::model::SQUAD_SIZE as u8).contains(&s) => {
                        return Err(RegisterError::BadShirt(s))
                    }
                    Some(s) if roster.shirt_taken(team, s) => {
                        return Err(RegisterError::DuplicateShirt { team, shirt: s })
                    }
                    Some(s) => s,
                    None => roster.free_shirt(team).ok_or(RegisterError::RosterFull)?,
                };
                (Some(shirt), 1.0)
            }
            Role::Supporter => {
                let w = self.budget.next_share(team, self.supporters_joined).ok_or(RegisterError::RosterFull)?;
                (None, w)
            }
        };

        self.config.initial_will.insert(agent, role, will)?;
        match shirt {
            Some(s) => self.config.roster.add_player(agent, team, s)?,
            None => {
                self.config.roster.add_supporter(agent, team)?;
                self.supporters_joined[team as usize] += 1;
            }
        }
        self.next_id += 1;
        Ok(Registration { agent, role, team, shirt, will })
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.config.roster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.roster.is_empty()
    }

    pub fn into_config(self) -> MatchConfig {
        self.config
    }
}
