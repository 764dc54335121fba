//! Match statistics, computed from tick records alone.
//!
//! Over `T` ticks, with `P_t` the selection distribution of tick `t`:
//!
//! * `wins(a)`: ticks `a` was drawn; `share(a) = wins(a) / T`.
//! * `expected_share(a) = Σ_t P_t(a) / T`, the share the draws should
//!   approach.
//! * `stalls`: ticks with no eligible proposal; shares sum to
//!   `1 - stalls / T`.
//! * Group variance `Σ_t p_t (1 - p_t)`, where `p_t` is the group's total
//!   probability at `t`; its square root over `T` is the Monte Carlo
//!   standard error of the group's share.
//! * Ball position and half occupancy use the reality each tick produced.
//!   The home half is `x < length / 2` and the away half is
//!   `x > length / 2`, both from the home side's view; the centre line
//!   counts for neither.
//! * Score summaries cover every eligible agent's consciousness per tick.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::consciousness::Selection;
use crate::model::{AgentId, MatchConfig, Position, Role, Team};
use crate::scheduler::{ProposalStatus, TickRecord};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentStats {
    pub role: Option<Role>,
    pub team: Option<Team>,
    pub wins: u64,
    pub share: f64,
    pub expected_share: f64,
    pub late: u64,
    pub invalid: u64,
    /// Ticks with no proposal at all from this agent.
    pub silent: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScSummary {
    pub samples: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for ScSummary {
    fn default() -> Self {
        ScSummary { samples: 0, mean: 0.0, min: f64::INFINITY, max: 0.0 }
    }
}

impl ScSummary {
    fn add(&mut self, v: f64) {
        self.samples += 1;
        self.mean += (v - self.mean) / self.samples as f64;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }
}

/// Totals for the agents of one role and side.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub members: u64,
    pub wins: u64,
    pub share: f64,
    pub expected_share: f64,
    pub variance: f64,
}

impl GroupStats {
    /// One standard error of `share` around `expected_share`.
    pub fn standard_error(&self, ticks: u64) -> f64 {
        if ticks == 0 {
            0.0
        } else {
            self.variance.sqrt() / ticks as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub ticks: u64,
    pub stalls: u64,
    pub stall_share: f64,
    pub agents: BTreeMap<AgentId, AgentStats>,
    pub home_players: GroupStats,
    pub guest_players: GroupStats,
    pub home_supporters: GroupStats,
    pub guest_supporters: GroupStats,
    pub player_sc: ScSummary,
    pub supporter_sc: ScSummary,
    pub ball_mean: Position,
    pub home_half_share: f64,
    pub away_half_share: f64,
}

impl MatchStats {
    pub fn group(&self, role: Role, team: Team) -> &GroupStats {
        match (role, team) {
            (Role::Player, Team::Home) => &self.home_players,
            (Role::Player, Team::Guest) => &self.guest_players,
            (Role::Supporter, Team::Home) => &self.home_supporters,
            (Role::Supporter, Team::Guest) => &self.guest_supporters,
        }
    }
}

/// Incremental [`MatchStats`] so traces can be summarized while streaming.
#[derive(Clone, Debug)]
pub struct StatsBuilder {
    config: MatchConfig,
    ticks: u64,
    stalls: u64,
    wins: BTreeMap<AgentId, u64>,
    prob_sum: BTreeMap<AgentId, f64>,
    late: BTreeMap<AgentId, u64>,
    invalid: BTreeMap<AgentId, u64>,
    heard: BTreeMap<AgentId, u64>,
    group_prob: [f64; 4],
    group_var: [f64; 4],
    group_wins: [u64; 4],
    player_sc: ScSummary,
    supporter_sc: ScSummary,
    ball_sum: (f64, f64),
    home_half: u64,
    away_half: u64,
}

fn group_index(role: Role, team: Team) -> usize {
    (role as usize) * 2 + team as usize
}

impl StatsBuilder {
    pub fn new(config: &MatchConfig) -> Self {
        StatsBuilder {
            config: config.clone(),
            ticks: 0,
            stalls: 0,
            wins: BTreeMap::new(),
            prob_sum: BTreeMap::new(),
            late: BTreeMap::new(),
            invalid: BTreeMap::new(),
            heard: BTreeMap::new(),
            group_prob: [0.0; 4],
            group_var: [0.0; 4],
            group_wins: [0; 4],
            player_sc: ScSummary::default(),
            supporter_sc: ScSummary::default(),
            ball_sum: (0.0, 0.0),
            home_half: 0,
            away_half: 0,
        }
    }

    fn group_of(&self, agent: AgentId) -> Option<usize> {
        let roster = &self.config.roster;
        Some(group_index(roster.role_of(agent)?, roster.team_of(agent)?))
    }

    pub fn push(&mut self, r: &TickRecord) {
        self.ticks += 1;
        match r.winner {
            Selection::RepeatReality => self.stalls += 1,
            Selection::Agent(a) => {
                *self.wins.entry(a).or_default() += 1;
                if let Some(g) = self.group_of(a) {
                    self.group_wins[g] += 1;
                }
            }
        }

        let mut tick_group = [0.0; 4];
        for &(a, p) in &r.distribution.entries {
            *self.prob_sum.entry(a).or_default() += p;
            if let Some(g) = self.group_of(a) {
                tick_group[g] += p;
            }
        }
        for (g, p) in tick_group.into_iter().enumerate() {
            self.group_prob[g] += p;
            self.group_var[g] += p * (1.0 - p);
        }

        for p in &r.proposals {
            let counter = match p.status {
                ProposalStatus::Late => Some(&mut self.late),
                ProposalStatus::Invalid(_) => Some(&mut self.invalid),
                _ => None,
            };
            if let Some(c) = counter {
                *c.entry(p.agent).or_default() += 1;
            }
            if p.status != ProposalStatus::UnknownAgent && p.status != ProposalStatus::Duplicate {
                *self.heard.entry(p.agent).or_default() += 1;
            }
        }

        for &(a, sc) in &r.scores {
            match self.config.roster.role_of(a) {
                Some(Role::Player) => self.player_sc.add(sc),
                Some(Role::Supporter) => self.supporter_sc.add(sc),
                None => {}
            }
        }

        let ball = r.next_reality().ball;
        self.ball_sum.0 += ball.x;
        self.ball_sum.1 += ball.y;
        let half = self.config.pitch.length / 2.0;
        if ball.x < half {
            self.home_half += 1;
        } else if ball.x > half {
            self.away_half += 1;
        }
    }

    pub fn finish(self) -> MatchStats {
        let t = self.ticks as f64;
        let per_tick = |n: f64| if self.ticks == 0 { 0.0 } else { n / t };

        let mut ids: Vec<AgentId> = self.config.roster.ids();
        ids.extend(self.wins.keys().chain(self.prob_sum.keys()).chain(self.late.keys()).chain(self.invalid.keys()));
        ids.sort_unstable();
        ids.dedup();

        let agents = ids
            .into_iter()
            .map(|a| {
                let wins = self.wins.get(&a).copied().unwrap_or(0);
                let heard = self.heard.get(&a).copied().unwrap_or(0);
                let s = AgentStats {
                    role: self.config.roster.role_of(a),
                    team: self.config.roster.team_of(a),
                    wins,
                    share: per_tick(wins as f64),
                    expected_share: per_tick(self.prob_sum.get(&a).copied().unwrap_or(0.0)),
                    late: self.late.get(&a).copied().unwrap_or(0),
                    invalid: self.invalid.get(&a).copied().unwrap_or(0),
                    silent: self.ticks.saturating_sub(heard),
                };
                (a, s)
            })
            .collect::<BTreeMap<_, _>>();

        let mut members = [0u64; 4];
        for (a, _) in self.config.roster.players() {
            members[self.group_of(a).unwrap()] += 1;
        }
        for (a, _) in self.config.roster.supporters() {
            members[self.group_of(a).unwrap()] += 1;
        }
        let group = |role: Role, team: Team| {
            let g = group_index(role, team);
            GroupStats {
                members: members[g],
                wins: self.group_wins[g],
                share: per_tick(self.group_wins[g] as f64),
                expected_share: per_tick(self.group_prob[g]),
                variance: self.group_var[g],
            }
        };

        MatchStats {
            ticks: self.ticks,
            stalls: self.stalls,
            stall_share: per_tick(self.stalls as f64),
            home_players: group(Role::Player, Team::Home),
            guest_players: group(Role::Player, Team::Guest),
            home_supporters: group(Role::Supporter, Team::Home),
            guest_supporters: group(Role::Supporter, Team::Guest),
            agents,
            player_sc: self.player_sc,
            supporter_sc: self.supporter_sc,
            ball_mean: Position::new(per_tick(self.ball_sum.0), per_tick(self.ball_sum.1)),
            home_half_share: per_tick(self.home_half as f64),
            away_half_share: per_tick(self.away_half as f64),
        }
    }
}

pub fn match_stats<'a, I>(config: &MatchConfig, records: I) -> MatchStats
where
    I: IntoIterator<Item = &'a TickRecord>,
{
    let mut b = StatsBuilder::new(config);
    for r in records {
        b.push(r);
    }
    b.finish()
}
