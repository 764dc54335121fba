use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{ArchetypeKind, Kinematics};
use crate::model::{BoundsCheck, MatchConfig, Pitch, Team, SQUAD_SIZE};

use super::RunError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    #[default]
    InProcess,
    Udp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Echo,
    #[default]
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub team: Team,
    /// Lowest free shirt of the team when absent.
    #[serde(default)]
    pub shirt: Option<u8>,
    #[serde(default)]
    pub behavior: BehaviorKind,
    /// Defaults to the archetype implied by the shirt.
    #[serde(default)]
    pub archetype: Option<ArchetypeKind>,
    #[serde(default)]
    pub max_speed: Option<f64>,
    /// Synthetic arrival time for in-process agents.
    #[serde(default)]
    pub latency_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupporterSpec {
    pub team: Team,
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default)]
    pub behavior: BehaviorKind,
    /// Meters the ball is pushed toward the opponent's goal.
    #[serde(default = "one_f")]
    pub bias: f64,
    #[serde(default)]
    pub latency_us: u64,
    /// With the UDP transport, run this group inside the server process.
    #[serde(default)]
    pub in_process: bool,
}

/// Supporter will pools. Each supporter gets its pool divided by the number
/// of supporters configured for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BudgetSpec {
    Shared { budget: f64 },
    PerSide { home: f64, guest: f64 },
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec::Shared { budget: 1.0 }
    }
}

/// A match as described in a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ticks")]
    pub ticks: u32,
    #[serde(default = "default_period")]
    pub tick_period_ms: u32,
    #[serde(default = "default_deadline")]
    pub proposal_deadline_ms: u32,
    #[serde(default = "default_rate")]
    pub will_update_rate: f64,
    #[serde(default)]
    pub transport: Transport,
    /// Skip real-time pacing; only meaningful in-process.
    #[serde(default)]
    pub virtual_clock: bool,
    #[serde(default)]
    pub pitch: Pitch,
    #[serde(default)]
    pub bounds_check: BoundsCheck,
    /// Adds both full reference squads, shirts 1 to 11.
    #[serde(default)]
    pub reference_teams: bool,
    #[serde(default)]
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub supporters: Vec<SupporterSpec>,
    #[serde(default)]
    pub supporter_budget: BudgetSpec,
    #[serde(default)]
    pub kinematics: Kinematics,
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Socket agents stop stepping this long before the deadline.
    #[serde(default = "default_margin")]
    pub agent_margin_ms: u32,
    #[serde(default = "default_lobby")]
    pub lobby_timeout_ms: u32,
    /// With the UDP transport, start a thread per socket agent. When false
    /// the server waits for the same roster to join from other processes,
    /// and `bind` must name a fixed port.
    #[serde(default = "yes")]
    pub spawn_agents: bool,
}

fn one() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn one_f() -> f64 {
    1.0
}
fn default_ticks() -> u32 {
    6000
}
fn default_period() -> u32 {
    100
}
fn default_deadline() -> u32 {
    80
}
fn default_rate() -> f64 {
    0.1
}
fn default_bind() -> String {
    "127.0.0.1:0".into()
}
fn default_margin() -> u32 {
    10
}
fn default_lobby() -> u32 {
    10_000
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Player specs with every shirt filled in, explicit shirts first
    /// claimed, then the rest in file order.
    pub fn resolved_players(&self) -> Result<Vec<PlayerSpec>, RunError> {
        let mut players = self.players.clone();
        if self.reference_teams {
            for team in [Team::Home, Team::Guest] {
                for shirt in 1..=SQUAD_SIZE as u8 {
                    let taken = players.iter().any(|p| p.team == team && p.shirt == Some(shirt));
                    if !taken {
                        players.push(PlayerSpec {
                            team,
                            shirt: Some(shirt),
                            behavior: BehaviorKind::Reference,
                            archetype: None,
                            max_speed: None,
                            latency_us: 0,
                        });
                    }
                }
            }
        }
        let mut taken = [[false; SQUAD_SIZE + 1]; 2];
        for p in &players {
            if let Some(s) = p.shirt {
                if !(1..=SQUAD_SIZE as u8).contains(&s) {
                    return Err(RunError::Config(format!("players: shirt {s} outside 1..=11")));
                }
                let slot = &mut taken[p.team as usize][usize::from(s)];
                if *slot {
                    return Err(RunError::Config(format!("players: shirt {s} used twice in the {} team", p.team)));
                }
                *slot = true;
            }
        }
        for p in players.iter_mut().filter(|p| p.shirt.is_none()) {
            let free = (1..=SQUAD_SIZE).find(|&s| !taken[p.team as usize][s]).ok_or_else(|| {
                RunError::Config(format!("players: more than {SQUAD_SIZE} players in the {} team", p.team))
            })?;
            taken[p.team as usize][free] = true;
            p.shirt = Some(free as u8);
        }
        for p in &players {
            if let Some(v) = p.max_speed {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(RunError::Config(format!("players: max_speed {v} must be positive")));
                }
            }
        }
        Ok(players)
    }

    pub fn supporter_total(&self, team: Option<Team>) -> u32 {
        self.supporters.iter().filter(|s| team.is_none_or(|t| s.team == t)).map(|s| s.count).sum()
    }

    /// Scheduler parameters with an empty roster.
    pub fn base_match(&self) -> MatchConfig {
        MatchConfig {
            tick_period_ms: self.tick_period_ms,
            proposal_deadline_ms: self.proposal_deadline_ms,
            match_ticks: self.ticks,
            rng_seed: self.seed,
            pitch: self.pitch,
            bounds_check: self.bounds_check,
            will_update_rate: self.will_update_rate,
            ..MatchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.base_match()
            .validate_parameters()
            .map_err(|e| RunError::Config(e.to_string()))?;
        for s in &self.supporters {
            if !(s.bias >= 0.0 && s.bias.is_finite()) {
                return Err(RunError::Config(format!("supporters: bias {} must be finite and non-negative", s.bias)));
            }
        }
        self.resolved_players()?;
        if self.transport == Transport::Udp && !self.spawn_agents {
            let addr: std::net::SocketAddr =
                self.bind.parse().map_err(|e| RunError::Config(format!("bind {:?}: {e}", self.bind)))?;
            if addr.port() == 0 {
                return Err(RunError::Config("bind needs a fixed port when spawn_agents = false".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c.ticks, 6000);
        assert_eq!(c.tick_period_ms, 100);
        assert_eq!(c.proposal_deadline_ms, 80);
        assert_eq!(c.will_update_rate, 0.1);
        assert_eq!(c.transport, Transport::InProcess);
        assert_eq!(c.pitch, Pitch::default());
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let err = RunConfig::from_toml("seed = 1\nticks = \"many\"\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("ticks"), "{err}");
        let err = RunConfig::from_toml("seed = 1\ncolour = 3\n").unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn shirts_are_filled_in() {
        let c = RunConfig::from_toml(
            r#"
            [[players]]
            team = "home"
            [[players]]
            team = "home"
            shirt = 1
            [[players]]
            team = "guest"
            behavior = "echo"
            "#,
        )
        .unwrap();
        let p = c.resolved_players().unwrap();
        assert_eq!(p.iter().map(|p| p.shirt.unwrap()).collect::<Vec<_>>(), vec![2, 1, 1]);
        assert_eq!(p[2].behavior, BehaviorKind::Echo);
    }

    #[test]
    fn duplicate_shirts_are_rejected() {
        let c = RunConfig::from_toml(
            "[[players]]\nteam = \"home\"\nshirt = 4\n[[players]]\nteam = \"home\"\nshirt = 4\n",
        )
        .unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn reference_teams_fill_both_squads() {
        let c = RunConfig::from_toml("reference_teams = true\n[[players]]\nteam = \"guest\"\nshirt = 3\nbehavior = \"echo\"\n").unwrap();
        let p = c.resolved_players().unwrap();
        assert_eq!(p.len(), 22);
        assert_eq!(p.iter().filter(|p| p.behavior == BehaviorKind::Echo).count(), 1);
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::from_toml(
            "seed = 5\nreference_teams = true\n[[supporters]]\nteam = \"home\"\ncount = 4\n[supporter_budget]\nkind = \"per-side\"\nhome = 1.0\nguest = 0.0\n",
        )
        .unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
