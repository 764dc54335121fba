use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{AgentId, Role, Team, SQUAD_SIZE};

/// Maximum number of players in a match.
pub const MAX_PLAYERS: usize = 2 * SQUAD_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSlot {
    pub team: Team,
    pub shirt: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RosterError {
    #[error("roster full")]
    RosterFull,
    #[error("shirt {shirt} already taken in the {team} team")]
    DuplicateShirt { team: Team, shirt: u8 },
    #[error("shirt {0} outside 1..=11")]
    BadShirt(u8),
    #[error("agent {0} already registered")]
    DuplicateAgent(AgentId),
}

/// The agents of a match, split into players and supporters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RosterRepr", into = "RosterRepr")]
pub struct Roster {
    players: BTreeMap<AgentId, PlayerSlot>,
    supporters: BTreeMap<AgentId, Team>,
}

impl Roster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_player(&mut self, id: AgentId, team: Team, shirt: u8) -> Result<(), RosterError> {
        if self.contains(id) {
            return Err(RosterError::DuplicateAgent(id));
        }
        if self.players.len() >= MAX_PLAYERS {
            return Err(RosterError::RosterFull);
        }
        if !(1..=SQUAD_SIZE as u8).contains(&shirt) {
            return Err(RosterError::BadShirt(shirt));
        }
        if self.shirt_taken(team, shirt) {
            return Err(RosterError::DuplicateShirt { team, shirt });
        }
        self.players.insert(id, PlayerSlot { team, shirt });
        Ok(())
    }

    pub fn add_supporter(&mut self, id: AgentId, favored: Team) -> Result<(), RosterError> {
        if self.contains(id) {
            return Err(RosterError::DuplicateAgent(id));
        }
        self.supporters.insert(id, favored);
        Ok(())
    }

    pub fn shirt_taken(&self, team: Team, shirt: u8) -> bool {
        self.players.values().any(|s| s.team == team && s.shirt == shirt)
    }

    /// Lowest shirt not yet used in `team`.
    pub fn free_shirt(&self, team: Team) -> Option<u8> {
        (1..=SQUAD_SIZE as u8).find(|&s| !self.shirt_taken(team, s))
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.players.contains_key(&id) || self.supporters.contains_key(&id)
    }

    pub fn role_of(&self, id: AgentId) -> Option<Role> {
        if self.players.contains_key(&id) {
            Some(Role::Player)
        } else if self.supporters.contains_key(&id) {
            Some(Role::Supporter)
        } else {
            None
        }
    }

    /// Team of a player, or favoured team of a supporter.
    pub fn team_of(&self, id: AgentId) -> Option<Team> {
        self.players
            .get(&id)
            .map(|s| s.team)
            .or_else(|| self.supporters.get(&id).copied())
    }

    pub fn player(&self, id: AgentId) -> Option<PlayerSlot> {
        self.players.get(&id).copied()
    }

    pub fn players(&self) -> impl Iterator<Item = (AgentId, PlayerSlot)> + '_ {
        self.players.iter().map(|(&id, &slot)| (id, slot))
    }

    pub fn supporters(&self) -> impl Iterator<Item = (AgentId, Team)> + '_ {
        self.supporters.iter().map(|(&id, &team)| (id, team))
    }

    /// All agent ids in ascending order.
    pub fn ids(&self) -> Vec<AgentId> {
        let mut ids: Vec<AgentId> = self.players.keys().chain(self.supporters.keys()).copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn supporter_count(&self) -> usize {
        self.supporters.len()
    }

    pub fn len(&self) -> usize {
        self.players.len() + self.supporters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Serialize, Deserialize)]
struct RosterRepr {
    players: Vec<PlayerEntry>,
    supporters: Vec<SupporterEntry>,
}

#[derive(Serialize, Deserialize)]
struct PlayerEntry {
    agent: AgentId,
    team: Team,
    shirt: u8,
}

#[derive(Serialize, Deserialize)]
struct SupporterEntry {
    agent: AgentId,
    favored: Team,
}

impl From<Roster> for RosterRepr {
    fn from(r: Roster) -> Self {
        RosterRepr {
            players: r
                .players
                .into_iter()
                .map(|(agent, s)| PlayerEntry { agent, team: s.team, shirt: s.shirt })
                .collect(),
            supporters: r
                .supporters
                .into_iter()
                .map(|(agent, favored)| SupporterEntry { agent, favored })
                .collect(),
        }
    }
}

impl TryFrom<RosterRepr> for Roster {
    type Error = RosterError;

    fn try_from(repr: RosterRepr) -> Result<Self, Self::Error> {
        let mut roster = Roster::new();
        for p in repr.players {
            roster.add_player(p.agent, p.team, p.shirt)?;
        }
        for s in repr.supporters {
            roster.add_supporter(s.agent, s.favored)?;
        }
        Ok(roster)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_third_player_is_rejected() {
        let mut r = Roster::new();
        let mut id = 0;
        for team in [Team::Home, Team::Guest] {
            for shirt in 1..=11 {
                id += 1;
                r.add_player(AgentId(id), team, shirt).unwrap();
            }
        }
        assert_eq!(r.player_count(), 22);
        assert_eq!(r.add_player(AgentId(99), Team::Home, 1), Err(RosterError::RosterFull));
        assert_eq!(r.free_shirt(Team::Home), None);
    }

    #[test]
    fn shirts_and_ids_are_unique() {
        let mut r = Roster::new();
        r.add_player(AgentId(1), Team::Home, 7).unwrap();
        assert_eq!(
            r.add_player(AgentId(2), Team::Home, 7),
            Err(RosterError::DuplicateShirt { team: Team::Home, shirt: 7 })
        );
        r.add_player(AgentId(2), Team::Guest, 7).unwrap();
        assert_eq!(r.add_supporter(AgentId(1), Team::Home), Err(RosterError::DuplicateAgent(AgentId(1))));
        assert_eq!(r.add_player(AgentId(3), Team::Home, 12), Err(RosterError::BadShirt(12)));
        assert_eq!(r.free_shirt(Team::Home), Some(1));
    }

    #[test]
    fn serde_keeps_invariants() {
        let mut r = Roster::new();
        r.add_player(AgentId(1), Team::Home, 7).unwrap();
        r.add_supporter(AgentId(2), Team::Guest).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Roster>(&json).unwrap(), r);

        let dup = r#"{"players":[{"agent":1,"team":"home","shirt":7},{"agent":2,"team":"home","shirt":7}],"supporters":[]}"#;
        assert!(serde_json::from_str::<Roster>(dup).is_err());
    }
}
