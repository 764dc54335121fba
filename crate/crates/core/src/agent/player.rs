use serde::{Deserialize, Serialize};

use super::{AgentBehavior, AgentIdentity, StepOutcome};
use crate::model::{make_kickoff_lineup, Pitch, Position, StateVector, Team, SQUAD_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchetypeKind {
    Attacker,
    Midfielder,
    Defender,
}

impl ArchetypeKind {
    /// Shirt 1 and 2..=5 defend, 6..=9 hold midfield, 10 and 11 attack.
    pub fn for_shirt(shirt: u8) -> Self {
        match shirt {
            10.. => ArchetypeKind::Attacker,
            6..=9 => ArchetypeKind::Midfielder,
            _ => ArchetypeKind::Defender,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerArchetype {
    pub kind: ArchetypeKind,
    pub home_position: Position,
    /// Meters per tick.
    pub max_speed: f64,
}

impl PlayerArchetype {
    pub const DEFAULT_MAX_SPEED: f64 = 0.8;

    /// Kickoff position of `shirt` and the archetype its shirt implies.
    pub fn for_shirt(team: Team, shirt: u8, pitch: &Pitch) -> Self {
        let lineup = make_kickoff_lineup(pitch);
        PlayerArchetype {
            kind: ArchetypeKind::for_shirt(shirt),
            home_position: lineup.player(team, shirt),
            max_speed: Self::DEFAULT_MAX_SPEED,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.max_speed > 0.0 && self.max_speed.is_finite() && self.home_position.is_finite()
    }
}

/// Tunable constants of the reference kinematics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Kinematics {
    pub attacker_pull: f64,
    pub midfielder_pull: f64,
    pub defender_pull: f64,
    pub possession_radius: f64,
    pub pass_speed: f64,
    pub pass_range: f64,
    /// A teammate is open when no opponent is this close.
    pub open_radius: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Kinematics {
            attacker_pull: 0.4,
            midfielder_pull: 0.25,
            defender_pull: 0.1,
            possession_radius: 1.0,
            pass_speed: 2.5,
            pass_range: 25.0,
            open_radius: 3.0,
        }
    }
}

impl Kinematics {
    pub fn pull(&self, kind: ArchetypeKind) -> f64 {
        match kind {
            ArchetypeKind::Attacker => self.attacker_pull,
            ArchetypeKind::Midfielder => self.midfielder_pull,
            ArchetypeKind::Defender => self.defender_pull,
        }
    }
}

/// A player that predicts one tick of its own team's movement.
///
/// Teammates head for their formation anchor, shifted toward the ball by
/// their archetype's pull; the teammate nearest the ball chases it. In
/// possession, the ball is passed to the nearest open teammate ahead, or
/// dribbled toward goal. Opponents are assumed to stay where they are.
#[derive(Clone, Debug)]
pub struct ReferencePlayer {
    archetype: PlayerArchetype,
    pitch: Pitch,
    kinematics: Kinematics,
    formation: StateVector,
}

pub struct PlayerState {
    reality: StateVector,
    team: Team,
    shirt: Option<u8>,
    prediction: Option<StateVector>,
}

impl ReferencePlayer {
    pub fn new(archetype: PlayerArchetype, pitch: Pitch) -> Self {
        Self::with_kinematics(archetype, pitch, Kinematics::default())
    }

    pub fn with_kinematics(archetype: PlayerArchetype, pitch: Pitch, kinematics: Kinematics) -> Self {
        assert!(archetype.is_valid(), "max_speed must be positive and finite");
        ReferencePlayer { archetype, pitch, kinematics, formation: make_kickoff_lineup(&pitch) }
    }

    pub fn archetype(&self) -> &PlayerArchetype {
        &self.archetype
    }

    fn anchor(&self, team: Team, shirt: u8, me: Option<u8>, ball: &Position) -> Position {
        let (kind, home) = if me == Some(shirt) {
            (self.archetype.kind, self.archetype.home_position)
        } else {
            (ArchetypeKind::for_shirt(shirt), self.formation.player(team, shirt))
        };
        let pull = self.kinematics.pull(kind);
        let center = self.pitch.center();
        Position::new(home.x + pull * (ball.x - center.x), home.y + pull * (ball.y - center.y))
    }

    /// One tick of the world as this player expects it.
    pub fn predict(&self, reality: &StateVector, team: Team, shirt: Option<u8>) -> StateVector {
        let k = &self.kinematics;
        let speed = self.archetype.max_speed;
        let squad = *reality.squad(team);
        let opponents = reality.squad(team.opponent());
        let mut next = *reality;

        let mut ball = reality.ball;
        let mut carrier = None;
        let mut passer = None;
        let holder = usize::from(reality.possessing_player) - 1;
        if reality.possessing_team == team && squad[holder].distance_to(&ball) <= k.possession_radius {
            let from = squad[holder];
            let sign = team.attack_sign();
            let target = squad
                .iter()
                .enumerate()
                .filter(|&(i, q)| {
                    i != holder
                        && (q.x - from.x) * sign > 0.0
                        && from.distance_to(q) <= k.pass_range
                        && opponents.iter().all(|o| o.distance_to(q) > k.open_radius)
                })
                .min_by(|a, b| from.distance_to(a.1).total_cmp(&from.distance_to(b.1)));
            match target {
                Some((_, q)) => {
                    ball = ball.step_towards(q, k.pass_speed).clamped_to(&self.pitch);
                    passer = Some(holder);
                }
                None => {
                    let goal_x = if sign > 0.0 { self.pitch.length } else { 0.0 };
                    let goal = Position::new(goal_x, self.pitch.width / 2.0);
                    let moved = from.step_towards(&goal, speed).clamped_to(&self.pitch);
                    carrier = Some((holder, moved));
                    ball = moved;
                }
            }
        }

        let chaser = match carrier {
            Some(_) => None,
            None => squad
                .iter()
                .enumerate()
                .filter(|&(i, _)| Some(i) != passer)
                .min_by(|a, b| a.1.distance_to(&ball).total_cmp(&b.1.distance_to(&ball)))
                .map(|(i, _)| i),
        };

        let out = next.squad_mut(team);
        for i in 0..SQUAD_SIZE {
            out[i] = match carrier {
                Some((c, pos)) if c == i => pos,
                _ => {
                    let target = if Some(i) == chaser { ball } else { self.anchor(team, i as u8 + 1, shirt, &ball) };
                    squad[i].step_towards(&target.clamped_to(&self.pitch), speed).clamped_to(&self.pitch)
                }
            };
        }
        next.ball = ball;

        let mut best: Option<(f64, u8, Team)> = None;
        for t in [Team::Home, Team::Guest] {
            for (i, p) in next.squad(t).iter().enumerate() {
                let d = p.distance_to(&ball);
                if d > k.possession_radius {
                    continue;
                }
                let key = (d, i as u8 + 1, t);
                if best.is_none_or(|b| possession_order(&key, &b)) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, s, t)) = best {
            next.possessing_team = t;
            next.possessing_player = s;
        }
        next
    }
}

/// Nearer first, then lower shirt, then Home before Guest.
fn possession_order(a: &(f64, u8, Team), b: &(f64, u8, Team)) -> bool {
    let team_rank = |t: Team| matches!(t, Team::Guest) as u8;
    (a.0, a.1, team_rank(a.2)) < (b.0, b.1, team_rank(b.2))
}

impl AgentBehavior for ReferencePlayer {
    type State = PlayerState;

    fn observe(&mut self, reality: &StateVector, me: &AgentIdentity) -> PlayerState {
        PlayerState { reality: *reality, team: me.team, shirt: me.shirt, prediction: None }
    }

    fn step(&mut self, state: &mut PlayerState) -> StepOutcome {
        if state.prediction.is_none() {
            state.prediction = Some(self.predict(&state.reality, state.team, state.shirt));
        }
        StepOutcome::Done
    }

    fn propose(&mut self, state: &PlayerState) -> StateVector {
        state.prediction.unwrap_or(state.reality)
    }
}
