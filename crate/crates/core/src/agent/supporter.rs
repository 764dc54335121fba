use super::{AgentBehavior, AgentIdentity, StepOutcome};
use crate::model::{Pitch, StateVector, Team};

/// Proposes the reality with the ball pushed `bias` meters toward the goal
/// the favoured team attacks. Nothing else changes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSupporter {
    favored: Team,
    bias: f64,
    pitch: Pitch,
}

impl ReferenceSupporter {
    pub fn new(favored: Team, bias: f64, pitch: Pitch) -> Self {
        assert!(bias >= 0.0 && bias.is_finite(), "bias must be a finite non-negative distance");
        ReferenceSupporter { favored, bias, pitch }
    }

    pub fn push(&self, reality: &StateVector) -> StateVector {
        let mut out = *reality;
        if self.bias > 0.0 {
            let x = reality.ball.x + self.favored.attack_sign() * self.bias;
            out.ball.x = x.clamp(0.0, self.pitch.length);
        }
        out
    }
}

impl AgentBehavior for ReferenceSupporter {
    type State = StateVector;

    fn observe(&mut self, reality: &StateVector, _me: &AgentIdentity) -> StateVector {
        self.push(reality)
    }

    fn step(&mut self, _state: &mut StateVector) -> StepOutcome {
        StepOutcome::Done
    }

    fn propose(&mut self, state: &StateVector) -> StateVector {
        *state
    }
}
