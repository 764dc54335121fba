use std::collections::TryReserveError;

use rayon::prelude::*;

use super::{AgentIdentity, DynBehavior};
use crate::model::{Role, StateVector, Team};
use crate::scheduler::{Lobby, RegisterError, TimedProposal};

/// Below this many members the swarm evaluates on the calling thread.
const PARALLEL_THRESHOLD: usize = 256;

pub struct SwarmMember {
    pub identity: AgentIdentity,
    /// Synthetic arrival time relative to the start of the tick.
    pub latency_us: u64,
    behavior: Box<dyn DynBehavior>,
}

#[derive(Debug, thiserror::Error)]
pub enum SwarmError {
    #[error("swarm needs at least one member")]
    Empty,
    #[error("out of memory for {0} swarm members")]
    ResourceExhausted(usize),
    #[error(transparent)]
    Register(#[from] RegisterError),
}

/// Behaviors evaluated inside the scheduler process. Their proposals carry
/// synthetic timestamps and go through the same scheduler path as socket
/// traffic.
pub struct Swarm {
    members: Vec<SwarmMember>,
    max_steps: usize,
}

impl Default for Swarm {
    fn default() -> Self {
        Self::new()
    }
}

impl Swarm {
    pub fn new() -> Self {
        Swarm { members: Vec::new(), max_steps: 1 }
    }

    /// Inner steps granted to each behavior per tick.
    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn push<B>(&mut self, identity: AgentIdentity, behavior: B, latency_us: u64) -> Result<(), SwarmError>
    where
        B: DynBehavior + 'static,
    {
        let wanted = self.members.len() + 1;
        self.members.try_reserve(1).map_err(|_: TryReserveError| SwarmError::ResourceExhausted(wanted))?;
        self.members.push(SwarmMember { identity, latency_us, behavior: Box::new(behavior) });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = &SwarmMember> {
        self.members.iter()
    }

    /// Every member's proposal for `reality`, in member order.
    pub fn proposals(&mut self, reality: &StateVector) -> Result<Vec<TimedProposal>, SwarmError> {
        let n = self.members.len();
        let mut out = Vec::new();
        out.try_reserve_exact(n).map_err(|_| SwarmError::ResourceExhausted(n))?;
        let steps = self.max_steps;
        let decide = |m: &mut SwarmMember| TimedProposal {
            agent: m.identity.agent,
            state: m.behavior.decide(reality, &m.identity, steps),
            arrival_us: m.latency_us,
        };
        if n < PARALLEL_THRESHOLD {
            out.extend(self.members.iter_mut().map(decide));
        } else {
            self.members.par_iter_mut().map(decide).collect_into_vec(&mut out);
        }
        Ok(out)
    }
}

/// Registers `count` supporters of `favored` in `lobby` and builds a swarm
/// of them, the i-th running `factory(i)`.
pub fn in_process_swarm<B, F>(lobby: &mut Lobby, count: usize, favored: Team, mut factory: F) -> Result<Swarm, SwarmError>
where
    B: DynBehavior + 'static,
    F: FnMut(usize) -> B,
{
    if count == 0 {
        return Err(SwarmError::Empty);
    }
    let mut swarm = Swarm::new();
    swarm.members.try_reserve_exact(count).map_err(|_| SwarmError::ResourceExhausted(count))?;
    for i in 0..count {
        let reg = lobby.register_agent(Role::Supporter, favored, None)?;
        let identity = AgentIdentity { agent: reg.agent, role: Role::Supporter, team: favored, shirt: None };
        swarm.push(identity, factory(i), 0)?;
    }
    Ok(swarm)
}
