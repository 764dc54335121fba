//! Agent side of the protocol: the behavior interface, the client loop that
//! turns realities into proposals before the deadline, and the reference
//! players and supporters.

mod player;
mod supporter;
mod swarm;

pub use player::{ArchetypeKind, Kinematics, PlayerArchetype, ReferencePlayer};
pub use supporter::ReferenceSupporter;
pub use swarm::{in_process_swarm, Swarm, SwarmError, SwarmMember};

use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::model::{AgentId, Role, StateVector, Team};
use crate::wire::{decode, encode, ErrorCode, Message};

/// Who an agent is in the current match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentIdentity {
    pub agent: AgentId,
    pub role: Role,
    /// Team played for, or favoured team for supporters.
    pub team: Team,
    pub shirt: Option<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Done,
}

/// Decision interface of an agent.
///
/// `observe` builds a private world model from the received reality, each
/// `step` advances that model by one inner iteration, and `propose` turns
/// it into the full state vector sent to the scheduler.
pub trait AgentBehavior {
    type State;

    fn observe(&mut self, reality: &StateVector, me: &AgentIdentity) -> Self::State;

    fn step(&mut self, state: &mut Self::State) -> StepOutcome;

    fn propose(&mut self, state: &Self::State) -> StateVector;
}

/// Object-safe form of [`AgentBehavior`] with a bounded number of steps.
pub trait DynBehavior: Send {
    fn decide(&mut self, reality: &StateVector, me: &AgentIdentity, max_steps: usize) -> StateVector;
}

impl<B> DynBehavior for B
where
    B: AgentBehavior + Send,
{
    fn decide(&mut self, reality: &StateVector, me: &AgentIdentity, max_steps: usize) -> StateVector {
        let mut state = self.observe(reality, me);
        for _ in 0..max_steps {
            if self.step(&mut state) == StepOutcome::Done {
                break;
            }
        }
        self.propose(&state)
    }
}

/// Proposes exactly what it received.
#[derive(Clone, Copy, Debug, Default)]
pub struct Echo;

impl AgentBehavior for Echo {
    type State = StateVector;

    fn observe(&mut self, reality: &StateVector, _me: &AgentIdentity) -> StateVector {
        *reality
    }

    fn step(&mut self, _state: &mut StateVector) -> StepOutcome {
        StepOutcome::Done
    }

    fn propose(&mut self, state: &StateVector) -> StateVector {
        *state
    }
}

pub trait Clock {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Clone, Copy, Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Clock that only moves when told to. Clones share the same time.
#[derive(Clone, Debug, Default)]
pub struct ManualClock {
    micros: Arc<AtomicU64>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, by: Duration) {
        self.micros.fetch_add(by.as_micros() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_micros(self.micros.load(Ordering::SeqCst))
    }
}

/// A datagram link to the scheduler.
pub trait Connection {
    fn send(&mut self, datagram: &[u8]) -> io::Result<()>;

    /// Waits up to `timeout` for one datagram; `Ok(None)` on timeout.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>>;
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("scheduler refused to register us (code {})", .0 .0)]
    Rejected(ErrorCode),
    #[error("no answer to join after {0} attempts")]
    NoAck(u32),
}

/// Parameters granted by the scheduler at join time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Session {
    pub identity: AgentIdentity,
    pub initial_will: f64,
    pub tick_period: Duration,
    pub proposal_deadline: Duration,
}

/// Sends `Join` until a `JoinAck` or `Error` comes back.
pub fn join<C: Connection>(
    conn: &mut C,
    role: Role,
    team: Team,
    shirt: Option<u8>,
    attempts: u32,
    wait: Duration,
) -> Result<Session, AgentError> {
    let request = encode(&Message::Join { role, team, shirt });
    for _ in 0..attempts {
        conn.send(&request)?;
        let until = Instant::now() + wait;
        while let Some(left) = until.checked_duration_since(Instant::now()) {
            let Some(bytes) = conn.recv(left)? else { break };
            match decode(&bytes) {
                Ok(Message::JoinAck { agent_id, initial_w, tick_period_ms, proposal_deadline_ms }) => {
                    return Ok(Session {
                        identity: AgentIdentity { agent: agent_id, role, team, shirt },
                        initial_will: initial_w,
                        tick_period: Duration::from_millis(u64::from(tick_period_ms)),
                        proposal_deadline: Duration::from_millis(u64::from(proposal_deadline_ms)),
                    });
                }
                Ok(Message::Error { code }) => return Err(AgentError::Rejected(code)),
                _ => {}
            }
        }
    }
    Err(AgentError::NoAck(attempts))
}

#[derive(Clone, Copy, Debug)]
pub struct LoopOptions {
    /// Stop stepping this long before the proposal deadline.
    pub deadline_margin: Duration,
    /// Give up after this long without any datagram from the scheduler.
    pub loss_timeout: Duration,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions { deadline_margin: Duration::from_millis(10), loss_timeout: Duration::from_secs(5) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopEnd {
    MatchEnded { final_tick: u32 },
    ConnectionLost { silence: Duration },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentReport {
    pub proposals_sent: u32,
    pub last_tick: Option<u32>,
    pub stale_realities: u32,
    pub malformed: u32,
    pub steps: u64,
    pub end: LoopEnd,
}

/// Client loop: for each new reality, observe, step until the deadline
/// minus `deadline_margin` (measured from receipt) or until the behavior is
/// done, then send the proposal stamped with the reality's tick.
pub fn run_agent_loop<B, C, K>(
    behavior: &mut B,
    conn: &mut C,
    clock: &K,
    session: &Session,
    opts: LoopOptions,
) -> Result<AgentReport, AgentError>
where
    B: AgentBehavior,
    C: Connection,
    K: Clock,
{
    let mut report = AgentReport {
        proposals_sent: 0,
        last_tick: None,
        stale_realities: 0,
        malformed: 0,
        steps: 0,
        end: LoopEnd::ConnectionLost { silence: Duration::ZERO },
    };
    let budget = session.proposal_deadline.saturating_sub(opts.deadline_margin);
    let mut last_heard = clock.now();

    loop {
        let silence = clock.now().saturating_sub(last_heard);
        if silence >= opts.loss_timeout {
            report.end = LoopEnd::ConnectionLost { silence };
            return Ok(report);
        }
        let Some(bytes) = conn.recv(opts.loss_timeout - silence)? else {
            continue;
        };
        last_heard = clock.now();

        match decode(&bytes) {
            Ok(Message::Reality { tick, state, .. }) => {
                if report.last_tick.is_some_and(|t| tick <= t) {
                    report.stale_realities += 1;
                    continue;
                }
                let stop_at = clock.now() + budget;
                let mut model = behavior.observe(&state, &session.identity);
                while clock.now() < stop_at {
                    report.steps += 1;
                    if behavior.step(&mut model) == StepOutcome::Done {
                        break;
                    }
                }
                let proposal = behavior.propose(&model);
                conn.send(&encode(&Message::Proposal { tick, agent_id: session.identity.agent, state: proposal }))?;
                report.proposals_sent += 1;
                report.last_tick = Some(tick);
            }
            Ok(Message::MatchEnd { final_tick }) => {
                report.end = LoopEnd::MatchEnded { final_tick };
                return Ok(report);
            }
            Ok(_) => {}
            Err(_) => report.malformed += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Replays scripted datagrams and records what the agent sends, with
    /// the clock reading at send time.
    struct Scripted {
        inbox: VecDeque<Vec<u8>>,
        sent: Vec<(Duration, Message)>,
        clock: ManualClock,
    }

    impl Connection for Scripted {
        fn send(&mut self, datagram: &[u8]) -> io::Result<()> {
            self.sent.push((self.clock.now(), decode(datagram).unwrap()));
            Ok(())
        }

        fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
            match self.inbox.pop_front() {
                Some(b) => Ok(Some(b)),
                None => {
                    self.clock.advance(timeout);
                    Ok(None)
                }
            }
        }
    }

    fn session(deadline_ms: u64) -> Session {
        Session {
            identity: AgentIdentity { agent: AgentId(5), role: Role::Supporter, team: Team::Home, shirt: None },
            initial_will: 0.1,
            tick_period: Duration::from_millis(100),
            proposal_deadline: Duration::from_millis(deadline_ms),
        }
    }

    fn reality(tick: u32) -> Vec<u8> {
        let mut s = StateVector::zeroed();
        s.ball.x = f64::from(tick);
        encode(&Message::Reality { tick, state: s, will_of_recipient: 0.1 })
    }

    /// Never finishes; each step costs `cost` of virtual time.
    struct Busy {
        clock: ManualClock,
        cost: Duration,
    }

    impl AgentBehavior for Busy {
        type State = (StateVector, u32);

        fn observe(&mut self, reality: &StateVector, _me: &AgentIdentity) -> Self::State {
            (*reality, 0)
        }

        fn step(&mut self, state: &mut Self::State) -> StepOutcome {
            self.clock.advance(self.cost);
            state.1 += 1;
            StepOutcome::Continue
        }

        fn propose(&mut self, state: &Self::State) -> StateVector {
            state.0
        }
    }

    #[test]
    fn scripted_session_sends_one_proposal_per_tick() {
        let clock = ManualClock::new();
        let mut inbox: VecDeque<Vec<u8>> = (0..5).map(reality).collect();
        inbox.push_back(encode(&Message::MatchEnd { final_tick: 4 }));
        let mut conn = Scripted { inbox, sent: Vec::new(), clock: clock.clone() };
        let report = run_agent_loop(&mut Echo, &mut conn, &clock, &session(80), LoopOptions::default()).unwrap();

        assert_eq!(report.proposals_sent, 5);
        assert_eq!(report.end, LoopEnd::MatchEnded { final_tick: 4 });
        let ticks: Vec<u32> = conn
            .sent
            .iter()
            .map(|(_, m)| match m {
                Message::Proposal { tick, agent_id, state } => {
                    assert_eq!(*agent_id, AgentId(5));
                    assert_eq!(state.ball.x, f64::from(*tick));
                    *tick
                }
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(ticks, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn stale_and_garbage_datagrams_are_ignored() {
        let clock = ManualClock::new();
        let inbox: VecDeque<Vec<u8>> = vec![
            reality(3),
            reality(2),
            reality(3),
            b"junk".to_vec(),
            reality(4),
            encode(&Message::MatchEnd { final_tick: 4 }),
        ]
        .into();
        let mut conn = Scripted { inbox, sent: Vec::new(), clock: clock.clone() };
        let report = run_agent_loop(&mut Echo, &mut conn, &clock, &session(80), LoopOptions::default()).unwrap();
        assert_eq!(report.proposals_sent, 2);
        assert_eq!(report.stale_realities, 2);
        assert_eq!(report.malformed, 1);
    }

    #[test]
    fn margin_at_least_deadline_means_no_steps() {
        let clock = ManualClock::new();
        let inbox: VecDeque<Vec<u8>> = vec![reality(0), encode(&Message::MatchEnd { final_tick: 0 })].into();
        let mut conn = Scripted { inbox, sent: Vec::new(), clock: clock.clone() };
        let mut busy = Busy { clock: clock.clone(), cost: Duration::from_millis(1) };
        let opts = LoopOptions { deadline_margin: Duration::from_millis(100), ..LoopOptions::default() };
        let report = run_agent_loop(&mut busy, &mut conn, &clock, &session(80), opts).unwrap();
        assert_eq!(report.steps, 0);
        assert_eq!(report.proposals_sent, 1);
    }

    #[test]
    fn proposals_never_leave_after_the_deadline() {
        for (cost_us, margin_us) in [(700u64, 700u64), (1_000, 3_000), (333, 1_000)] {
            let clock = ManualClock::new();
            let mut inbox = VecDeque::new();
            let mut received_at = Vec::new();
            for t in 0..10 {
                inbox.push_back(reality(t));
            }
            inbox.push_back(encode(&Message::MatchEnd { final_tick: 9 }));
            let mut conn = Scripted { inbox, sent: Vec::new(), clock: clock.clone() };
            let mut busy = Busy { clock: clock.clone(), cost: Duration::from_micros(cost_us) };
            let opts = LoopOptions { deadline_margin: Duration::from_micros(margin_us), ..LoopOptions::default() };
            let sess = session(80);
            // Each reality arrives when the previous proposal has been sent.
            let report = run_agent_loop(&mut busy, &mut conn, &clock, &sess, opts).unwrap();
            assert_eq!(report.proposals_sent, 10);
            let mut start = Duration::ZERO;
            for (at, _) in &conn.sent {
                received_at.push(start);
                assert!(*at - start <= sess.proposal_deadline, "sent {:?} after receipt", *at - start);
                assert!(*at - start + Duration::from_micros(cost_us) > sess.proposal_deadline - opts.deadline_margin);
                start = *at;
            }
        }
    }

    #[test]
    fn silence_ends_the_loop() {
        let clock = ManualClock::new();
        let mut conn = Scripted { inbox: VecDeque::new(), sent: Vec::new(), clock: clock.clone() };
        let opts = LoopOptions { loss_timeout: Duration::from_secs(2), ..LoopOptions::default() };
        let report = run_agent_loop(&mut Echo, &mut conn, &clock, &session(80), opts).unwrap();
        assert_eq!(report.end, LoopEnd::ConnectionLost { silence: Duration::from_secs(2) });
        assert_eq!(report.proposals_sent, 0);
    }

    #[test]
    fn dyn_behavior_respects_step_budget() {
        let clock = ManualClock::new();
        let mut busy = Busy { clock: clock.clone(), cost: Duration::from_millis(1) };
        let me = session(80).identity;
        let out = DynBehavior::decide(&mut busy, &StateVector::zeroed(), &me, 7);
        assert_eq!(out, StateVector::zeroed());
        assert_eq!(clock.now(), Duration::from_millis(7));
    }
}
