//! Match orchestration: build the roster from a [`RunConfig`], run the
//! scheduler with in-process or socket agents, and record the result.

mod bench;
mod config;
mod experiment;
mod stats;
mod trace;

pub use bench::{bench_swarm, SwarmBench};
pub use config::{BehaviorKind, BudgetSpec, PlayerSpec, RunConfig, SupporterSpec, Transport};
pub use experiment::{bootstrap_mean_difference, home_advantage_experiment, ArmReport, ExperimentOptions, ExperimentReport, MatchSummary};
pub use stats::{match_stats, AgentStats, GroupStats, MatchStats, ScSummary, StatsBuilder};
pub use trace::{read_trace, SeventeenDigits, TraceHeader, TraceReader, TraceWriter, SCHEMA_VERSION, TRACE_FORMAT};

use std::thread;
use std::time::{Duration, Instant};

use crate::agent::{
    join, run_agent_loop, AgentBehavior, AgentIdentity, Echo, LoopOptions, PlayerArchetype, ReferencePlayer,
    ReferenceSupporter, Swarm, SystemClock,
};
use crate::model::{MatchConfig, Role, Team};
use crate::net::{Stadium, UdpConnection};
use crate::scheduler::{Lobby, Scheduler, SupporterBudget, TickRecord, TimedProposal};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error("agents: {0}")]
    Agents(String),
    #[error("scheduler: {0}")]
    Scheduler(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

macro_rules! scheduler_err {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Scheduler(e.to_string())
            }
        }
    )*};
}
scheduler_err!(crate::scheduler::SchedulerError, crate::scheduler::RegisterError, crate::agent::SwarmError);

impl From<crate::net::NetError> for RunError {
    fn from(e: crate::net::NetError) -> Self {
        match e {
            crate::net::NetError::NotEnoughAgents { .. } => RunError::Agents(e.to_string()),
            other => RunError::Scheduler(other.to_string()),
        }
    }
}

/// One agent to start, with everything needed to build its behavior.
#[derive(Clone, Debug, PartialEq)]
enum Member {
    Player(PlayerSpec),
    Supporter(SupporterSpec),
}

impl Member {
    fn role(&self) -> Role {
        match self {
            Member::Player(_) => Role::Player,
            Member::Supporter(_) => Role::Supporter,
        }
    }

    fn team(&self) -> Team {
        match self {
            Member::Player(p) => p.team,
            Member::Supporter(s) => s.team,
        }
    }

    fn shirt(&self) -> Option<u8> {
        match self {
            Member::Player(p) => p.shirt,
            Member::Supporter(_) => None,
        }
    }

    fn latency_us(&self) -> u64 {
        match self {
            Member::Player(p) => p.latency_us,
            Member::Supporter(s) => s.latency_us,
        }
    }

    fn behavior(&self, cfg: &RunConfig) -> AnyBehavior {
        match self {
            Member::Player(p) if p.behavior == BehaviorKind::Echo => AnyBehavior::Echo(Echo),
            Member::Supporter(s) if s.behavior == BehaviorKind::Echo => AnyBehavior::Echo(Echo),
            Member::Player(p) => {
                let shirt = p.shirt.expect("shirts are resolved");
                let mut arch = PlayerArchetype::for_shirt(p.team, shirt, &cfg.pitch);
                if let Some(k) = p.archetype {
                    arch.kind = k;
                }
                if let Some(v) = p.max_speed {
                    arch.max_speed = v;
                }
                AnyBehavior::Player(ReferencePlayer::with_kinematics(arch, cfg.pitch, cfg.kinematics))
            }
            Member::Supporter(s) => AnyBehavior::Supporter(ReferenceSupporter::new(s.team, s.bias, cfg.pitch)),
        }
    }
}

/// The behaviors a config can name.
#[allow(clippy::large_enum_variant)]
enum AnyBehavior {
    Echo(Echo),
    Player(ReferencePlayer),
    Supporter(ReferenceSupporter),
}

fn members(cfg: &RunConfig) -> Result<Vec<Member>, RunError> {
    cfg.validate()?;
    let mut out: Vec<Member> = cfg.resolved_players()?.into_iter().map(Member::Player).collect();
    for group in &cfg.supporters {
        for _ in 0..group.count {
            out.push(Member::Supporter(group.clone()));
        }
    }
    if out.is_empty() {
        return Err(RunError::Config("no players or supporters configured".into()));
    }
    Ok(out)
}

fn lobby(cfg: &RunConfig) -> Result<Lobby, RunError> {
    let budget = match cfg.supporter_budget {
        BudgetSpec::Shared { budget } => SupporterBudget::Shared { budget, expected: cfg.supporter_total(None) },
        BudgetSpec::PerSide { home, guest } => SupporterBudget::PerSide {
            home,
            guest,
            expected_home: cfg.supporter_total(Some(Team::Home)),
            expected_guest: cfg.supporter_total(Some(Team::Guest)),
        },
    };
    Lobby::new(cfg.base_match(), budget).map_err(|e| RunError::Config(format!("supporter_budget: {e}")))
}

/// A finished match.
#[derive(Clone, Debug)]
pub struct MatchOutcome {
    /// The configuration the scheduler actually ran, for the trace header.
    pub config: MatchConfig,
    pub stats: MatchStats,
    pub elapsed: Duration,
}

/// The scheduler configuration `cfg` registers to, without running it.
pub fn resolve_match(cfg: &RunConfig) -> Result<MatchConfig, RunError> {
    let mut lobby = lobby(cfg)?;
    for m in members(cfg)? {
        lobby.register_agent(m.role(), m.team(), m.shirt())?;
    }
    Ok(lobby.into_config())
}

/// Runs the match `cfg` describes. `on_start` receives the resolved
/// configuration before tick 0 and `sink` every tick record in order.
pub fn run_match<S, F>(cfg: &RunConfig, mut on_start: S, mut sink: F) -> Result<MatchOutcome, RunError>
where
    S: FnMut(&MatchConfig) -> Result<(), RunError>,
    F: FnMut(&TickRecord) -> Result<(), RunError>,
{
    let started = Instant::now();
    let members = members(cfg)?;
    let (config, stats) = match cfg.transport {
        Transport::InProcess => run_in_process(cfg, &members, &mut on_start, &mut sink)?,
        Transport::Udp => run_udp(cfg, &members, &mut on_start, &mut sink)?,
    };
    Ok(MatchOutcome { config, stats, elapsed: started.elapsed() })
}

fn push_member(swarm: &mut Swarm, identity: AgentIdentity, behavior: AnyBehavior, latency: u64) -> Result<(), RunError> {
    match behavior {
        AnyBehavior::Echo(b) => swarm.push(identity, b, latency)?,
        AnyBehavior::Player(b) => swarm.push(identity, b, latency)?,
        AnyBehavior::Supporter(b) => swarm.push(identity, b, latency)?,
    }
    Ok(())
}

fn run_in_process<S, F>(
    cfg: &RunConfig,
    members: &[Member],
    on_start: &mut S,
    sink: &mut F,
) -> Result<(MatchConfig, MatchStats), RunError>
where
    S: FnMut(&MatchConfig) -> Result<(), RunError>,
    F: FnMut(&TickRecord) -> Result<(), RunError>,
{
    let mut lobby = lobby(cfg)?;
    let mut swarm = Swarm::new();
    for m in members {
        let reg = lobby.register_agent(m.role(), m.team(), m.shirt())?;
        let identity = AgentIdentity { agent: reg.agent, role: reg.role, team: reg.team, shirt: reg.shirt };
        push_member(&mut swarm, identity, m.behavior(cfg), m.latency_us())?;
    }
    let config = lobby.into_config();
    on_start(&config)?;

    let mut sched = Scheduler::start_match(config.clone())?;
    let mut stats = StatsBuilder::new(&config);
    let period = Duration::from_millis(u64::from(cfg.tick_period_ms));
    let mut next = Instant::now();
    while !sched.is_finished() {
        let (_, reality) = sched.broadcast()?;
        let proposals = swarm.proposals(&reality)?;
        let rec = sched.run_tick(&proposals)?;
        stats.push(&rec);
        sink(&rec)?;
        if !cfg.virtual_clock {
            next += period;
            if let Some(wait) = next.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
    }
    Ok((config, stats.finish()))
}

fn spawn_socket_agent<B>(
    addr: std::net::SocketAddr,
    member: &Member,
    mut behavior: B,
    opts: LoopOptions,
) -> thread::JoinHandle<Result<(), String>>
where
    B: AgentBehavior + Send + 'static,
{
    let (role, team, shirt) = (member.role(), member.team(), member.shirt());
    thread::spawn(move || {
        let mut conn = UdpConnection::connect(addr).map_err(|e| e.to_string())?;
        let session = join(&mut conn, role, team, shirt, 10, Duration::from_millis(500)).map_err(|e| e.to_string())?;
        run_agent_loop(&mut behavior, &mut conn, &SystemClock::new(), &session, opts).map_err(|e| e.to_string())?;
        Ok(())
    })
}

fn run_udp<S, F>(
    cfg: &RunConfig,
    members: &[Member],
    on_start: &mut S,
    sink: &mut F,
) -> Result<(MatchConfig, MatchStats), RunError>
where
    S: FnMut(&MatchConfig) -> Result<(), RunError>,
    F: FnMut(&TickRecord) -> Result<(), RunError>,
{
    let mut stadium = Stadium::bind(cfg.bind.as_str(), lobby(cfg)?)?;
    let addr = stadium.local_addr()?;
    let opts = LoopOptions {
        deadline_margin: Duration::from_millis(u64::from(cfg.agent_margin_ms)),
        loss_timeout: Duration::from_millis(u64::from(cfg.tick_period_ms) * 20 + 2000),
    };

    let in_process = |m: &Member| matches!(m, Member::Supporter(s) if s.in_process);
    let mut handles = Vec::new();
    let sockets: Vec<&Member> = members.iter().filter(|m| !in_process(m)).collect();
    for &m in sockets.iter().filter(|_| cfg.spawn_agents) {
        let h = match m.behavior(cfg) {
            AnyBehavior::Echo(b) => spawn_socket_agent(addr, m, b, opts),
            AnyBehavior::Player(b) => spawn_socket_agent(addr, m, b, opts),
            AnyBehavior::Supporter(b) => spawn_socket_agent(addr, m, b, opts),
        };
        handles.push(h);
    }
    stadium.accept_joins(sockets.len(), Duration::from_millis(u64::from(cfg.lobby_timeout_ms)))?;

    let mut swarm = Swarm::new();
    for m in members.iter().filter(|m| in_process(m)) {
        let reg = stadium.lobby_mut().register_agent(m.role(), m.team(), m.shirt())?;
        let identity = AgentIdentity { agent: reg.agent, role: reg.role, team: reg.team, shirt: reg.shirt };
        push_member(&mut swarm, identity, m.behavior(cfg), m.latency_us())?;
    }

    let config = stadium.lobby().config().clone();
    on_start(&config)?;
    let mut stats = StatsBuilder::new(&config);
    let mut failure = None;
    let swarm_ref = if swarm.is_empty() { None } else { Some(&mut swarm) };
    stadium.run(swarm_ref, |rec| {
        stats.push(rec);
        if failure.is_none() {
            if let Err(e) = sink(rec) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    for h in handles {
        match h.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(RunError::Agents(e)),
            Err(_) => return Err(RunError::Agents("agent thread panicked".into())),
        }
    }
    Ok((config, stats.finish()))
}

/// Result of re-running the scheduler over recorded proposals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub ticks: u32,
    /// Ticks whose recomputed record differs from the recorded one.
    pub mismatched: Vec<u32>,
    /// Ticks whose recomputed winner differs.
    pub winner_mismatches: Vec<u32>,
}

impl ReplayReport {
    pub fn is_exact(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Feeds every recorded proposal, with its recorded arrival time, back
/// through a fresh scheduler and compares each resulting tick record with
/// the recorded one.
pub fn replay<'a, I>(config: &MatchConfig, records: I) -> Result<ReplayReport, RunError>
where
    I: IntoIterator<Item = &'a TickRecord>,
{
    let mut sched = Scheduler::start_match(config.clone())?;
    let mut report = ReplayReport::default();
    for rec in records {
        let (tick, reality) = sched.broadcast()?;
        let proposals: Vec<TimedProposal> = rec
            .proposals
            .iter()
            .map(|p| TimedProposal { agent: p.agent, state: p.state, arrival_us: p.arrival_us })
            .collect();
        let again = sched.run_tick(&proposals)?;
        if tick != rec.tick || reality != rec.reality || again != *rec {
            report.mismatched.push(rec.tick);
        }
        if again.winner != rec.winner {
            report.winner_mismatches.push(rec.tick);
        }
        report.ticks += 1;
    }
    Ok(report)
}

/// Convenience for tests and benchmarks: runs `cfg` in process with a
/// virtual clock and keeps every record.
pub fn run_to_records(cfg: &RunConfig) -> Result<(MatchConfig, Vec<TickRecord>, MatchStats), RunError> {
    let mut cfg = cfg.clone();
    cfg.transport = Transport::InProcess;
    cfg.virtual_clock = true;
    let mut records = Vec::new();
    let out = run_match(&cfg, |_| Ok(()), |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok((out.config, records, out.stats))
}
