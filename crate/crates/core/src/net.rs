//! Datagram transport: the stadium server that hosts a match over UDP and
//! the client-side connection used by socket agents.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::agent::{Connection, Swarm, SwarmError};
use crate::model::AgentId;
use crate::scheduler::{Lobby, RegisterError, Registration, Scheduler, SchedulerError, TickRecord, TimedProposal};
use crate::wire::{decode, encode, ErrorCode, Message, MAX_DATAGRAM};

const POLL: Duration = Duration::from_millis(20);
const MATCH_END_REPEATS: usize = 3;

/// A UDP socket connected to one stadium.
#[derive(Debug)]
pub struct UdpConnection {
    socket: UdpSocket,
    timeout: Option<Duration>,
}

impl UdpConnection {
    pub fn connect<A: ToSocketAddrs>(server: A) -> io::Result<Self> {
        let server = server
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no address"))?;
        let local: SocketAddr = if server.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().unwrap();
        let socket = UdpSocket::bind(local)?;
        socket.connect(server)?;
        Ok(UdpConnection { socket, timeout: None })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }
}

impl Connection for UdpConnection {
    fn send(&mut self, datagram: &[u8]) -> io::Result<()> {
        match self.socket.send(datagram) {
            Ok(_) => Ok(()),
            // an ICMP unreachable from an earlier send; the next one may work
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        let timeout = timeout.max(Duration::from_millis(1));
        if self.timeout != Some(timeout) {
            self.socket.set_read_timeout(Some(timeout))?;
            self.timeout = Some(timeout);
        }
        let mut buf = [0u8; MAX_DATAGRAM];
        match self.socket.recv(&mut buf) {
            Ok(n) => Ok(Some(buf[..n].to_vec())),
            Err(e) if is_timeout(&e) || e.kind() == io::ErrorKind::ConnectionRefused => Ok(None),
            Err(e) => Err(e),
        }
    }
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error("only {joined} of {expected} agents joined before the lobby closed")]
    NotEnoughAgents { expected: usize, joined: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StadiumReport {
    pub ticks: u32,
    /// Proposals for a tick other than the current one.
    pub stale: u64,
    /// Proposals whose sender address is not the one the agent joined from.
    pub spoofed: u64,
    pub malformed: u64,
}

struct Datagram {
    at: Instant,
    from: SocketAddr,
    bytes: Vec<u8>,
}

/// Hosts one match over UDP: registers agents from `Join` datagrams, then
/// runs the tick loop in real time.
pub struct Stadium {
    socket: UdpSocket,
    inbox: Receiver<Datagram>,
    stop: Arc<AtomicBool>,
    reader: Option<JoinHandle<()>>,
    lobby: Lobby,
    joined: HashMap<SocketAddr, Registration>,
    report: StadiumReport,
}

impl Stadium {
    pub fn bind<A: ToSocketAddrs>(addr: A, lobby: Lobby) -> io::Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        let reader_socket = socket.try_clone()?;
        reader_socket.set_read_timeout(Some(POLL))?;
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, inbox) = mpsc::channel();
        let flag = stop.clone();
        let reader = thread::Builder::new().name("stadium-recv".into()).spawn(move || {
            let mut buf = [0u8; MAX_DATAGRAM];
            while !flag.load(Ordering::Relaxed) {
                match reader_socket.recv_from(&mut buf) {
                    Ok((n, from)) => {
                        let d = Datagram { at: Instant::now(), from, bytes: buf[..n].to_vec() };
                        if tx.send(d).is_err() {
                            return;
                        }
                    }
                    Err(e) if is_timeout(&e) => {}
                    // ICMP errors from agents that went away
                    Err(_) => {}
                }
            }
        })?;
        Ok(Stadium {
            socket,
            inbox,
            stop,
            reader: Some(reader),
            lobby,
            joined: HashMap::new(),
            report: StadiumReport::default(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn lobby(&self) -> &Lobby {
        &self.lobby
    }

    /// Registers joining agents until `expected` socket agents are in or
    /// `timeout` passes. A repeated `Join` from the same address gets the
    /// same acknowledgement again.
    pub fn accept_joins(&mut self, expected: usize, timeout: Duration) -> Result<usize, NetError> {
        let until = Instant::now() + timeout;
        while self.joined.len() < expected {
            let Some(left) = until.checked_duration_since(Instant::now()) else { break };
            let d = match self.inbox.recv_timeout(left) {
                Ok(d) => d,
                Err(RecvTimeoutError::Timeout) => break,
                Err(RecvTimeoutError::Disconnected) => return Err(io::Error::other("receiver stopped").into()),
            };
            match decode(&d.bytes) {
                Ok(Message::Join { role, team, shirt }) => {
                    let reply = match self.joined.get(&d.from) {
                        Some(reg) => self.ack(reg),
                        None => match self.lobby.register_agent(role, team, shirt) {
                            Ok(reg) => {
                                self.joined.insert(d.from, reg);
                                self.ack(&reg)
                            }
                            Err(e) => Message::Error { code: register_error_code(&e) },
                        },
                    };
                    self.send_to(&reply, d.from)?;
                }
                Ok(_) => {}
                Err(_) => self.report.malformed += 1,
            }
        }
        if self.joined.len() < expected {
            return Err(NetError::NotEnoughAgents { expected, joined: self.joined.len() });
        }
        Ok(self.joined.len())
    }

    fn ack(&self, reg: &Registration) -> Message {
        let cfg = self.lobby.config();
        Message::JoinAck {
            agent_id: reg.agent,
            initial_w: reg.will,
            tick_period_ms: cfg.tick_period_ms,
            proposal_deadline_ms: cfg.proposal_deadline_ms,
        }
    }

    fn send_to(&self, msg: &Message, to: SocketAddr) -> io::Result<()> {
        match self.socket.send_to(&encode(msg), to) {
            Ok(_) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => Ok(()),
            Err(e) => Err(e),
        }
    }

    /// Lobby access for registering in-process members before the match.
    pub fn lobby_mut(&mut self) -> &mut Lobby {
        &mut self.lobby
    }

    /// Plays the match in real time. Socket proposals are stamped with
    /// their arrival time since the tick's broadcast; `swarm` members are
    /// merged in with their synthetic latencies.
    pub fn run<F>(mut self, mut swarm: Option<&mut Swarm>, mut sink: F) -> Result<StadiumReport, NetError>
    where
        F: FnMut(&TickRecord),
    {
        let mut sched = Scheduler::start_match(self.lobby.config().clone())?;
        let period = Duration::from_millis(u64::from(sched.config().tick_period_ms));
        let deadline = Duration::from_micros(sched.deadline_us());
        let by_agent: BTreeMap<AgentId, SocketAddr> = self.joined.iter().map(|(a, r)| (r.agent, *a)).collect();

        let mut next_start = Instant::now();
        while !sched.is_finished() {
            let start = Instant::now().max(next_start);
            let (tick, reality) = sched.broadcast()?;
            for (agent, addr) in &by_agent {
                let w = sched.will().get(*agent).unwrap_or(0.0);
                self.send_to(&Message::Reality { tick, state: reality, will_of_recipient: w }, *addr)?;
            }

            let mut mailbox = match swarm.as_deref_mut() {
                Some(s) => s.proposals(&reality)?,
                None => Vec::new(),
            };
            let close = start + deadline;
            loop {
                let left = close.saturating_duration_since(Instant::now());
                let d = if left.is_zero() {
                    match self.inbox.try_recv() {
                        Ok(d) => d,
                        Err(_) => break,
                    }
                } else {
                    match self.inbox.recv_timeout(left) {
                        Ok(d) => d,
                        Err(RecvTimeoutError::Timeout) => continue,
                        Err(RecvTimeoutError::Disconnected) => break,
                    }
                };
                self.file(d, tick, start, &by_agent, &mut mailbox)?;
            }

            let rec = sched.run_tick(&mailbox)?;
            sink(&rec);
            self.report.ticks += 1;

            next_start = start + period;
            if let Some(wait) = next_start.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }

        let end = Message::MatchEnd { final_tick: sched.tick().saturating_sub(1) };
        for _ in 0..MATCH_END_REPEATS {
            for addr in by_agent.values() {
                self.send_to(&end, *addr)?;
            }
        }
        Ok(self.report)
    }

    fn file(
        &mut self,
        d: Datagram,
        tick: u32,
        start: Instant,
        by_agent: &BTreeMap<AgentId, SocketAddr>,
        mailbox: &mut Vec<TimedProposal>,
    ) -> io::Result<()> {
        match decode(&d.bytes) {
            Ok(Message::Proposal { tick: t, agent_id, state }) => {
                if t != tick {
                    self.report.stale += 1;
                } else if by_agent.get(&agent_id).is_some_and(|a| *a == d.from) {
                    let arrival_us = d.at.saturating_duration_since(start).as_micros() as u64;
                    mailbox.push(TimedProposal { agent: agent_id, state, arrival_us });
                } else {
                    self.report.spoofed += 1;
                    self.send_to(&Message::Error { code: ErrorCode::UNKNOWN_AGENT }, d.from)?;
                }
            }
            Ok(Message::Join { .. }) => {
                let reply = match self.joined.get(&d.from) {
                    Some(reg) => self.ack(reg),
                    None => Message::Error { code: ErrorCode::MATCH_ALREADY_STARTED },
                };
                self.send_to(&reply, d.from)?;
            }
            Ok(_) => {}
            Err(_) => self.report.malformed += 1,
        }
        Ok(())
    }
}

impl Drop for Stadium {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}

pub fn register_error_code(e: &RegisterError) -> ErrorCode {
    match e {
        RegisterError::RosterFull => ErrorCode::ROSTER_FULL,
        RegisterError::DuplicateShirt { .. } => ErrorCode::DUPLICATE_SHIRT,
        RegisterError::MatchAlreadyStarted => ErrorCode::MATCH_ALREADY_STARTED,
        RegisterError::BadShirt(_) | RegisterError::Budget(_) | RegisterError::Will(_) => ErrorCode::BAD_REQUEST,
    }
}
