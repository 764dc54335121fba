//! Datagram codec for scheduler/agent traffic.
//!
//! Every message is `"QCSS"`, a version byte, a type byte and a fixed-size
//! payload. Integers are little-endian, reals are little-endian IEEE-754
//! binary64. A state vector is its 46 coordinates followed by the
//! possessing team (0 home, 1 guest) and the possessing shirt (1..=11).
//! See `docs/protocol.md` for the byte tables.

use crate::model::{AgentId, Role, StateVector, Team, COORDINATE_COUNT, SQUAD_SIZE};

pub const MAGIC: [u8; 4] = *b"QCSS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 6;
/// Upper bound on any encoded message.
pub const MAX_DATAGRAM: usize = 512;
pub const STATE_LEN: usize = COORDINATE_COUNT * 8 + 2;

const TYPE_JOIN: u8 = 1;
const TYPE_JOIN_ACK: u8 = 2;
const TYPE_REALITY: u8 = 3;
const TYPE_PROPOSAL: u8 = 4;
const TYPE_MATCH_END: u8 = 5;
const TYPE_ERROR: u8 = 6;

/// Error codes carried by [`Message::Error`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ErrorCode(pub u16);

impl ErrorCode {
    pub const ROSTER_FULL: ErrorCode = ErrorCode(1);
    pub const DUPLICATE_SHIRT: ErrorCode = ErrorCode(2);
    pub const MATCH_ALREADY_STARTED: ErrorCode = ErrorCode(3);
    pub const UNKNOWN_AGENT: ErrorCode = ErrorCode(4);
    pub const BAD_REQUEST: ErrorCode = ErrorCode(5);
}

/// Equality is byte equality of the encodings, so reals compare bitwise.
#[derive(Clone, Copy, Debug)]
pub enum Message {
    Join { role: Role, team: Team, shirt: Option<u8> },
    JoinAck { agent_id: AgentId, initial_w: f64, tick_period_ms: u32, proposal_deadline_ms: u32 },
    Reality { tick: u32, state: StateVector, will_of_recipient: f64 },
    Proposal { tick: u32, agent_id: AgentId, state: StateVector },
    MatchEnd { final_tick: u32 },
    Error { code: ErrorCode },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic")]
    BadMagic,
    #[error("unknown protocol version {0}")]
    UnknownVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("message truncated")]
    Truncated,
    #[error("enumerated field out of range")]
    BadEnum,
    #[error("non-finite real")]
    NonFiniteField,
    #[error("trailing bytes after message")]
    TrailingBytes,
}

impl PartialEq for Message {
    fn eq(&self, other: &Self) -> bool {
        encode(self) == encode(other)
    }
}

impl Message {
    fn type_byte(&self) -> u8 {
        match self {
            Message::Join { .. } => TYPE_JOIN,
            Message::JoinAck { .. } => TYPE_JOIN_ACK,
            Message::Reality { .. } => TYPE_REALITY,
            Message::Proposal { .. } => TYPE_PROPOSAL,
            Message::MatchEnd { .. } => TYPE_MATCH_END,
            Message::Error { .. } => TYPE_ERROR,
        }
    }
}

pub fn encode(m: &Message) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + STATE_LEN + 16);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(m.type_byte());
    match *m {
        Message::Join { role, team, shirt } => {
            out.push(role_byte(role));
            out.push(team_byte(team));
            out.push(shirt.unwrap_or(0));
        }
        Message::JoinAck { agent_id, initial_w, tick_period_ms, proposal_deadline_ms } => {
            out.extend_from_slice(&agent_id.0.to_le_bytes());
            out.extend_from_slice(&initial_w.to_le_bytes());
            out.extend_from_slice(&tick_period_ms.to_le_bytes());
            out.extend_from_slice(&proposal_deadline_ms.to_le_bytes());
        }
        Message::Reality { tick, ref state, will_of_recipient } => {
            out.extend_from_slice(&tick.to_le_bytes());
            put_state(&mut out, state);
            out.extend_from_slice(&will_of_recipient.to_le_bytes());
        }
        Message::Proposal { tick, agent_id, ref state } => {
            out.extend_from_slice(&tick.to_le_bytes());
            out.extend_from_slice(&agent_id.0.to_le_bytes());
            put_state(&mut out, state);
        }
        Message::MatchEnd { final_tick } => out.extend_from_slice(&final_tick.to_le_bytes()),
        Message::Error { code } => out.extend_from_slice(&code.0.to_le_bytes()),
    }
    debug_assert!(out.len() <= MAX_DATAGRAM);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
    let prefix = bytes.len().min(MAGIC.len());
    if bytes[..prefix] != MAGIC[..prefix] {
        return Err(DecodeError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated);
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::UnknownVersion(bytes[4]));
    }
    let mut r = Reader { buf: &bytes[HEADER_LEN..] };
    let msg = match bytes[5] {
        TYPE_JOIN => {
            let role = match r.u8()? {
                0 => Role::Player,
                1 => Role::Supporter,
                _ => return Err(DecodeError::BadEnum),
            };
            let team = r.team()?;
            let shirt = match r.u8()? {
                0 => None,
                s if usize::from(s) <= SQUAD_SIZE => Some(s),
                _ => return Err(DecodeError::BadEnum),
            };
            Message::Join { role, team, shirt }
        }
        TYPE_JOIN_ACK => Message::JoinAck {
            agent_id: AgentId(r.u32()?),
            initial_w: r.real()?,
            tick_period_ms: r.u32()?,
            proposal_deadline_ms: r.u32()?,
        },
        TYPE_REALITY => Message::Reality { tick: r.u32()?, state: r.state()?, will_of_recipient: r.real()? },
        TYPE_PROPOSAL => Message::Proposal { tick: r.u32()?, agent_id: AgentId(r.u32()?), state: r.state()? },
        TYPE_MATCH_END => Message::MatchEnd { final_tick: r.u32()? },
        TYPE_ERROR => Message::Error { code: ErrorCode(r.u16()?) },
        other => return Err(DecodeError::UnknownType(other)),
    };
    if !r.buf.is_empty() {
        return Err(DecodeError::TrailingBytes);
    }
    Ok(msg)
}

fn role_byte(role: Role) -> u8 {
    match role {
        Role::Player => 0,
        Role::Supporter => 1,
    }
}

fn team_byte(team: Team) -> u8 {
    match team {
        Team::Home => 0,
        Team::Guest => 1,
    }
}

fn put_state(out: &mut Vec<u8>, s: &StateVector) {
    for c in s.coordinates() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.push(team_byte(s.possessing_team));
    out.push(s.possessing_player);
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let (head, rest) = self.buf.split_first_chunk::<N>().ok_or(DecodeError::Truncated)?;
        self.buf = rest;
        Ok(*head)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        self.take().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        self.take().map(u32::from_le_bytes)
    }

    fn real(&mut self) -> Result<f64, DecodeError> {
        let v = f64::from_le_bytes(self.take()?);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DecodeError::NonFiniteField)
        }
    }

    fn team(&mut self) -> Result<Team, DecodeError> {
        match self.u8()? {
            0 => Ok(Team::Home),
            1 => Ok(Team::Guest),
            _ => Err(DecodeError::BadEnum),
        }
    }

    fn state(&mut self) -> Result<StateVector, DecodeError> {
        let mut coords = [0.0; COORDINATE_COUNT];
        for c in &mut coords {
            *c = self.real()?;
        }
        let team = self.team()?;
        let player = self.u8()?;
        if !(1..=SQUAD_SIZE as u8).contains(&player) {
            return Err(DecodeError::BadEnum);
        }
        Ok(StateVector::from_coordinates(&coords, team, player))
    }
}
