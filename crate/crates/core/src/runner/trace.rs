//! Line-oriented match traces.
//!
//! The first line is a [`TraceHeader`]; every following line is one tick.
//! Lines are JSON objects and every real number is written with 17
//! significant digits, so reading a trace and writing it again reproduces
//! the same bytes.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::consciousness::{Selection, SelectionDistribution};
use crate::model::{AgentId, MatchConfig, StateVector, WillTable, COORDINATE_COUNT};
use crate::scheduler::{ProposalStatus, ReceivedProposal, TickRecord};
use crate::wire::VERSION;

use super::RunError;

pub const TRACE_FORMAT: &str = "qcss-trace";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub schema_version: u32,
    pub protocol_version: u8,
    pub seed: u64,
    /// Resolved scheduler configuration, roster and initial will included.
    pub config: MatchConfig,
}

impl TraceHeader {
    pub fn new(config: MatchConfig) -> Self {
        TraceHeader {
            format: TRACE_FORMAT.into(),
            schema_version: SCHEMA_VERSION,
            protocol_version: VERSION,
            seed: config.rng_seed,
            config,
        }
    }

    fn check(&self) -> Result<(), RunError> {
        if self.format != TRACE_FORMAT {
            return Err(RunError::Trace(format!("not a trace file (format {:?})", self.format)));
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(RunError::Trace(format!(
                "trace schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }
}

/// On-disk form of a tick. Proposals refer to `states` by index so agents
/// that proposed the same state share one copy.
#[derive(Serialize, Deserialize)]
struct TickLine {
    tick: u32,
    reality: StateVector,
    states: Vec<StateVector>,
    proposals: Vec<ProposalLine>,
    eligible: BTreeSet<AgentId>,
    scores: Vec<(AgentId, f64)>,
    distribution: SelectionDistribution,
    winner: Selection,
    will: WillTable,
}

#[derive(Serialize, Deserialize)]
struct ProposalLine {
    agent: AgentId,
    arrival_us: u64,
    state: u32,
    status: ProposalStatus,
}

type StateKey = ([u64; COORDINATE_COUNT], u8, u8);

fn key(s: &StateVector) -> StateKey {
    (s.coordinates().map(f64::to_bits), s.possessing_team as u8, s.possessing_player)
}

impl TickLine {
    fn from_record(r: &TickRecord) -> Self {
        let mut index: HashMap<StateKey, u32> = HashMap::new();
        let mut states = Vec::new();
        let proposals = r
            .proposals
            .iter()
            .map(|p| {
                let state = *index.entry(key(&p.state)).or_insert_with(|| {
                    states.push(p.state);
                    (states.len() - 1) as u32
                });
                ProposalLine { agent: p.agent, arrival_us: p.arrival_us, state, status: p.status }
            })
            .collect();
        TickLine {
            tick: r.tick,
            reality: r.reality,
            states,
            proposals,
            eligible: r.eligible.clone(),
            scores: r.scores.clone(),
            distribution: r.distribution.clone(),
            winner: r.winner,
            will: r.will_snapshot.clone(),
        }
    }

    fn into_record(self) -> Result<TickRecord, RunError> {
        let proposals = self
            .proposals
            .into_iter()
            .map(|p| {
                let state = *self
                    .states
                    .get(p.state as usize)
                    .ok_or_else(|| RunError::Trace(format!("tick {}: state index {} out of range", self.tick, p.state)))?;
                Ok(ReceivedProposal { agent: p.agent, arrival_us: p.arrival_us, state, status: p.status })
            })
            .collect::<Result<_, RunError>>()?;
        Ok(TickRecord {
            tick: self.tick,
            reality: self.reality,
            proposals,
            eligible: self.eligible,
            scores: self.scores,
            distribution: self.distribution,
            winner: self.winner,
            will_snapshot: self.will,
        })
    }
}

/// Writes every real as `d.ddddddddddddddddde±x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

fn write_line<T: Serialize, W: Write>(out: &mut W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, SeventeenDigits);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> io::Result<Self> {
        write_line(&mut out, header)?;
        Ok(TraceWriter { out })
    }

    pub fn write(&mut self, record: &TickRecord) -> io::Result<()> {
        write_line(&mut self.out, &TickLine::from_record(record))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: &TraceHeader) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), header)
    }
}

/// Streams tick records out of a trace.
pub struct TraceReader<R: BufRead> {
    lines: io::Lines<R>,
    header: TraceHeader,
    line_no: usize,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R) -> Result<Self, RunError> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| RunError::Trace("empty trace".into()))?
            .map_err(|e| RunError::Io(e.to_string()))?;
        let probe: serde_json::Value =
            serde_json::from_str(&first).map_err(|e| RunError::Trace(format!("line 1: {e}")))?;
        if probe.get("schema_version").and_then(|v| v.as_u64()) != Some(u64::from(SCHEMA_VERSION))
            || probe.get("format").and_then(|v| v.as_str()) != Some(TRACE_FORMAT)
        {
            let header = TraceHeader {
                format: probe.get("format").and_then(|v| v.as_str()).unwrap_or("").into(),
                schema_version: probe.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32,
                protocol_version: 0,
                seed: 0,
                config: MatchConfig::default(),
            };
            header.check()?;
        }
        let header: TraceHeader = serde_json::from_str(&first).map_err(|e| RunError::Trace(format!("line 1: {e}")))?;
        header.check()?;
        Ok(TraceReader { lines, header, line_no: 1 })
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }
}

impl TraceReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, RunError> {
        let f = File::open(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Self::new(BufReader::new(f))
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TickRecord, RunError>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = match self.lines.next()? {
            Ok(l) => l,
            Err(e) => return Some(Err(RunError::Io(e.to_string()))),
        };
        self.line_no += 1;
        if line.is_empty() {
            return self.next();
        }
        let n = self.line_no;
        Some(
            serde_json::from_str::<TickLine>(&line)
                .map_err(|e| RunError::Trace(format!("line {n}: {e}")))
                .and_then(TickLine::into_record),
        )
    }
}

/// Reads a whole trace into memory.
pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<TickRecord>), RunError> {
    let reader = TraceReader::open(path)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((header, records))
}
