//! Complete, replayable record of one simulated run.
//!
//! A trace is an ordered event list plus a summary of every process's
//! final per-slot state. It serializes to line-delimited JSON with a
//! fixed field order (header line, events, slot lines, footer), so two
//! runs of the same scenario compare byte for byte.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Bundle, Config};
use crate::sigcrypt::{serde_hex, ProcessId, Scheme};

pub const TRACE_SCHEMA: &str = "mbrb-trace/v1";

/// One network- or application-level event.
///
/// `Send.receivers` is the post-suppression receiver set; each suppressed
/// copy gets its own `Suppress` event referencing the send's `seq`.
/// Steps are lockstep rounds or async event indices, non-decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum Event {
    Send {
        seq: u64,
        step: u64,
        sender: ProcessId,
        bundle: Bundle,
        receivers: BTreeSet<ProcessId>,
    },
    Suppress {
        send_seq: u64,
        step: u64,
        sender: ProcessId,
        victim: ProcessId,
    },
    Receive {
        step: u64,
        receiver: ProcessId,
        bundle: Bundle,
    },
    Deliver {
        step: u64,
        process: ProcessId,
        #[serde(with = "serde_hex")]
        payload: Vec<u8>,
        sn: u64,
        sender: ProcessId,
    },
}

impl Event {
    pub fn step(&self) -> u64 {
        match self {
            Event::Send { step, .. }
            | Event::Suppress { step, .. }
            | Event::Receive { step, .. }
            | Event::Deliver { step, .. } => *step,
        }
    }
}

/// Final state of one `(process, sender, sn, payload)` cell: which
/// signatures the process ended up holding and what it signed/delivered
/// for the slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub process: ProcessId,
    pub sender: ProcessId,
    pub sn: u64,
    #[serde(with = "serde_hex")]
    pub payload: Vec<u8>,
    pub signers: Vec<ProcessId>,
    pub signed_self: bool,
    pub delivered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Lockstep,
    SeededAsync,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    schema: String,
    config: Config,
    scheme: Scheme,
    byzantine: BTreeSet<ProcessId>,
    schedule: ScheduleKind,
    horizon: u64,
    master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Footer {
    truncated: bool,
    events: u64,
    last_step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
enum Line {
    Header(Header),
    Slot(SlotRecord),
    Footer(Footer),
    #[serde(untagged)]
    Event(Event),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub config: Config,
    pub scheme: Scheme,
    pub byzantine: BTreeSet<ProcessId>,
    pub schedule: ScheduleKind,
    pub horizon: u64,
    pub master_seed: u64,
    pub events: Vec<Event>,
    pub final_slots: Vec<SlotRecord>,
    /// The horizon was exhausted with messages still in flight. Liveness
    /// verdicts on a truncated trace are inconclusive, never passes.
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {0}: {1}")]
    Parse(usize, serde_json::Error),
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported trace schema {0:?}")]
    BadSchema(String),
    #[error("line {0}: {1} line out of order")]
    OutOfOrder(usize, &'static str),
    #[error("malformed header config: {0}")]
    BadConfig(#[from] crate::protocol::ConfigError),
}

impl Trace {
    /// All correct process ids (everything not declared Byzantine).
    pub fn correct(&self) -> BTreeSet<ProcessId> {
        (0..self.config.n as u64)
            .map(ProcessId)
            .filter(|p| !self.byzantine.contains(p))
            .collect()
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        p.0 < self.config.n as u64 && !self.byzantine.contains(&p)
    }

    /// Deliver events at correct processes, as tuples
    /// `(process, payload, sn, sender, step)`.
    pub fn deliveries(&self) -> impl Iterator<Item = (ProcessId, &[u8], u64, ProcessId, u64)> {
        self.events.iter().filter_map(|e| match e {
            Event::Deliver {
                step,
                process,
                payload,
                sn,
                sender,
            } => Some((*process, payload.as_slice(), *sn, *sender, *step)),
            _ => None,
        })
    }

    /// Serialize to canonical line-delimited JSON.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Line::Header(Header {
            schema: TRACE_SCHEMA.to_string(),
            config: self.config,
            scheme: self.scheme,
            byzantine: self.byzantine.clone(),
            schedule: self.schedule,
            horizon: self.horizon,
            master_seed: self.master_seed,
        });
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
            out.push('\n');
        };
        push(&header);
        for event in &self.events {
            push(&Line::Event(event.clone()));
        }
        for slot in &self.final_slots {
            push(&Line::Slot(slot.clone()));
        }
        push(&Line::Footer(Footer {
            truncated: self.truncated,
            events: self.events.len() as u64,
            last_step: self.events.last().map_or(0, Event::step),
        }));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut header: Option<Header> = None;
        let mut events = Vec::new();
        let mut slots = Vec::new();
        let mut truncated = false;
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line =
                serde_json::from_str(raw).map_err(|e| TraceError::Parse(i + 1, e))?;
            match line {
                Line::Header(h) => {
                    if h.schema != TRACE_SCHEMA {
                        return Err(TraceError::BadSchema(h.schema));
                    }
                    if header.is_some() {
                        return Err(TraceError::OutOfOrder(i + 1, "header"));
                    }
                    header = Some(h);
                }
                Line::Event(e) => events.push(e),
                Line::Slot(s) => slots.push(s),
                Line::Footer(f) => truncated = f.truncated,
            }
        }
        let header = header.ok_or(TraceError::MissingHeader)?;
        // Re-derive the config through its constructor so junk headers
        // cannot smuggle in out-of-range parameters.
        let cfg = header.config;
        let mut config = Config::new(cfg.n, cfg.t, cfg.d, cfg.c)?;
        config.dedup_emit = cfg.dedup_emit;
        Ok(Trace {
            config,
            scheme: header.scheme,
            byzantine: header.byzantine,
            schedule: header.schedule,
            horizon: header.horizon,
            master_seed: header.master_seed,
            events,
            final_slots: slots,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Bundle;

    fn sample_trace() -> Trace {
        let bundle = Bundle::canonical(b"m".to_vec(), 1, ProcessId(0), []);
        Trace {
            config: Config::new(2, 0, 0, 2).unwrap(),
            scheme: Scheme::PrfTag,
            byzantine: BTreeSet::new(),
            schedule: ScheduleKind::Lockstep,
            horizon: 8,
            master_seed: 42,
            events: vec![
                Event::Send {
                    seq: 0,
                    step: 0,
                    sender: ProcessId(0),
                    bundle: bundle.clone(),
                    receivers: [ProcessId(0), ProcessId(1)].into(),
                },
                Event::Receive {
                    step: 1,
                    receiver: ProcessId(1),
                    bundle,
                },
                Event::Deliver {
                    step: 1,
                    process: ProcessId(1),
                    payload: b"m".to_vec(),
                    sn: 1,
                    sender: ProcessId(0),
                },
            ],
            final_slots: vec![SlotRecord {
                process: ProcessId(1),
                sender: ProcessId(0),
                sn: 1,
                payload: b"m".to_vec(),
                signers: vec![ProcessId(0), ProcessId(1)],
                signed_self: true,
                delivered: true,
            }],
            truncated: false,
        }
    }

    #[test]
    fn jsonl_round_trip_is_identity() {
        let trace = sample_trace();
        let text = trace.to_jsonl();
        let parsed = Trace::from_jsonl(&text).unwrap();
        assert_eq!(parsed, trace);
        assert_eq!(parsed.to_jsonl(), text);
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(matches!(
            Trace::from_jsonl("{\"ev\":\"footer\",\"truncated\":false,\"events\":0,\"last_step\":0}\n"),
            Err(TraceError::MissingHeader)
        ));
    }
}
