//! Sampler event records, their CSV form, and replay.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{Mark, MarkedPoint, PointSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Death,
    /// A death proposed on the empty sequence.
    Idle,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    /// Clock time for the birth-death process, step number for the chain.
    pub t_or_step: f64,
    pub kind: EventKind,
    /// 1-based position of the inserted or removed point.
    pub position: Option<usize>,
    /// The proposed point for births, the removed point for deaths.
    pub point: Option<MarkedPoint>,
    pub accepted: bool,
    pub n_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub stream: u64,
    pub initial: PointSequence,
    pub events: Vec<TraceEvent>,
    pub final_state: PointSequence,
    /// Whether every event was recorded, which makes the trace replayable.
    pub complete: bool,
    /// Set when the run stopped at the length cap.
    pub truncation: Option<String>,
}

pub const TRACE_HEADER: &str = "t_or_step,event,position,x,y,mark,accepted,n_after";
pub const STATE_HEADER: &str = "position,x,y,mark";

/// 17 significant digits, `.` decimal separator.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_mark(m: &Mark) -> String {
    match m {
        Mark::None => String::new(),
        Mark::Radius(r) => format_float(*r),
        Mark::Label(l) => format!("label:{l}"),
    }
}

impl RunTrace {
    /// Applies the accepted events to `initial`.
    pub fn replay(&self) -> Result<PointSequence> {
        if !self.complete {
            return Err(Error::Unsupported("trace was thinned and cannot be replayed".into()));
        }
        let mut seq = self.initial.clone();
        for (k, e) in self.events.iter().enumerate() {
            if !e.accepted {
                continue;
            }
            let bad = || Error::argument(format!("event {k} is malformed"));
            match e.kind {
                EventKind::Birth => {
                    seq = seq.insert_at(e.position.ok_or_else(bad)?, e.point.ok_or_else(bad)?)?;
                }
                EventKind::Death => {
                    let i = e.position.ok_or_else(bad)?;
                    if let (Some(expected), Some(found)) = (e.point, seq.get(i)) {
                        if expected.key() != found.key() {
                            return Err(Error::argument(format!(
                                "event {k} removes {expected} but finds {found}"
                            )));
                        }
                    }
                    seq = seq.remove_at(i)?;
                }
                EventKind::Idle => {}
            }
            if seq.len() != e.n_after {
                return Err(Error::argument(format!(
                    "event {k} expects length {}, replay has {}",
                    e.n_after,
                    seq.len()
                )));
            }
        }
        Ok(seq)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        let mut line = String::new();
        for e in &self.events {
            line.clear();
            let _ = write!(line, "{},{},", format_float(e.t_or_step), e.kind.as_str());
            if let Some(i) = e.position {
                let _ = write!(line, "{i}");
            }
            match e.point {
                Some(p) => {
                    let _ = write!(
                        line,
                        ",{},{},{}",
                        format_float(p.x),
                        format_float(p.y),
                        format_mark(&p.mark)
                    );
                }
                None => line.push_str(",,,"),
            }
            let _ = write!(line, ",{},{}", e.accepted, e.n_after);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

pub fn write_state_csv<W: Write>(seq: &PointSequence, mut out: W) -> io::Result<()> {
    writeln!(out, "{STATE_HEADER}")?;
    for (k, p) in seq.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            k + 1,
            format_float(p.x),
            format_float(p.y),
            format_mark(&p.mark)
        )?;
    }
    Ok(())
}

/// Parses a state written by [`write_state_csv`]. Numeric marks are radii.
pub fn read_state_csv(text: &str) -> Result<PointSequence> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("state csv line {}: malformed row {line:?}", lineno + 1));
        if cols.len() != 4 {
            return Err(bad());
        }
        let x: f64 = cols[1].parse().map_err(|_| bad())?;
        let y: f64 = cols[2].parse().map_err(|_| bad())?;
        let mark = if cols[3].is_empty() {
            Mark::None
        } else if let Some(l) = cols[3].strip_prefix("label:") {
            Mark::Label(l.parse().map_err(|_| bad())?)
        } else {
            Mark::Radius(cols[3].parse().map_err(|_| bad())?)
        };
        out.push(MarkedPoint::new(x, y, mark));
    }
    Ok(out.into())
}
