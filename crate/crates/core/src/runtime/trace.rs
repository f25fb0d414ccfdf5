//! Newline-delimited JSON log of every message and of a few protocol events,
//! with one sequence counter shared by all solvers of the process.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::negotiate::BorderAssignment;
use crate::partition::{AreaId, SolverId};

use super::messages::Envelope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Send {
        seq: u64,
        envelope: Envelope,
    },
    /// A solver has every track message of `round`.
    Barrier {
        seq: u64,
        solver: SolverId,
        round: usize,
    },
    /// Assignments a solver keeps after rejection, for pairs touching its areas.
    Settled {
        seq: u64,
        solver: SolverId,
        round: usize,
        assignments: Vec<((AreaId, AreaId), BorderAssignment)>,
    },
}

impl TraceEvent {
    pub fn seq(&self) -> u64 {
        match self {
            TraceEvent::Send { seq, .. } | TraceEvent::Barrier { seq, .. } | TraceEvent::Settled { seq, .. } => *seq,
        }
    }
}

enum Sink {
    File(BufWriter<File>),
    Memory(Vec<TraceEvent>),
}

struct Inner {
    seq: u64,
    sink: Sink,
}

/// Cheap to clone; all clones append to the same log.
#[derive(Clone, Default)]
pub struct Trace(Option<Arc<Mutex<Inner>>>);

impl Trace {
    pub fn off() -> Self {
        Trace(None)
    }

    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        let f = File::create(path)?;
        Ok(Self::with(Sink::File(BufWriter::new(f))))
    }

    pub fn memory() -> Self {
        Self::with(Sink::Memory(Vec::new()))
    }

    fn with(sink: Sink) -> Self {
        Trace(Some(Arc::new(Mutex::new(Inner { seq: 0, sink }))))
    }

    pub fn is_on(&self) -> bool {
        self.0.is_some()
    }

    pub fn record(&self, make: impl FnOnce(u64) -> TraceEvent) {
        let Some(inner) = &self.0 else { return };
        let mut g = inner.lock().expect("trace lock");
        g.seq += 1;
        let ev = make(g.seq);
        match &mut g.sink {
            Sink::File(w) => {
                let _ = serde_json::to_writer(&mut *w, &ev);
                let _ = w.write_all(b"\n");
            }
            Sink::Memory(v) => v.push(ev),
        }
    }

    pub fn flush(&self) {
        if let Some(inner) = &self.0 {
            if let Sink::File(w) = &mut inner.lock().expect("trace lock").sink {
                let _ = w.flush();
            }
        }
    }

    /// Events recorded so far by a memory trace.
    pub fn events(&self) -> Vec<TraceEvent> {
        match &self.0 {
            Some(inner) => match &inner.lock().expect("trace lock").sink {
                Sink::Memory(v) => v.clone(),
                Sink::File(_) => Vec::new(),
            },
            None => Vec::new(),
        }
    }
}

/// Parses a trace file written by [`Trace::to_file`].
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
