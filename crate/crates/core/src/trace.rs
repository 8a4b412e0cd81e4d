//! Episode trace: JSON-lines records, one per executed command and per
//! planner decision, replayable by the CLI.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Policy;
use crate::planner::PomdpAction;
use crate::world::Command;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace record {index}: {message}")]
    Corrupt { index: usize, message: String },
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config digest mismatch: trace has {trace}, expected {expected}")]
    DigestMismatch { trace: String, expected: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        version: u32,
        config_digest: String,
        scene_name: String,
        /// Meters per map cell, for rendering positions onto map frames.
        resolution: f64,
        policy: Policy,
        targets: Vec<String>,
        seed: u64,
    },
    Decision {
        step: usize,
        /// Target pursued by single-target policies.
        pursued: Option<String>,
        actions: Vec<PomdpAction>,
        belief: Vec<f64>,
        q: Vec<f64>,
        visits: Vec<u64>,
        chosen: usize,
        map_ascii: String,
    },
    Command {
        step: usize,
        command: Command,
        x: f64,
        y: f64,
        phi: f64,
        blocked: bool,
        distance: f64,
    },
    Detection {
        step: usize,
        object: String,
        category: String,
    },
    Found {
        step: usize,
        category: String,
        x: f64,
        y: f64,
    },
    End {
        success: bool,
        steps: usize,
        path_length: f64,
        optimal_length: f64,
        reason: String,
    },
}

/// Append-only JSON-lines writer.
pub struct TraceWriter<W: Write> {
    sink: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W) -> Self {
        TraceWriter { sink }
    }

    pub fn write(&mut self, record: &TraceRecord) -> Result<(), TraceError> {
        let line = serde_json::to_string(record).expect("trace record serializes");
        self.sink.write_all(line.as_bytes())?;
        self.sink.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Parse a whole trace, reporting the failing record index on corruption.
pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&line).map_err(|e| TraceError::Corrupt {
                index,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}
