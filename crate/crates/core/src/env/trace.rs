//! JSONL episode traces, one record per step.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CompositeAction, EnvError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub action: CompositeAction,
    pub reward: f64,
    pub done: bool,
    pub success: Option<bool>,
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn record(&mut self, rec: &TraceRecord) -> Result<(), EnvError> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_trace(input: impl BufRead) -> Result<Vec<TraceRecord>, EnvError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
