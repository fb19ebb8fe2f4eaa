//! Library half of the `tdlc` command: configuration, report rows, the
//! single-shot commands and the `theorem-check` batteries.

pub mod checks;
pub mod commands;
pub mod config;

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

pub use config::{ModelKind, PartialConfig, RunConfig};

/// One JSON-lines record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub model: String,
    pub params: Value,
    pub outputs: Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Row {
    pub fn new(experiment: &str, model: &str, params: Value, outputs: Value, pass: bool) -> Self {
        Row { experiment: experiment.into(), model: model.into(), params, outputs, pass, witness: None }
    }

    pub fn with_witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }
}

/// Writes rows in order; returns whether all passed.
pub fn emit<W: Write>(rows: &[Row], out: &mut W) -> std::io::Result<bool> {
    for r in rows {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(rows.iter().all(|r| r.pass))
}
