//! Newline-delimited episode traces.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::actions::{ManagerAction, StakeholderAction, WorkerAction};
use crate::evaluation::MetricReport;
use crate::model::{AgentId, Termination};
use crate::scenario::ScenarioDoc;

use super::EpisodeConfig;

pub const TRACE_FORMAT: &str = "magym-trace/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Stakeholder,
    Manager,
    Worker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub scenario_id: String,
    pub policy: String,
    pub seed: u64,
    pub config: EpisodeConfig,
    pub initial_digest: String,
    pub scenario: ScenarioDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub seq: u64,
    pub timestep: u64,
    pub agent: AgentId,
    pub role: Role,
    pub action: Value,
    #[serde(default)]
    pub rationale: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// State digest after the action was applied.
    pub digest: String,
}

impl ActionRecord {
    pub fn manager_action(&self) -> Option<ManagerAction> {
        (self.role == Role::Manager)
            .then(|| ManagerAction::decode(&self.action).ok())
            .flatten()
    }

    pub fn stakeholder_action(&self) -> Option<StakeholderAction> {
        (self.role == Role::Stakeholder)
            .then(|| serde_json::from_value(self.action.clone()).ok())
            .flatten()
    }

    pub fn worker_action(&self) -> Option<WorkerAction> {
        (self.role == Role::Worker)
            .then(|| serde_json::from_value(self.action.clone()).ok())
            .flatten()
    }

    pub fn action_type(&self) -> &str {
        self.action.get("type").and_then(Value::as_str).unwrap_or("?")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub termination: Termination,
    pub final_timestep: u64,
    pub manager_actions: u32,
    pub final_digest: String,
    pub metrics: MetricReport,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(Box<TraceHeader>),
    Action(ActionRecord),
    Footer(Box<TraceFooter>),
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LineRef<'a> {
    Header(&'a TraceHeader),
    Action(&'a ActionRecord),
    Footer(&'a TraceFooter),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<ActionRecord>,
    pub footer: Option<TraceFooter>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace is empty")]
    Empty,
    #[error("line {0}: expected a header record first")]
    MissingHeader(usize),
    #[error("unsupported trace format `{0}`")]
    Format(String),
    #[error("line {0}: record after footer")]
    AfterFooter(usize),
    #[error("line {0}: duplicate header")]
    DuplicateHeader(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Trace {
    pub fn manager_records(&self) -> impl Iterator<Item = &ActionRecord> {
        self.records.iter().filter(|r| r.role == Role::Manager)
    }

    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        let mut line = |value: &LineRef<'_>| -> io::Result<()> {
            serde_json::to_writer(&mut out, value)?;
            out.write_all(b"\n")
        };
        line(&LineRef::Header(&self.header))?;
        for r in &self.records {
            line(&LineRef::Action(r))?;
        }
        if let Some(f) = &self.footer {
            line(&LineRef::Footer(f))?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut header = None;
        let mut records = Vec::new();
        let mut footer = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|source| TraceError::Json { line: line_no, source })?;
            if footer.is_some() {
                return Err(TraceError::AfterFooter(line_no));
            }
            match line {
                Line::Header(h) => {
                    if header.is_some() {
                        return Err(TraceError::DuplicateHeader(line_no));
                    }
                    if h.format != TRACE_FORMAT {
                        return Err(TraceError::Format(h.format));
                    }
                    header = Some(*h);
                }
                _ if header.is_none() => return Err(TraceError::MissingHeader(line_no)),
                Line::Action(r) => records.push(r),
                Line::Footer(f) => footer = Some(*f),
            }
        }
        Ok(Self {
            header: header.ok_or(TraceError::Empty)?,
            records,
            footer,
        })
    }
}
