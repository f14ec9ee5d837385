//! The workflow state tuple: task graph, workers, communications, artifacts
//! and stakeholder preferences, plus the structural operations on them.

mod comms;
mod constraint;
mod error;
mod graph;
mod preferences;
mod state;
mod task;
mod worker;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use comms::{Artifact, ArtifactId, ArtifactKind, Message};
pub use constraint::{CheckPhase, Constraint, ConstraintKind, Predicate, Violation};
pub use error::ModelError;
pub use graph::{Edge, TaskGraph};
pub use preferences::PreferenceVector;
pub use state::{
    DecompositionTemplate, DecomposeOutcome, EndRequest, Termination, TerminationReason,
    WorkflowState, MANAGER_ID, STAKEHOLDER_ID,
};
pub use task::{
    Assignment, Deliverable, DeliverableTier, ExecutionProgress, Scoring, Task, TaskDraft,
    TaskStatus, INSTRUCTIONS_MARKER,
};
pub use worker::{Worker, WorkerKind};
pub(crate) use worker::skill_match;

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(TaskId);
string_id!(AgentId);
