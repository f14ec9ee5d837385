//! Declarative scenario documents: parsing, validation and the bundled suite.

mod bundled;
mod doc;
mod validate;

use thiserror::Error;

pub use bundled::{bundled_scenario, bundled_scenarios, bundled_source, BUNDLED_IDS};
pub use doc::{EpisodeDefaults, ScenarioDoc, ScheduleEntry, StakeholderSettings, WorkerSpec};
pub use validate::{validate_scenario, Diagnostic, Severity, MAX_DELIVERABLES, MIN_DELIVERABLES};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", .0.iter().filter(|d| d.is_error()).map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

impl ScenarioError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ScenarioError::Invalid(d) => d,
            ScenarioError::Syntax { .. } => &[],
        }
    }
}

impl ScenarioDoc {
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_scenario(self)
    }
}

/// Parse a strict scenario document and reject it if any error diagnostic fires.
pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, ScenarioError> {
    let doc = ScenarioDoc::from_json(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let diagnostics = doc.validate();
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(ScenarioError::Invalid(diagnostics));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "id": "mini", "title": "Minimal", "domain": "test",
        "tasks": [{"id": "t1", "name": "Only task", "estimated_hours": 2}],
        "workers": [{"id": "w1", "kind": "ai", "capabilities": {}}],
        "preferences": [{"timestep": 0, "weights": {"quality": 1.0}}]
    }"#;

    fn patched(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn minimal_doc_parses() {
        let doc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(doc.tasks.len(), 1);
        assert!(doc.validate().is_empty());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario("{\n  \"id\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            ScenarioError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = patched(|v| v["colour"] = "blue".into());
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Syntax { .. })));
    }

    #[test]
    fn dangling_edge_names_the_id() {
        let text = patched(|v| v["edges"] = serde_json::json!([{"prereq": "t1", "dependent": "ghost"}]));
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
        assert!(err.diagnostics().iter().any(|d| d.location == "edges[0].dependent"));
    }

    #[test]
    fn cycles_and_bad_weights_are_diagnosed() {
        let text = patched(|v| {
            v["tasks"] = serde_json::json!([
                {"id": "a", "name": "A", "estimated_hours": 1},
                {"id": "b", "name": "B", "estimated_hours": 1}
            ]);
            v["edges"] = serde_json::json!([{"prereq": "a", "dependent": "b"}, {"prereq": "b", "dependent": "a"}]);
            v["preferences"] = serde_json::json!([{"timestep": 0, "weights": {"quality": 0.5, "speed": 0.4}}]);
        });
        let doc = ScenarioDoc::from_json(&text).unwrap();
        let diags = doc.validate();
        assert!(diags.iter().any(|d| d.is_error() && d.message.contains("cycle")));
        assert!(diags.iter().any(|d| d.is_error() && d.location == "preferences[0].weights"));
    }

    #[test]
    fn critical_tier_range_is_enforced() {
        let text = patched(|v| {
            v["tasks"][0]["deliverable"] = serde_json::json!({"tier": "critical", "points": 20});
        });
        let doc = ScenarioDoc::from_json(&text).unwrap();
        let diags = doc.validate();
        assert!(diags.iter().any(|d| d.location == "tasks[0].deliverable" && d.message.contains("12-18")), "{diags:?}");
    }
}
