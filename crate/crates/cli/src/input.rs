//! Scenario loading, seed lists and the `validate` / `scenarios` commands.

use std::fmt;

use anyhow::{bail, Context};
use magym_core::scenario::{bundled_scenarios, bundled_source, Diagnostic, ScenarioDoc, BUNDLED_IDS};

pub const BUNDLED_PREFIX: &str = "bundled:";

/// A scenario that failed to load, with everything worth showing the user.
#[derive(Debug)]
pub struct LoadFailure {
    pub source: String,
    pub message: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for LoadFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.source, self.message)?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for LoadFailure {}

fn read_source(spec: &str) -> Result<String, LoadFailure> {
    let fail = |message: String| LoadFailure {
        source: spec.to_string(),
        message,
        diagnostics: Vec::new(),
    };
    if let Some(id) = spec.strip_prefix(BUNDLED_PREFIX) {
        return bundled_source(id)
            .map(str::to_string)
            .ok_or_else(|| fail(format!("no bundled scenario `{id}` (have {})", BUNDLED_IDS.join(", "))));
    }
    std::fs::read_to_string(spec).map_err(|e| fail(format!("cannot read: {e}")))
}

/// Parse a scenario without rejecting it, returning every diagnostic.
pub fn check_scenario(spec: &str) -> Result<(ScenarioDoc, Vec<Diagnostic>), LoadFailure> {
    let text = read_source(spec)?;
    let doc = ScenarioDoc::from_json(&text).map_err(|e| LoadFailure {
        source: spec.to_string(),
        message: format!("syntax error at line {}, column {}: {e}", e.line(), e.column()),
        diagnostics: Vec::new(),
    })?;
    let diagnostics = doc.validate();
    Ok((doc, diagnostics))
}

/// Load a scenario given as a path or `bundled:<id>`; error diagnostics reject it.
pub fn load_scenario(spec: &str) -> Result<ScenarioDoc, LoadFailure> {
    let (doc, diagnostics) = check_scenario(spec)?;
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(LoadFailure {
            source: spec.to_string(),
            message: "scenario failed validation".to_string(),
            diagnostics,
        });
    }
    for d in &diagnostics {
        eprintln!("{spec}: {d}");
    }
    Ok(doc)
}

/// Parse `7`, `1,2,3`, `1..5` (inclusive) or a comma-separated mix of them.
pub fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            bail!("empty entry in seed list `{text}`");
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let lo: u64 = lo.trim().parse().with_context(|| format!("bad seed range `{part}`"))?;
            let hi: u64 = hi.trim().parse().with_context(|| format!("bad seed range `{part}`"))?;
            if lo > hi {
                bail!("seed range `{part}` is empty");
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(part.parse().with_context(|| format!("bad seed `{part}`"))?);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
        bail!("seed {dup} listed twice");
    }
    Ok(seeds)
}

/// `magym validate`: true when every document is free of errors.
pub fn validate(specs: &[String]) -> bool {
    let mut ok = true;
    for spec in specs {
        match check_scenario(spec) {
            Ok((_, diagnostics)) => {
                for d in &diagnostics {
                    eprintln!("{spec}: {d}");
                }
                let errors = diagnostics.iter().filter(|d| d.is_error()).count();
                let warnings = diagnostics.len() - errors;
                if errors == 0 {
                    println!("{spec}: ok ({warnings} warning{})", if warnings == 1 { "" } else { "s" });
                } else {
                    println!("{spec}: invalid ({errors} error{})", if errors == 1 { "" } else { "s" });
                    ok = false;
                }
            }
            Err(e) => {
                eprintln!("{e}");
                println!("{spec}: invalid");
                ok = false;
            }
        }
    }
    ok
}

/// `magym scenarios`.
pub fn list_scenarios(dump: Option<&str>) -> anyhow::Result<bool> {
    if let Some(id) = dump {
        let text = bundled_source(id)
            .with_context(|| format!("no bundled scenario `{id}` (have {})", BUNDLED_IDS.join(", ")))?;
        print!("{text}");
        return Ok(true);
    }
    println!("{:<20} {:<12} {:>5} {:>12}  title", "id", "domain", "tasks", "deliverables");
    for doc in bundled_scenarios() {
        let deliverables = doc.tasks.iter().filter(|t| t.deliverable.is_some()).count();
        println!(
            "{:<20} {:<12} {:>5} {:>12}  {}",
            doc.id,
            doc.domain,
            doc.tasks.len(),
            deliverables,
            doc.title
        );
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("1, 2,9").unwrap(), vec![1, 2, 9]);
        assert_eq!(parse_seeds("1..2,10").unwrap(), vec![1, 2, 10]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn bundled_prefix_resolves() {
        for id in BUNDLED_IDS {
            assert_eq!(load_scenario(&format!("bundled:{id}")).unwrap().id, id);
        }
        let err = load_scenario("bundled:nope").unwrap_err();
        assert!(err.message.contains("no bundled scenario"));
    }
}
