//! Scenario document mutation and an independent notion of "runnable".
//!
//! A mutated document is runnable when it deserializes, satisfies the
//! format invariants checked here directly on the JSON, builds an initial
//! state, and completes a short episode without error or panic.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};

use magym_core::engine::Engine;
use magym_core::policies::{PolicyBundle, PolicySpec};
use magym_core::scenario::ScenarioDoc;
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use serde_json::{json, Value};

/// Small xorshift generator so the fuzz is reproducible without the crate's RNG.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

pub const OPERATORS: usize = 18;

fn task_ids(v: &Value) -> Vec<String> {
    v["tasks"]
        .as_array()
        .map(|ts| ts.iter().filter_map(|t| t["id"].as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

fn len(v: &Value, key: &str) -> usize {
    v[key].as_array().map_or(0, Vec::len)
}

/// Apply operator `op` to the document in place.
pub fn mutate(v: &mut Value, op: usize, rng: &mut Rng) {
    let ids = task_ids(v);
    let n_tasks = len(v, "tasks");
    let n_workers = len(v, "workers");
    let n_prefs = len(v, "preferences");
    match op {
        0 if !ids.is_empty() => {
            let (a, b) = (ids[rng.below(ids.len())].clone(), ids[rng.below(ids.len())].clone());
            v["edges"].as_array_mut().unwrap().push(json!({"prereq": a, "dependent": b}));
        }
        1 if len(v, "edges") > 0 => {
            let i = rng.below(len(v, "edges"));
            v["edges"].as_array_mut().unwrap().remove(i);
        }
        2 if !ids.is_empty() => {
            let a = ids[rng.below(ids.len())].clone();
            let e = if rng.below(2) == 0 {
                json!({"prereq": a, "dependent": "ghost-task"})
            } else {
                json!({"prereq": "ghost-task", "dependent": a})
            };
            v["edges"].as_array_mut().unwrap().push(e);
        }
        3 if n_tasks > 0 => {
            let i = rng.below(n_tasks);
            let points = [0.0, 2.0, 3.0, 5.0, 8.0, 10.0, 12.0, 15.0, 18.0, 19.0, 25.0][rng.below(11)];
            if v["tasks"][i]["deliverable"].is_object() {
                v["tasks"][i]["deliverable"]["points"] = json!(points);
            }
        }
        4 if n_tasks > 0 => {
            let i = rng.below(n_tasks);
            if let Some(t) = v["tasks"][i].as_object_mut() {
                t.remove("deliverable");
            }
        }
        5 if n_prefs > 0 => {
            let i = rng.below(n_prefs);
            if let Some(w) = v["preferences"][i]["weights"].as_object_mut() {
                let keys: Vec<String> = w.keys().cloned().collect();
                let k = &keys[rng.below(keys.len())];
                let old = w[k].as_f64().unwrap_or(0.0);
                w.insert(k.clone(), json!(old + rng.range(-0.2, 0.2)));
            }
        }
        6 if n_workers > 0 => {
            let i = rng.below(n_workers);
            if let Some(c) = v["workers"][i]["capabilities"].as_object_mut() {
                let keys: Vec<String> = c.keys().cloned().collect();
                let k = if keys.is_empty() { "analysis".to_string() } else { keys[rng.below(keys.len())].clone() };
                c.insert(k, json!(rng.range(-0.5, 1.5)));
            }
        }
        7 if n_tasks > 1 => {
            let (i, j) = (rng.below(n_tasks), rng.below(n_tasks));
            v["tasks"][i]["id"] = v["tasks"][j]["id"].clone();
        }
        8 if n_tasks > 0 => {
            let i = rng.below(n_tasks);
            v["tasks"].as_array_mut().unwrap().remove(i);
        }
        9 if n_prefs > 0 => {
            let i = rng.below(n_prefs);
            v["preferences"][i]["timestep"] = json!(rng.below(100));
        }
        10 if n_workers > 0 => {
            let i = rng.below(n_workers);
            v["workers"][i]["id"] = json!(["manager", "stakeholder"][rng.below(2)]);
        }
        11 if n_tasks > 0 => {
            let i = rng.below(n_tasks);
            let key = ["estimated_hours", "estimated_cost"][rng.below(2)];
            v["tasks"][i][key] = json!(-rng.range(0.5, 5.0));
        }
        12 => v["stakeholder"]["approval_threshold"] = json!(rng.range(-0.5, 1.5)),
        13 => v["title"] = json!(format!("Variant {}", rng.below(1000))),
        14 if n_workers > 0 => {
            let i = rng.below(n_workers);
            v["workers"][i]["capacity"] = json!(rng.below(3));
        }
        15 if n_workers > 0 => {
            let i = rng.below(n_workers);
            let join = v["workers"][i]["join_timestep"].as_u64().unwrap_or(0);
            v["workers"][i]["leave_timestep"] = json!((join + rng.below(20) as u64).saturating_sub(10));
        }
        16 if n_tasks > 0 => {
            let i = rng.below(n_tasks);
            let (tier, points) = [("critical", 14.0), ("major", 9.0), ("supporting", 4.0), ("supporting", 12.0)][rng.below(4)];
            v["tasks"][i]["deliverable"] = json!({"tier": tier, "points": points});
        }
        17 if n_workers > 0 => {
            let (i, j) = (rng.below(n_workers), rng.below(n_workers));
            v["workers"][i]["id"] = v["workers"][j]["id"].clone();
        }
        _ => {}
    }
}

/// Apply one to three random operators.
pub fn random_mutation(base: &Value, rng: &mut Rng) -> (Value, Vec<usize>) {
    let mut v = base.clone();
    let ops: Vec<usize> = (0..1 + rng.below(3)).map(|_| rng.below(OPERATORS)).collect();
    for &op in &ops {
        mutate(&mut v, op, rng);
    }
    (v, ops)
}

fn tier_range(tier: &str) -> Option<(f64, f64)> {
    match tier {
        "critical" => Some((12.0, 18.0)),
        "major" => Some((8.0, 12.0)),
        "supporting" => Some((3.0, 8.0)),
        _ => None,
    }
}

fn nonneg(x: &Value) -> bool {
    x.as_f64().is_some_and(|f| f.is_finite() && f >= 0.0)
}

/// Format invariants, checked on the raw document.
pub fn format_problems(v: &Value) -> Vec<String> {
    let mut bad = Vec::new();
    let tasks = v["tasks"].as_array().cloned().unwrap_or_default();
    let mut ids = BTreeSet::new();
    let mut deliverables = 0;
    for t in &tasks {
        match t["id"].as_str() {
            Some(id) if !id.trim().is_empty() => {
                if !ids.insert(id.to_string()) {
                    bad.push(format!("duplicate task {id}"));
                }
            }
            _ => bad.push("task without id".into()),
        }
        if t["name"].as_str().is_none_or(|n| n.trim().is_empty()) {
            bad.push("unnamed task".into());
        }
        if !nonneg(&t["estimated_hours"]) || (!t["estimated_cost"].is_null() && !nonneg(&t["estimated_cost"])) {
            bad.push("negative estimate".into());
        }
        if let Some(d) = t["deliverable"].as_object() {
            deliverables += 1;
            let p = d["points"].as_f64().unwrap_or(f64::NAN);
            match d["tier"].as_str().and_then(tier_range) {
                Some((lo, hi)) if p >= lo && p <= hi => {}
                _ => bad.push(format!("points {p} outside tier")),
            }
            if d.get("min_quality").and_then(Value::as_f64).is_some_and(|q| !(0.0..=1.0).contains(&q)) {
                bad.push("min_quality".into());
            }
        }
    }
    if deliverables > 0 && !(10..=25).contains(&deliverables) {
        bad.push(format!("{deliverables} deliverables"));
    }

    let mut g = DiGraph::<(), ()>::new();
    let nodes: BTreeMap<String, _> = ids.iter().map(|id| (id.clone(), g.add_node(()))).collect();
    let mut seen_edges = BTreeSet::new();
    for e in v["edges"].as_array().cloned().unwrap_or_default() {
        let (a, b) = (e["prereq"].as_str().unwrap_or(""), e["dependent"].as_str().unwrap_or(""));
        match (nodes.get(a), nodes.get(b)) {
            (Some(&x), Some(&y)) => {
                if a == b {
                    bad.push("self edge".into());
                } else if !seen_edges.insert((a.to_string(), b.to_string())) {
                    bad.push("duplicate edge".into());
                } else {
                    g.add_edge(x, y, ());
                }
            }
            _ => bad.push(format!("edge {a} -> {b} dangles")),
        }
    }
    if is_cyclic_directed(&g) {
        bad.push("cycle".into());
    }
    for key in v["templates"].as_object().map(|m| m.keys().cloned().collect::<Vec<_>>()).unwrap_or_default() {
        if !ids.contains(&key) {
            bad.push(format!("template for unknown {key}"));
        }
    }

    let workers = v["workers"].as_array().cloned().unwrap_or_default();
    if workers.is_empty() {
        bad.push("no workers".into());
    }
    let mut agents = BTreeSet::new();
    for w in &workers {
        let id = w["id"].as_str().unwrap_or("");
        if id == "manager" || id == "stakeholder" || !agents.insert(id.to_string()) {
            bad.push(format!("worker id {id}"));
        }
        if w["capacity"].as_u64().is_some_and(|c| c < 1) {
            bad.push("capacity".into());
        }
        if !w["cost_rate"].is_null() && !nonneg(&w["cost_rate"]) {
            bad.push("cost rate".into());
        }
        for p in w["capabilities"].as_object().map(|m| m.values().cloned().collect::<Vec<_>>()).unwrap_or_default() {
            if !p.as_f64().is_some_and(|p| (0.0..=1.0).contains(&p)) {
                bad.push("proficiency".into());
            }
        }
        let join = w["join_timestep"].as_u64().unwrap_or(0);
        if w["leave_timestep"].as_u64().is_some_and(|l| l <= join) {
            bad.push("leave before join".into());
        }
    }

    let prefs = v["preferences"].as_array().cloned().unwrap_or_default();
    if prefs.is_empty() {
        bad.push("no preferences".into());
    }
    let mut last: Option<u64> = None;
    let keys0: Option<Vec<String>> = prefs.first().and_then(|p| p["weights"].as_object()).map(|m| m.keys().cloned().collect());
    for (i, p) in prefs.iter().enumerate() {
        let t = p["timestep"].as_u64().unwrap_or(0);
        if (i == 0 && t != 0) || last.is_some_and(|l| t <= l) {
            bad.push("preference timesteps".into());
        }
        last = Some(t);
        let w = p["weights"].as_object().cloned().unwrap_or_default();
        let vals: Vec<f64> = w.values().filter_map(Value::as_f64).collect();
        if w.is_empty() || vals.iter().any(|x| !(0.0..=1.0).contains(x)) || (vals.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            bad.push("off simplex".into());
        }
        if keys0.as_ref() != Some(&w.keys().cloned().collect()) {
            bad.push("objective keys differ".into());
        }
    }

    if v["stakeholder"]["approval_threshold"].as_f64().is_some_and(|a| !(0.0..=1.0).contains(&a)) {
        bad.push("threshold".into());
    }

    let known_task = |id: &Value| id.as_str().is_some_and(|s| ids.contains(s));
    for c in v["constraints"].as_array().cloned().unwrap_or_default() {
        let p = &c["predicate"];
        if !p["task_id"].is_null() && !known_task(&p["task_id"]) {
            bad.push("constraint task".into());
        }
        for id in p["task_ids"].as_array().cloned().unwrap_or_default() {
            if !known_task(&id) {
                bad.push("constraint task".into());
            }
        }
        if let Some(r) = p["receiver"].as_str() {
            if r != "manager" && r != "stakeholder" && !agents.contains(r) {
                bad.push("constraint receiver".into());
            }
        }
    }
    for r in v["rubrics"].as_array().cloned().unwrap_or_default() {
        for id in r["measure"]["task_ids"].as_array().cloned().unwrap_or_default() {
            if !known_task(&id) {
                bad.push("rubric task".into());
            }
        }
    }
    bad
}

/// Why a document is not runnable, or `Ok` when it is.
pub fn runnable(text: &str, max_actions: u32) -> Result<(), String> {
    let doc = ScenarioDoc::from_json(text).map_err(|e| format!("parse: {e}"))?;
    let raw: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let problems = format_problems(&raw);
    if !problems.is_empty() {
        return Err(problems.join("; "));
    }
    let mut config = doc.default_config(1);
    config.max_manager_actions = max_actions;
    doc.build_state(&config).map_err(|e| format!("build: {e}"))?;
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<(), String> {
        let spec = PolicySpec::Greedy { cadence: 10 };
        let engine = Engine::new(&doc, config.clone(), spec.name()).map_err(|e| e.to_string())?;
        let mut actors = PolicyBundle::for_scenario(&spec, &doc, config.seed).map_err(|e| e.to_string())?;
        engine.run(&mut actors).map(|_| ()).map_err(|e| e.to_string())
    }));
    match outcome {
        Ok(r) => r.map_err(|e| format!("episode: {e}")),
        Err(_) => Err("episode panicked".into()),
    }
}
