use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use magym_core::engine::Trace;
use magym_core::evaluation::{render_csv, render_table, summary_rows};
use magym_core::policies::{run_episode, PolicySpec, DEFAULT_BRIDGE_TIMEOUT};
use magym_core::scenario::ScenarioDoc;
use rayon::prelude::*;

use crate::input::{load_scenario, parse_seeds};
use crate::Format;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Scenario file, or `bundled:<id>`.
    #[arg(long)]
    pub scenario: String,
    /// random, assign_all, greedy or external [default: greedy, or external with --bridge-cmd].
    #[arg(long)]
    pub policy: Option<String>,
    /// Seed list: `7`, `1,2,3` or `1..5`.
    #[arg(long, env = "MAGYM_SEED", default_value = "1")]
    pub seeds: String,
    /// Manager action budget per episode [default: the scenario's, normally 100].
    #[arg(long)]
    pub max_actions: Option<u32>,
    /// Timestep cap per episode [default: the scenario's].
    #[arg(long)]
    pub max_timesteps: Option<u64>,
    /// Directory for the trace files.
    #[arg(long, default_value = "traces")]
    pub out: PathBuf,
    /// Child command hosting the external policy (implies `--policy external`).
    #[arg(long)]
    pub bridge_cmd: Option<String>,
    /// Per-turn reply timeout for the external policy.
    #[arg(long, default_value_t = DEFAULT_BRIDGE_TIMEOUT.as_millis() as u64)]
    pub bridge_timeout_ms: u64,
    /// Episodes run in parallel [default: one per core].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

fn policy_spec(args: &RunArgs) -> anyhow::Result<PolicySpec> {
    match (args.policy.as_deref(), &args.bridge_cmd) {
        (None | Some("external"), Some(cmd)) => Ok(PolicySpec::External {
            command: cmd.clone(),
            timeout_ms: args.bridge_timeout_ms,
        }),
        (Some("external"), None) => bail!("--policy external needs --bridge-cmd"),
        (Some(name), Some(_)) => bail!("--bridge-cmd cannot be combined with --policy {name}"),
        (name, None) => Ok(name.unwrap_or("greedy").parse()?),
    }
}

pub fn trace_file_name(scenario: &str, policy: &str, seed: u64) -> String {
    format!("{scenario}_{policy}_{seed}.jsonl")
}

fn run_one(doc: &ScenarioDoc, spec: &PolicySpec, args: &RunArgs, seed: u64, out: &Path) -> anyhow::Result<Trace> {
    let mut config = doc.default_config(seed);
    if let Some(n) = args.max_actions {
        config.max_manager_actions = n;
    }
    if let Some(n) = args.max_timesteps {
        config.max_timesteps = n;
    }
    let trace = run_episode(doc, spec, config)?;
    let path = out.join(trace_file_name(&doc.id, spec.name(), seed));
    crate::write_file(&path, &trace.to_ndjson())?;
    Ok(trace)
}

/// `magym run`: true when every seed produced a trace.
pub fn run(args: RunArgs) -> anyhow::Result<bool> {
    let spec = policy_spec(&args)?;
    let seeds = parse_seeds(&args.seeds)?;
    let doc = load_scenario(&args.scenario)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("starting worker threads")?;
    let results: Vec<(u64, anyhow::Result<Trace>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| (seed, run_one(&doc, &spec, &args, seed, &args.out)))
            .collect()
    });

    let mut ok = true;
    let mut traces = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(trace) => traces.push(trace),
            Err(e) => {
                eprintln!("{} seed {seed}: {e:#}", doc.id);
                ok = false;
            }
        }
    }
    let rows = summary_rows(traces.iter().filter_map(|t| {
        t.footer
            .as_ref()
            .map(|f| (t.header.scenario_id.as_str(), t.header.policy.as_str(), &f.metrics))
    }));
    if !rows.is_empty() {
        match args.format {
            Format::Table => print!("{}", render_table(&rows)),
            Format::Csv => print!("{}", render_csv(&rows)),
        }
    }
    Ok(ok)
}
