use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use magym_core::actions::ManagerAction;
use magym_core::engine::{ActionRecord, RecordStatus, Role, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleFilter {
    Manager,
    Stakeholder,
    Worker,
    All,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    pub trace: PathBuf,
    /// Show only the first N matching actions.
    #[arg(long, value_name = "N")]
    pub first: Option<usize>,
    /// Show only actions of this type, e.g. `assign_task`.
    #[arg(long = "type", value_name = "TYPE")]
    pub action_type: Option<String>,
    #[arg(long, value_enum, default_value_t = RoleFilter::Manager)]
    pub role: RoleFilter,
}

const RATIONALE_WIDTH: usize = 60;
const NONE: &str = "---";

fn camel(snake: &str) -> String {
    snake
        .split('_')
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
        })
        .collect()
}

fn clip(s: &str, width: usize) -> String {
    let s = s.replace('\n', " ");
    if s.chars().count() <= width {
        return s;
    }
    let mut out: String = s.chars().take(width - 3).collect();
    out.push_str("...");
    out
}

fn hours(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.1}")).unwrap_or_else(|| NONE.to_string())
}

/// Action, estimated hours, estimated cost and task id cells.
fn describe(record: &ActionRecord) -> [String; 4] {
    let name = camel(record.action_type());
    let Some(action) = record.manager_action() else {
        let task = record.action["params"]["task_id"]
            .as_str()
            .or_else(|| record.action["params"]["task_ids"][0].as_str());
        return [name, NONE.into(), NONE.into(), task.unwrap_or(NONE).to_string()];
    };
    let none = || NONE.to_string();
    match action {
        ManagerAction::AssignTask { task_id, agent_id } => {
            [format!("{name} -> {agent_id}"), none(), none(), task_id.to_string()]
        }
        ManagerAction::AssignAllPendingTasks { agent_id } => [
            format!("{name} -> {}", agent_id.map(|a| a.to_string()).unwrap_or_else(|| "best match".into())),
            none(),
            none(),
            none(),
        ],
        ManagerAction::CreateTask {
            name: task, est_hrs, est_cost, ..
        } => [format!("{name}: {task}"), hours(Some(est_hrs)), hours(Some(est_cost)), none()],
        ManagerAction::SendMessage { receiver_id, .. } => [
            format!("{name} -> {}", receiver_id.map(|a| a.to_string()).unwrap_or_else(|| "all".into())),
            none(),
            none(),
            none(),
        ],
        ManagerAction::RefineTask {
            task_id,
            new_est_hrs,
            new_est_cost,
            ..
        } => [format!("{name}: {task_id}"), hours(new_est_hrs), hours(new_est_cost), task_id.to_string()],
        ManagerAction::AddTaskDependency { prereq_id, dep_id }
        | ManagerAction::RemoveTaskDependency { prereq_id, dep_id } => {
            [format!("{name}: {prereq_id} < {dep_id}"), none(), none(), none()]
        }
        ManagerAction::RemoveTask { task_id }
        | ManagerAction::InspectTask { task_id }
        | ManagerAction::DecomposeTask { task_id } => [format!("{name}: {task_id}"), none(), none(), task_id.to_string()],
        ManagerAction::FailedAction { metadata } => {
            let why = metadata.get("error").or_else(|| metadata.get("reason")).cloned().unwrap_or_default();
            [format!("{name}: {why}"), none(), none(), none()]
        }
        _ => [name, none(), none(), none()],
    }
}

fn role_matches(filter: RoleFilter, role: Role) -> bool {
    match filter {
        RoleFilter::All => true,
        RoleFilter::Manager => role == Role::Manager,
        RoleFilter::Stakeholder => role == Role::Stakeholder,
        RoleFilter::Worker => role == Role::Worker,
    }
}

/// Render the listing. The column header is always present.
pub fn render(trace: &Trace, args: &InspectArgs) -> String {
    let show_agent = args.role != RoleFilter::Manager;
    let mut header = vec!["#", "t"];
    if show_agent {
        header.push("Agent");
    }
    header.extend(["Action", "Rationale (short)", "Est. hrs", "Est. cost", "Task ID"]);
    let mut rows: Vec<Vec<String>> = vec![header.into_iter().map(str::to_string).collect()];

    let selected = trace
        .records
        .iter()
        .filter(|r| role_matches(args.role, r.role))
        .filter(|r| args.action_type.as_deref().is_none_or(|t| r.action_type() == t))
        .take(args.first.unwrap_or(usize::MAX));
    for (i, r) in selected.enumerate() {
        let [mut action, hrs, cost, task] = describe(r);
        if r.status == RecordStatus::Rejected {
            action.push_str(" [rejected]");
        }
        let mut row = vec![(i + 1).to_string(), r.timestep.to_string()];
        if show_agent {
            row.push(r.agent.to_string());
        }
        row.extend([clip(&action, 48), clip(&r.rationale, RATIONALE_WIDTH), hrs, cost, task]);
        rows.push(row);
    }

    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let numeric = |c: usize| c < 2 || rows[0][c].starts_with("Est.");
    let mut out = String::new();
    let h = &trace.header;
    let _ = writeln!(out, "scenario {}  policy {}  seed {}", h.scenario_id, h.policy, h.seed);
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                let w = widths[c];
                if numeric(c) {
                    format!("{v:>w$}")
                } else {
                    format!("{v:<w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

pub fn inspect(args: InspectArgs) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = Trace::parse(&text).with_context(|| format!("{}", args.trace.display()))?;
    print!("{}", render(&trace, &args));
    Ok(true)
}
