use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use magym_core::engine::{replay, Trace};
use magym_core::evaluation::{render_csv, render_table, summary_rows, MetricReport};

use crate::Format;

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Trace files, or directories whose `*.jsonl` files are all read.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Where to write the summary [default: summary.txt or summary.csv beside the first trace].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct Scored {
    pub scenario: String,
    pub policy: String,
    pub metrics: MetricReport,
}

fn expand(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Replay a trace and check that the recomputed metrics match its footer.
pub fn score_trace(path: &Path) -> anyhow::Result<Scored> {
    let text = std::fs::read_to_string(path).context("cannot read")?;
    let trace = Trace::parse(&text)?;
    let footer = trace.footer.as_ref().ok_or_else(|| anyhow!("trace has no footer (truncated?)"))?;
    let report = replay(&trace).context("replay failed")?;
    if let Some(m) = report.mismatches.first() {
        return Err(anyhow!(
            "replay diverged at record {} (expected digest {}, got {}); {} mismatch(es)",
            m.seq,
            m.expected,
            m.actual,
            report.mismatches.len()
        ));
    }
    let recomputed = report
        .trace
        .footer
        .ok_or_else(|| anyhow!("replay did not terminate"))?
        .metrics;
    if recomputed != footer.metrics {
        return Err(anyhow!("footer metrics disagree with the metrics recomputed from the trace body"));
    }
    Ok(Scored {
        scenario: trace.header.scenario_id,
        policy: trace.header.policy,
        metrics: recomputed,
    })
}

/// `magym evaluate`: true when every trace scored cleanly.
pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<bool> {
    let files = expand(&args.traces)?;
    let mut ok = true;
    let mut scored = Vec::new();
    for f in &files {
        match score_trace(f) {
            Ok(s) => scored.push(s),
            Err(e) => {
                eprintln!("{}: {e:#}", f.display());
                ok = false;
            }
        }
    }
    let rows = summary_rows(scored.iter().map(|s| (s.scenario.as_str(), s.policy.as_str(), &s.metrics)));
    let (text, ext) = match args.format {
        Format::Table => (render_table(&rows), "txt"),
        Format::Csv => (render_csv(&rows), "csv"),
    };
    print!("{text}");
    let out = args.out.unwrap_or_else(|| {
        let dir = files
            .first()
            .and_then(|f| f.parent())
            .map(Path::to_path_buf)
            .unwrap_or_default();
        dir.join(format!("summary.{ext}"))
    });
    crate::write_file(&out, &text)?;
    Ok(ok)
}
