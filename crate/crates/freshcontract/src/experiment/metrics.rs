//! Metrics serialization: one delimited text file per (solver, seed) run
//! with a fixed column header. The wall-clock column is last so determinism
//! checks can strip it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gdm::EpisodeRecord;

pub const METRICS_HEADER: &str =
    "run_id,solver,seed,episode,train_reward_mean,eval_reward,wall_clock_s";

/// One row of a metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub solver: String,
    pub seed: u64,
    pub episode: usize,
    pub train_reward_mean: Option<f64>,
    pub eval_reward: Option<f64>,
    pub wall_clock_s: f64,
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders a metrics table: the training series of a run followed by one
/// final row holding the shared-evaluation reward.
pub fn render_metrics(
    run_id: &str,
    solver: &str,
    seed: u64,
    series: &[EpisodeRecord],
    final_eval: f64,
    wall_clock_s: f64,
) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for record in series {
        let _ = writeln!(
            out,
            "{run_id},{solver},{seed},{},{},{},{wall_clock_s}",
            record.episode,
            record.train_reward,
            fmt_opt(record.eval_reward),
        );
    }
    let final_episode = series.last().map(|r| r.episode + 1).unwrap_or(1);
    let _ = writeln!(out, "{run_id},{solver},{seed},{final_episode},,{final_eval},{wall_clock_s}");
    out
}

/// Parses a metrics file produced by [`render_metrics`].
pub fn parse_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == METRICS_HEADER => {}
        Some(other) => {
            return Err(Error::Parse(format!(
                "{}: unexpected header {other:?}, expected {METRICS_HEADER:?}",
                path.display()
            )))
        }
        None => return Err(Error::Parse(format!("{}: empty file", path.display()))),
    }
    let mut records = Vec::new();
    let mut last_episode = 0;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!(
                "{}:{}: expected 7 columns, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                Error::Parse(format!("{}:{}: bad {what} {s:?}", path.display(), lineno + 2))
            })
        };
        let opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { parse_f64(s, what).map(Some) }
        };
        let record = MetricsRecord {
            run_id: fields[0].to_string(),
            solver: fields[1].to_string(),
            seed: fields[2].parse().map_err(|_| {
                Error::Parse(format!("{}:{}: bad seed {:?}", path.display(), lineno + 2, fields[2]))
            })?,
            episode: fields[3].parse().map_err(|_| {
                Error::Parse(format!(
                    "{}:{}: bad episode {:?}",
                    path.display(),
                    lineno + 2,
                    fields[3]
                ))
            })?,
            train_reward_mean: opt(fields[4], "train reward")?,
            eval_reward: opt(fields[5], "eval reward")?,
            wall_clock_s: parse_f64(fields[6], "wall clock")?,
        };
        if record.episode <= last_episode && !records.is_empty() {
            return Err(Error::Parse(format!(
                "{}:{}: episode indices must increase",
                path.display(),
                lineno + 2
            )));
        }
        last_episode = record.episode;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    Ok(records)
}

/// Header of a menus file for `k` contract types.
pub fn menus_header(k: usize) -> String {
    let mut header = String::from("state_index");
    for i in 1..=k {
        let _ = write!(header, ",f_{i},r_{i}");
    }
    header.push_str(",feasible,reward");
    header
}
