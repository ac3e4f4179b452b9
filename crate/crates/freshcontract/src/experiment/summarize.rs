//! Aggregates run outputs into a per-solver comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::metrics::parse_metrics;

/// Aggregate of one solver across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: String,
    pub runs: usize,
    pub final_eval_mean: f64,
    pub final_eval_std: f64,
    /// Mean `(f, R)` per contract type over all inferred menus, when menus
    /// files were found next to the metrics files.
    pub mean_menu: Vec<(f64, f64)>,
    /// Fraction of inferred menus passing the feasibility check.
    pub feasibility_rate: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

struct MenuStats {
    sums: Vec<(f64, f64)>,
    rows: usize,
    feasible: usize,
}

fn parse_menus(path: &Path) -> Result<MenuStats> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"state_index")
        || columns.len() < 5
        || (columns.len() - 3) % 2 != 0
        || columns[columns.len() - 2] != "feasible"
        || columns[columns.len() - 1] != "reward"
    {
        return Err(Error::Parse(format!(
            "{}: unexpected menus header {header:?}",
            path.display()
        )));
    }
    let k = (columns.len() - 3) / 2;
    let mut stats = MenuStats { sums: vec![(0.0, 0.0); k], rows: 0, feasible: 0 };
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse(format!(
                "{}:{}: expected {} columns, got {}",
                path.display(),
                lineno + 2,
                columns.len(),
                fields.len()
            )));
        }
        for (i, sums) in stats.sums.iter_mut().enumerate() {
            let f: f64 = fields[1 + 2 * i].parse().map_err(|_| {
                Error::Parse(format!("{}:{}: bad frequency", path.display(), lineno + 2))
            })?;
            let r: f64 = fields[2 + 2 * i].parse().map_err(|_| {
                Error::Parse(format!("{}:{}: bad reward", path.display(), lineno + 2))
            })?;
            sums.0 += f;
            sums.1 += r;
        }
        match fields[columns.len() - 2] {
            "true" => stats.feasible += 1,
            "false" => {}
            other => {
                return Err(Error::Parse(format!(
                    "{}:{}: bad feasible flag {other:?}",
                    path.display(),
                    lineno + 2
                )))
            }
        }
        stats.rows += 1;
    }
    Ok(stats)
}

/// Builds per-solver summaries from metrics files. A sibling
/// `*.menus.csv` next to each `*.metrics.csv` contributes menu statistics.
pub fn summarize(metrics_paths: &[PathBuf]) -> Result<Vec<SolverSummary>> {
    if metrics_paths.is_empty() {
        return Err(Error::Config("summarize needs at least one metrics file".into()));
    }
    struct Group {
        finals: Vec<f64>,
        menu_sums: Vec<(f64, f64)>,
        menu_rows: usize,
        feasible: usize,
        have_menus: bool,
    }
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    let mut paths = metrics_paths.to_vec();
    paths.sort();
    paths.dedup();
    for path in &paths {
        let records = parse_metrics(path)?;
        let final_eval = records
            .iter()
            .rev()
            .find_map(|r| r.eval_reward)
            .ok_or_else(|| {
                Error::Parse(format!("{}: no evaluation rewards recorded", path.display()))
            })?;
        let solver = records[0].solver.clone();
        let group = groups.entry(solver).or_insert_with(|| Group {
            finals: Vec::new(),
            menu_sums: Vec::new(),
            menu_rows: 0,
            feasible: 0,
            have_menus: false,
        });
        group.finals.push(final_eval);

        let menus_path = PathBuf::from(
            path.to_string_lossy().replace(".metrics.csv", ".menus.csv"),
        );
        if menus_path != *path && menus_path.is_file() {
            let stats = parse_menus(&menus_path)?;
            if group.menu_sums.is_empty() {
                group.menu_sums = vec![(0.0, 0.0); stats.sums.len()];
            }
            if group.menu_sums.len() == stats.sums.len() {
                for (acc, s) in group.menu_sums.iter_mut().zip(&stats.sums) {
                    acc.0 += s.0;
                    acc.1 += s.1;
                }
                group.menu_rows += stats.rows;
                group.feasible += stats.feasible;
                group.have_menus = true;
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(solver, group)| {
            let (mean, std) = mean_std(&group.finals);
            let (mean_menu, feasibility_rate) = if group.have_menus && group.menu_rows > 0 {
                let rows = group.menu_rows as f64;
                (
                    group.menu_sums.iter().map(|(f, r)| (f / rows, r / rows)).collect(),
                    Some(group.feasible as f64 / rows),
                )
            } else {
                (Vec::new(), None)
            };
            SolverSummary {
                solver,
                runs: group.finals.len(),
                final_eval_mean: mean,
                final_eval_std: std,
                mean_menu,
                feasibility_rate,
            }
        })
        .collect())
}

/// Renders summaries as a tab-delimited table.
pub fn render_summary(summaries: &[SolverSummary]) -> String {
    let k = summaries.iter().map(|s| s.mean_menu.len()).max().unwrap_or(0);
    let mut out = String::from("solver\truns\tfinal_eval_mean\tfinal_eval_std\tfeasibility_rate");
    for i in 1..=k {
        let _ = write!(out, "\tmean_f_{i}\tmean_r_{i}");
    }
    out.push('\n');
    for s in summaries {
        let _ = write!(
            out,
            "{}\t{}\t{:.4}\t{:.4}\t{}",
            s.solver,
            s.runs,
            s.final_eval_mean,
            s.final_eval_std,
            s.feasibility_rate.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into()),
        );
        for i in 0..k {
            match s.mean_menu.get(i) {
                Some((f, r)) => {
                    let _ = write!(out, "\t{f:.4}\t{r:.4}");
                }
                None => out.push_str("\t-\t-"),
            }
        }
        out.push('\n');
    }
    out
}

/// Expands a path pattern: a literal path maps to itself; a pattern whose
/// final component contains `*` matches files in its parent directory.
/// Matches are sorted for determinism.
pub fn expand_pattern(pattern: &str) -> Result<Vec<PathBuf>> {
    if !pattern.contains('*') {
        return Ok(vec![PathBuf::from(pattern)]);
    }
    let path = Path::new(pattern);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name_pattern = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("bad pattern {pattern:?}")))?
        .to_string_lossy()
        .to_string();
    if name_pattern.contains('/') || dir.to_string_lossy().contains('*') {
        return Err(Error::Config(format!(
            "wildcards are only supported in the file name: {pattern:?}"
        )));
    }
    let mut matches = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if wildcard_match(&name_pattern, &name) {
            matches.push(entry.path());
        }
    }
    matches.sort();
    Ok(matches)
}

/// Matches `*`-wildcards: literal pieces must appear in order, with the
/// first anchored at the start and the last at the end.
fn wildcard_match(pattern: &str, name: &str) -> bool {
    let pieces: Vec<&str> = pattern.split('*').collect();
    if pieces.len() == 1 {
        return pattern == name;
    }
    let mut rest = match name.strip_prefix(pieces[0]) {
        Some(r) => r,
        None => return false,
    };
    for piece in &pieces[1..pieces.len() - 1] {
        if piece.is_empty() {
            continue;
        }
        match rest.find(piece) {
            Some(at) => rest = &rest[at + piece.len()..],
            None => return false,
        }
    }
    let last = pieces[pieces.len() - 1];
    rest.len() >= last.len() && rest.ends_with(last)
}
