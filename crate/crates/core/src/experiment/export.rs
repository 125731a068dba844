use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::train::{read_metrics, METRICS_FILE};
use super::ExperimentError;

/// Every metrics file under `dir`, sorted by path.
pub fn find_metrics(dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|e| ExperimentError::Io(format!("{}: {e}", d.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| ExperimentError::Io(e.to_string()))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == METRICS_FILE) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Success-rate curves of every run under `dir` as CSV: a `step` column and
/// one column per run, named after the run (suffixed `#2`, `#3` on clashes).
pub fn cmd_export(dir: &Path) -> Result<String, ExperimentError> {
    let mut columns: Vec<(String, BTreeMap<usize, f64>)> = Vec::new();
    let mut used = BTreeSet::new();
    for path in find_metrics(dir)? {
        let (header, rows) = read_metrics(&path)?;
        let mut name = header.name.clone();
        let mut i = 1;
        while !used.insert(name.clone()) {
            i += 1;
            name = format!("{}#{i}", header.name);
        }
        columns.push((name, rows.iter().map(|r| (r.step, r.eval_success_rate)).collect()));
    }
    let steps: BTreeSet<usize> = columns.iter().flat_map(|(_, c)| c.keys().copied()).collect();
    let mut csv = String::from("step");
    for (name, _) in &columns {
        csv.push(',');
        csv.push_str(&csv_field(name));
    }
    csv.push('\n');
    for s in steps {
        csv.push_str(&s.to_string());
        for (_, c) in &columns {
            csv.push(',');
            if let Some(v) = c.get(&s) {
                csv.push_str(&v.to_string());
            }
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
