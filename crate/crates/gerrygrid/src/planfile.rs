//! Plan files: a `gerrygrid-plans v1 n=<n>` header, then one plan per line
//! as the district label of each block in row-major order, lines sorted.
//!
//! The writer output is a pure function of the plan set, so files can be
//! compared byte for byte.

use std::io::Write;

use gerrygrid_core::{is_legal, DistrictingPlan, DualGraph, PlanSet};

use crate::error::{Error, Result};

const MAGIC: &str = "gerrygrid-plans v1 n=";

pub fn header(n: usize) -> String {
    format!("{MAGIC}{n}")
}

/// Writes `plans` of the `n x n` grid.
pub fn write_plans<W: Write>(mut w: W, n: usize, plans: &PlanSet) -> std::io::Result<()> {
    writeln!(w, "{}", header(n))?;
    let mut line = String::with_capacity(n * n + 1);
    for p in plans.plans() {
        line.clear();
        line.extend(p.assignment().iter().map(|&l| char::from_digit(l as u32, 36).expect("label below 36")));
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

/// Parses a plan file for the `n x n` grid, checking order, labels and legality.
/// Lines starting with `#` are skipped.
pub fn parse_plans(text: &str, n: usize, origin: &str) -> Result<PlanSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    let (hline, head) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty plan file"))?;
    let file_n: usize = head
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::parse(origin, hline as u64 + 1, format!("expected header '{MAGIC}<n>'")))?;
    if file_n != n {
        return Err(Error::Validation(format!("{origin}: plan file is for n={file_n}, grid has n={n}")));
    }
    let g = DualGraph::square(n)?;
    let k = n * n;
    let mut plans = Vec::new();
    let mut prev: Option<&str> = None;
    for (i, line) in lines {
        let at = i as u64 + 1;
        let line = line.trim_end_matches('\r');
        if line.len() != k {
            return Err(Error::parse(origin, at, format!("plan has {} labels, expected {k}", line.len())));
        }
        if prev.is_some_and(|p| p >= line) {
            return Err(Error::parse(origin, at, "plans are not strictly ascending"));
        }
        prev = Some(line);
        let labels = line
            .chars()
            .map(|c| c.to_digit(36).map(|d| d as u8))
            .collect::<Option<Vec<u8>>>()
            .ok_or_else(|| Error::parse(origin, at, "labels must be base-36 digits"))?;
        let plan = DistrictingPlan::new(labels.clone());
        if plan.assignment() != labels.as_slice() {
            return Err(Error::parse(origin, at, "labels are not in first-appearance order"));
        }
        if plan.n_districts() != n || !is_legal(&g, &plan) {
            return Err(Error::Validation(format!("{origin}:{at}: plan {line} is not legal on the {n}x{n} grid")));
        }
        plans.push(plan);
    }
    if plans.is_empty() {
        return Err(Error::parse(origin, 1, "plan file lists no plans"));
    }
    Ok(PlanSet::new(k, plans)?)
}
