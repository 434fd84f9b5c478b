//! Plain-text columnar trajectory files.
//!
//! A header line names the columns (`t s_0 .. s_{n-1} a_0 .. a_{m-1}`),
//! then one row per timestep. The final row carries no action fields
//! because no action follows the last state. Lines starting with `#` are
//! comments. Values are written in shortest round-trip precision, so
//! write-then-read reproduces the in-memory trajectory exactly.

use std::fmt::Write as _;
use std::path::Path;

use dropo_core::Trajectory;

use crate::errors::{CliError, CliResult};

pub fn render(traj: &Trajectory) -> String {
    let n = traj.state_dim();
    let m = traj.action_dim();
    let mut out = String::new();
    out.push('t');
    for i in 0..n {
        let _ = write!(out, " s_{i}");
    }
    for i in 0..m {
        let _ = write!(out, " a_{i}");
    }
    out.push('\n');
    for (idx, (time, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{time}");
        for v in state {
            let _ = write!(out, " {v}");
        }
        if let Some(action) = traj.actions.get(idx) {
            for v in action {
                let _ = write!(out, " {v}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, traj: &Trajectory) -> CliResult<()> {
    std::fs::write(path, render(traj))
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn parse(text: &str, origin: &str) -> CliResult<Trajectory> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::usage(format!("{origin}: empty trajectory file")))?;
    let columns: Vec<&str> = header.split_whitespace().collect();
    if columns.first() != Some(&"t") {
        return Err(CliError::usage(format!(
            "{origin}: header must start with column 't'"
        )));
    }
    let n = columns.iter().filter(|c| c.starts_with("s_")).count();
    let m = columns.iter().filter(|c| c.starts_with("a_")).count();
    if 1 + n + m != columns.len() {
        return Err(CliError::usage(format!(
            "{origin}: header columns must be t, s_*, a_*"
        )));
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let rows: Vec<(usize, &str)> = lines.collect();
    for (row_pos, (line_no, line)) in rows.iter().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let is_last = row_pos + 1 == rows.len();
        let expected = if is_last { 1 + n } else { 1 + n + m };
        if fields.len() != expected {
            return Err(CliError::usage(format!(
                "{origin}:{}: expected {expected} fields, found {}",
                line_no + 1,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str| -> CliResult<f64> {
            s.parse().map_err(|_| {
                CliError::usage(format!("{origin}:{}: invalid number '{s}'", line_no + 1))
            })
        };
        times.push(parse_f64(fields[0])?);
        states.push(
            fields[1..1 + n]
                .iter()
                .map(|s| parse_f64(s))
                .collect::<CliResult<Vec<f64>>>()?,
        );
        if !is_last {
            actions.push(
                fields[1 + n..]
                    .iter()
                    .map(|s| parse_f64(s))
                    .collect::<CliResult<Vec<f64>>>()?,
            );
        }
    }
    Trajectory::new(times, states, actions)
        .map_err(|e| CliError::usage(format!("{origin}: {e}")))
}

pub fn read(path: &Path) -> CliResult<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}
