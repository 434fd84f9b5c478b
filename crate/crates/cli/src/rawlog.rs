//! Raw sensor log files.
//!
//! One file holds several channels, each with its own clock. A channel
//! starts with a `#channel <name> <width>` header followed by rows of
//! `t v_0 .. v_{width-1}`. Other `#` lines are comments. Roles are not part
//! of the file; they come from the run configuration.

use std::path::Path;

use dropo_core::preprocess::{Channel, ChannelRole, SensorLog};

use crate::errors::{CliError, CliResult};

pub struct RawChannel {
    pub name: String,
    pub width: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn parse(text: &str, origin: &str) -> CliResult<Vec<RawChannel>> {
    let mut channels: Vec<RawChannel> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("#channel") {
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(CliError::usage(format!(
                    "{origin}:{line_no}: channel header must be '#channel <name> <width>'"
                )));
            }
            let width: usize = parts[1].parse().map_err(|_| {
                CliError::usage(format!("{origin}:{line_no}: invalid width '{}'", parts[1]))
            })?;
            if width == 0 {
                return Err(CliError::usage(format!(
                    "{origin}:{line_no}: channel width must be positive"
                )));
            }
            if channels.iter().any(|c| c.name == parts[0]) {
                return Err(CliError::usage(format!(
                    "{origin}:{line_no}: duplicate channel '{}'",
                    parts[0]
                )));
            }
            channels.push(RawChannel {
                name: parts[0].to_string(),
                width,
                times: Vec::new(),
                values: Vec::new(),
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let channel = channels.last_mut().ok_or_else(|| {
            CliError::usage(format!(
                "{origin}:{line_no}: sample row before any '#channel' header"
            ))
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != channel.width + 1 {
            return Err(CliError::usage(format!(
                "{origin}:{line_no}: expected {} fields for channel '{}', found {}",
                channel.width + 1,
                channel.name,
                fields.len()
            )));
        }
        let mut nums = fields.iter().map(|s| {
            s.parse::<f64>().map_err(|_| {
                CliError::usage(format!("{origin}:{line_no}: invalid number '{s}'"))
            })
        });
        channel.times.push(nums.next().unwrap()?);
        channel.values.push(nums.collect::<CliResult<Vec<f64>>>()?);
    }
    if channels.is_empty() {
        return Err(CliError::usage(format!("{origin}: no channels found")));
    }
    Ok(channels)
}

/// Reads a raw log and attaches the configured roles.
pub fn read_with_roles(path: &Path, roles: &[(String, ChannelRole)]) -> CliResult<SensorLog> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let raw = parse(&text, &path.display().to_string())?;
    let mut channels = Vec::new();
    for rc in raw {
        let role = roles
            .iter()
            .find(|(name, _)| *name == rc.name)
            .map(|(_, role)| *role)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "channel '{}' has no role in the [preprocess] config",
                    rc.name
                ))
            })?;
        if rc.width != role.width() {
            return Err(CliError::usage(format!(
                "channel '{}': role expects width {}, file has {}",
                rc.name,
                role.width(),
                rc.width
            )));
        }
        channels.push(Channel {
            name: rc.name,
            role,
            times: rc.times,
            values: rc.values,
        });
    }
    for (name, _) in roles {
        if !channels.iter().any(|c| &c.name == name) {
            return Err(CliError::usage(format!(
                "configured channel '{name}' missing from the log"
            )));
        }
    }
    Ok(SensorLog::new(channels)?)
}

#[cfg(test)]
pub fn render(channels: &[(&str, usize, &[f64], &[Vec<f64>])]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (name, width, times, values) in channels {
        let _ = writeln!(out, "#channel {name} {width}");
        for (t, v) in times.iter().zip(values.iter()) {
            let _ = write!(out, "{t}");
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# recorded on the bench
#channel pos 1
0.0 0.5
0.1 0.6
#channel cmd 1
0.0 1.0
0.05 2.0
";

    #[test]
    fn parses_channels() {
        let channels = parse(SAMPLE, "log").unwrap();
        assert_eq!(channels.len(), 2);
        assert_eq!(channels[0].name, "pos");
        assert_eq!(channels[0].times, vec![0.0, 0.1]);
        assert_eq!(channels[1].values, vec![vec![1.0], vec![2.0]]);
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        let bad = SAMPLE.replace("0.1 0.6", "0.1 0.6 7.0");
        let err = parse(&bad, "log").unwrap_err().to_string();
        assert!(err.contains("log:4"), "{err}");
    }

    #[test]
    fn rows_before_header_are_rejected() {
        let err = parse("0.0 1.0\n", "log").unwrap_err().to_string();
        assert!(err.contains("before any"), "{err}");
    }

    #[test]
    fn duplicate_channels_are_rejected() {
        let bad = format!("{SAMPLE}#channel pos 1\n0.0 1.0\n");
        assert!(parse(&bad, "log").is_err());
    }
}
