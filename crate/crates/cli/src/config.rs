//! `key=value` config files, expanded into long flags ahead of the
//! command line so that explicit flags win.

use std::collections::HashSet;
use std::ffi::OsString;

use crate::CliError;

/// One `key=value` pair from a config file, with its line number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses flat `key=value` lines; `#` starts a comment line, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(CliError::Usage(format!("config line {}: invalid key '{key}'", i + 1)));
        }
        if key == "config" {
            return Err(CliError::Usage(format!(
                "config line {}: nested config files are not supported",
                i + 1
            )));
        }
        out.push(ConfigEntry {
            line: i + 1,
            key: key.replace('_', "-"),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(n, _)| n))
}

/// Removes `--config PATH` from `args` and splices the file's entries in
/// right after the subcommand, dropping keys the command line already sets.
pub fn expand_config(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                let p = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
                path = Some(p);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let entries = parse_config(&text)?;

    let sub_at = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s)))
        .ok_or_else(|| CliError::Usage("--config needs a subcommand".into()))?;
    let given: HashSet<String> = rest[sub_at + 1..]
        .iter()
        .filter_map(|a| a.to_str().and_then(flag_name).map(str::to_string))
        .collect();

    let mut expanded = Vec::new();
    for e in entries.iter().filter(|e| !given.contains(&e.key)) {
        expanded.push(OsString::from(format!("--{}", e.key)));
        expanded.push(OsString::from(&e.value));
    }
    rest.splice(sub_at + 1..sub_at + 1, expanded);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse_config("# a comment\n\nsigma_d = 1.5\nwave=angle=30;freq=0.5\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "sigma-d");
        assert_eq!(e[0].value, "1.5");
        assert_eq!(e[1].value, "angle=30;freq=0.5");
        assert_eq!(e[1].line, 4);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config("no equals sign").is_err());
        assert!(parse_config("=3").is_err());
        assert!(parse_config("bad key=3").is_err());
        assert!(parse_config("config=x").is_err());
    }

    #[test]
    fn command_line_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "dims=8,8\nseed=3\n").unwrap();
        let args = os(&["stensor", "--config", path.to_str().unwrap(), "synth", "--seed=9"]);
        let out = expand_config(args, &["synth"]).unwrap();
        assert_eq!(out, os(&["stensor", "synth", "--dims", "8,8", "--seed=9"]));
    }

    #[test]
    fn missing_file_is_io_error() {
        let args = os(&["stensor", "--config", "/nonexistent/x.cfg", "synth"]);
        assert!(matches!(expand_config(args, &["synth"]), Err(CliError::Io(_))));
    }
}
