//! Flag defaults from a TOML file. Top-level keys apply to every command
//! that has a flag of that name; a `[command]` table (`[relabel-serve]` also
//! covers `relabel serve`) applies to one command. Flags on the command line
//! win.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Names of the command and optional subcommand, skipping global flags.
fn command_path(argv: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            it.next();
        } else if a.starts_with('-') {
            continue;
        } else {
            out.push(a);
            if out.len() == 2 || out[0] != "relabel" {
                break;
            }
        }
    }
    out
}

fn value_args(key: &str, value: &toml::Value, out: &mut Vec<OsString>) -> Result<(), CliError> {
    let flag = format!("--{key}");
    match value {
        toml::Value::Boolean(true) => out.push(flag.into()),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => out.extend([flag.into(), s.into()]),
        toml::Value::Integer(i) => out.extend([flag.into(), i.to_string().into()]),
        toml::Value::Float(f) => out.extend([flag.into(), f.to_string().into()]),
        toml::Value::Array(items) => {
            for item in items {
                value_args(key, item, out)?;
            }
        }
        other => return Err(CliError::Usage(format!("config key {key:?}: unsupported value {other}"))),
    }
    Ok(())
}

fn flag_given(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// `argv` with flags from the config file appended.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.to_string_lossy())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.to_string_lossy())))?;
    let names = command_path(&argv);
    if names.is_empty() {
        return Ok(argv);
    }
    let root = Cli::command();
    let mut cmd = &root;
    for n in &names {
        match cmd.find_subcommand(n) {
            Some(c) => cmd = c,
            None => return Ok(argv),
        }
    }
    let accepted: Vec<String> = cmd.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect();
    let section = names.join("-");
    let mut extra = Vec::new();
    for (key, value) in &table {
        if let toml::Value::Table(t) = value {
            if *key != section {
                continue;
            }
            for (k, v) in t {
                if !accepted.contains(k) {
                    return Err(CliError::Usage(format!("config [{key}]: {section} has no --{k}")));
                }
                if !flag_given(&argv, k) {
                    value_args(k, v, &mut extra)?;
                }
            }
        } else if accepted.contains(key) && key != "config" && !flag_given(&argv, key) && !table_has(&table, &section, key) {
            value_args(key, value, &mut extra)?;
        }
    }
    let mut argv = argv;
    argv.extend(extra);
    Ok(argv)
}

fn table_has(table: &toml::Table, section: &str, key: &str) -> bool {
    matches!(table.get(section), Some(toml::Value::Table(t)) if t.contains_key(key))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_path_skips_globals() {
        assert_eq!(command_path(&os(&["t", "--config", "c.toml", "-v", "cv", "--x"])), vec!["cv"]);
        assert_eq!(command_path(&os(&["t", "relabel", "serve", "--port", "1"])), vec!["relabel", "serve"]);
    }

    #[test]
    fn merges_with_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 9\nport = 1\n[cv]\nfolds = 3\nfeatures = \"mu\"\nbalanced = true\n").unwrap();
        let p = path.to_str().unwrap();
        let merged = merge(os(&["t", "--config", p, "cv", "--input", "x", "--features", "ngrams:1"])).unwrap();
        let s: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert!(s.windows(2).any(|w| w == ["--seed", "9"]));
        assert!(s.windows(2).any(|w| w == ["--folds", "3"]));
        assert!(s.contains(&"--balanced".to_string()));
        // cv has no --port, and the command line wins for features
        assert!(!s.contains(&"--port".to_string()));
        assert_eq!(s.iter().filter(|a| *a == "--features").count(), 1);

        std::fs::write(&path, "[cv]\nbogus = 1\n").unwrap();
        assert!(merge(os(&["t", "--config", p, "cv"])).is_err());
    }
}
