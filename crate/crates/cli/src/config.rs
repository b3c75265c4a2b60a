//! `--config file.json`: a JSON object of long flag names and values,
//! spliced into the argument list right after the subcommand so that flags
//! given on the command line override it.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;
use serde_json::Value;

use crate::args::Cli;

/// Path given to `--config`, if any.
fn config_path(args: &[OsString]) -> Result<Option<OsString>> {
    let mut found = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            found = Some(it.next().cloned().context("--config needs a path")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(OsString::from(p));
        }
    }
    Ok(found)
}

fn flag_value(key: &str, v: &Value) -> Result<Option<String>> {
    let text = match v {
        Value::Null | Value::Bool(false) => return Ok(None),
        Value::Bool(true) => return Ok(Some(format!("--{key}"))),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|x| match x {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => bail!("config key {key:?}: array items must be numbers or strings"),
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
        Value::Object(_) => bail!("config key {key:?}: nested objects are not allowed"),
    };
    Ok(Some(format!("--{key}={text}")))
}

/// Flags generated from the config file of subcommand `sub`.
pub fn config_flags(sub: &str, doc: &Value) -> Result<Vec<String>> {
    let Value::Object(map) = doc else { bail!("config must be a JSON object") };
    let cmd = Cli::command();
    let sc = cmd.find_subcommand(sub).with_context(|| format!("unknown subcommand {sub:?}"))?;
    let known: Vec<&str> = sc.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "config").collect();
    let mut flags = Vec::new();
    for (key, v) in map {
        if !known.contains(&key.as_str()) {
            bail!("unknown config field {key:?} for {sub} (expected one of: {})", known.join(", "));
        }
        flags.extend(flag_value(key, v)?);
    }
    Ok(flags)
}

/// Splice config-file flags into `args`. Leaves `args` untouched when no
/// `--config` is present or the subcommand is missing (clap reports that).
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args)? else { return Ok(args) };
    let Some(sub) = args.get(1).map(|s| s.to_string_lossy().into_owned()) else { return Ok(args) };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.to_string_lossy()))?;
    let doc: Value =
        serde_json::from_str(&text).with_context(|| format!("config {} is not valid JSON", path.to_string_lossy()))?;
    let flags = config_flags(&sub, &doc)?;
    args.splice(2..2, flags.into_iter().map(OsString::from));
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn values_become_flags() {
        let f =
            config_flags("moments", &json!({"p": [0.1, 0.2], "times": "0:1:0.5", "no-timestamp": true, "out": null}))
                .unwrap();
        assert_eq!(f, vec!["--p=0.1,0.2", "--times=0:1:0.5", "--no-timestamp"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(config_flags("moments", &json!({"kmax": 3})).is_err());
        assert!(config_flags("moments", &json!({"config": "x"})).is_err());
        assert!(config_flags("moments", &json!([1])).is_err());
    }

    #[test]
    fn command_line_flags_win() {
        let dir = std::env::temp_dir().join(format!("wfmgf-config-{}", std::process::id()));
        fs::write(&dir, r#"{"p": 0.2}"#).unwrap();
        let args: Vec<OsString> =
            ["wfmgf", "moments", "--config", dir.to_str().unwrap(), "--p", "0.7"].iter().map(OsString::from).collect();
        let out = expand(args).unwrap();
        assert_eq!(out[2], "--p=0.2");
        let cli = <Cli as clap::Parser>::try_parse_from(out).unwrap();
        match cli.command {
            crate::args::Command::Moments(a) => assert_eq!(a.p.0, vec![0.7]),
            _ => unreachable!(),
        }
        fs::remove_file(dir).unwrap();
    }
}
