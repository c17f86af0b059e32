//! `key = value` config files, merged into the command line so that explicit
//! flags win.

use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::CliError;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected `key = value`",
                origin.display(),
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("{}:{}: empty key", origin.display(), i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Renders pairs in the format [`parse_config`] reads.
pub fn render_config(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn flag_args(cmd: &Command, key: &str, value: &str) -> Option<Result<Vec<String>, CliError>> {
    let arg = cmd.get_arguments().find(|a| a.get_long() == Some(key))?;
    let flag = format!("--{key}");
    Some(match arg.get_action() {
        ArgAction::SetTrue => match value {
            "true" => Ok(vec![flag]),
            "false" => Ok(Vec::new()),
            _ => Err(CliError::Usage(format!("config key {key} expects true or false, got {value:?}"))),
        },
        _ => Ok(vec![flag, value.to_string()]),
    })
}

fn option_value<'a>(args: &'a [String], name: &str) -> Option<&'a str> {
    let eq = format!("{name}=");
    args.iter().enumerate().find_map(|(i, a)| {
        if a == name {
            args.get(i + 1).map(String::as_str)
        } else {
            a.strip_prefix(&eq)
        }
    })
}

/// Expands `--config FILE`: the file's keys become flags placed before the
/// user's own, so repeated flags from the command line take precedence.
pub fn merge_config(args: Vec<String>, cmd: &Command) -> Result<Vec<String>, CliError> {
    let Some(path) = option_value(&args, "--config").map(str::to_owned) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let pairs = parse_config(&text, path)?;

    let sub_pos = args
        .iter()
        .position(|a| cmd.find_subcommand(a).is_some())
        .ok_or_else(|| CliError::Usage("no command given".into()))?;
    let sub = cmd.find_subcommand(&args[sub_pos]).expect("subcommand exists");

    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in &pairs {
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if let Some(a) = flag_args(cmd, key, value) {
            global.extend(a?);
        } else if let Some(a) = flag_args(sub, key, value) {
            local.extend(a?);
        } else {
            return Err(CliError::Usage(format!(
                "{}: unknown key {key:?} for command {}",
                path.display(),
                sub.get_name()
            )));
        }
    }
    let mut merged = vec![args[0].clone()];
    merged.extend(global);
    merged.extend(args[1..=sub_pos].iter().cloned());
    merged.extend(local);
    merged.extend(args[sub_pos + 1..].iter().cloned());
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse_config("# run\nseed = 7\n\nmean_sentence_len=13\n", Path::new("c")).unwrap();
        assert_eq!(
            p,
            vec![
                ("seed".to_string(), "7".to_string()),
                ("mean-sentence-len".to_string(), "13".to_string())
            ]
        );
        assert!(parse_config("seed 7", Path::new("c")).is_err());
    }

    #[test]
    fn render_round_trips() {
        let pairs = vec![("texts".to_string(), "60".to_string()), ("cue".to_string(), "aí".to_string())];
        assert_eq!(parse_config(&render_config(&pairs), Path::new("c")).unwrap(), pairs);
    }
}
