//! `key=value` configuration files, merged into the argument list so that
//! explicit flags take precedence.

use std::path::Path;

use anyhow::{bail, Context};

use crate::UsageError;

/// Keys that select the code; dropped from the file when a flag already does.
const CODE_SOURCE: [&str; 4] = ["polar", "pc-file", "info-set", "epsilon"];

pub fn parse(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(UsageError(format!("config line {}: expected key=value", i + 1)));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!(UsageError(format!("config line {}: invalid key {:?}", i + 1, k.trim())));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))
        .context("loading config")?;
    parse(&text)
}

/// Inserts config entries right after the subcommand token. Because the
/// parser lets later occurrences override earlier ones, user flags win.
pub fn merge(argv: &[String], sub_pos: usize, entries: &[(String, String)]) -> Vec<String> {
    let user_has_code = argv[sub_pos + 1..]
        .iter()
        .any(|a| a.starts_with("--polar") || a.starts_with("--pc-file"));
    let mut extra = Vec::new();
    for (k, v) in entries {
        if user_has_code && CODE_SOURCE.contains(&k.as_str()) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.extend(v.split_whitespace().map(str::to_string));
            }
        }
    }
    let mut out = argv[..=sub_pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[sub_pos + 1..]);
    out
}
