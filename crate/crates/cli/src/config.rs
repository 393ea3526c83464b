//! `--config FILE`: a JSON object whose keys are flag names (`_` or `-`)
//! and whose values are flag values. Keys also given on the command line are
//! ignored, so explicit flags take precedence. The optional key `command`
//! names the subcommand when the command line does not.

use std::ffi::OsString;

use serde_json::Value;

const SUBCOMMANDS: &[&str] = &[
    "generate",
    "sig",
    "reconstruct",
    "fit",
    "predict",
    "crossval",
    "diffusion",
];

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

fn given(argv: &[OsString], flag: &str) -> bool {
    argv.iter().skip(1).any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

fn render(v: &Value) -> Result<Option<String>, String> {
    Ok(match v {
        Value::Null => None,
        Value::Bool(_) => None,
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Result<Vec<String>, String> = items
                .iter()
                .map(|i| render(i)?.ok_or_else(|| "arrays may only hold numbers or strings".to_string()))
                .collect();
            Some(parts?.join(","))
        }
        Value::Object(_) => return Err("nested objects are not supported in the config file".into()),
    })
}

/// Rewrites `argv` so that config-file settings appear as flags after the
/// subcommand.
pub fn expand_args(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("invalid config JSON: {e}"))?;
    let Value::Object(map) = value else {
        return Err("the config file must hold a JSON object".into());
    };
    let position = argv
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1);
    let command: OsString = match (position, map.get("command")) {
        (Some(i), _) => argv[i].clone(),
        (None, Some(Value::String(c))) => c.into(),
        (None, _) => return Err("no subcommand given on the command line or in the config".into()),
    };
    let mut out = vec![argv[0].clone(), command];
    for (key, v) in &map {
        if key == "command" || key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if given(&argv, &flag) {
            continue;
        }
        match v {
            Value::Bool(true) => out.push(flag.into()),
            _ => {
                if let Some(s) = render(v)? {
                    out.push(format!("{flag}={s}").into());
                }
            }
        }
    }
    out.extend(
        argv.iter()
            .enumerate()
            .skip(1)
            .filter(|(i, _)| Some(*i) != position)
            .map(|(_, a)| a.clone()),
    );
    Ok(out)
}
