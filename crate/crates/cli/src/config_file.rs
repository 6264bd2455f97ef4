//! Flat `key = value` config files with dotted keys and `#` comments.

use crate::error::{CliError, CliResult};

pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config {
                line: i + 1,
                reason: format!("expected key=value, found {line:?}"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config {
                line: i + 1,
                reason: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Splits a `--set key=value` argument.
pub fn parse_override(arg: &str) -> CliResult<(String, String)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(CliError::Usage(format!(
            "--set expects key=value, got {arg:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# header\ntrain.lr = 0.01\n\nseed=3 # trailing\n";
        assert_eq!(
            parse_config(text).unwrap(),
            vec![
                ("train.lr".into(), "0.01".into()),
                ("seed".into(), "3".into())
            ]
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(
            parse_config("a=1\nbogus\n"),
            Err(CliError::Config { line: 2, .. })
        ));
        assert!(parse_override("x").is_err());
        assert!(parse_override("=1").is_err());
        assert_eq!(parse_override("e3.deltas=0,0.1").unwrap().1, "0,0.1");
    }
}
