//! Configuration files: JSON mirroring the pipeline settings, or flat
//! `key = value` lines with `#` comments.

use std::fs;
use std::path::Path;

use hwseg_core::PipelineConfig;

use crate::error::{Error, Result};

pub fn parse_config(text: &str, path: &Path) -> Result<PipelineConfig> {
    let cfg = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?
    } else {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigFile {
                path: path.to_path_buf(),
                message: format!("line {}: expected key = value", n + 1),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Base configuration (file or defaults) with `key=value` overrides applied.
pub fn effective_config(file: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut cfg = match file {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    for item in overrides {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::ConfigFile {
            path: "--set".into(),
            message: format!("expected key=value, got {item:?}"),
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `key = value` listing of a configuration.
pub fn to_key_value(cfg: &PipelineConfig) -> String {
    cfg.entries()
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let p = Path::new("cfg");
        let kv = parse_config("# comment\nconf_word = 0.45\npht_seed=0x10 # trailing\n\n", p).unwrap();
        let js = parse_config(r#"{"conf_word": 0.45, "pht_seed": 16}"#, p).unwrap();
        assert_eq!(kv, js);
        assert_eq!(kv.conf_word, 0.45);
        assert_eq!(parse_config(&to_key_value(&kv), p).unwrap(), kv);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("cfg");
        assert!(parse_config("nonsense", p).is_err());
        assert!(parse_config("unknown = 1", p).is_err());
        assert!(parse_config(r#"{"unknown": 1}"#, p).is_err());
        assert!(parse_config("ta = 2", p).is_err());
    }

    #[test]
    fn overrides_apply_last() {
        let cfg = effective_config(None, &["ta=0.7".into(), "dskew_height = 64".into()]).unwrap();
        assert_eq!((cfg.ta, cfg.dskew_height), (0.7, 64));
        assert!(effective_config(None, &["ta".into()]).is_err());
    }
}
