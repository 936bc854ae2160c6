//! Sectioned `key = value` config files. Flat by design: every value is a
//! scalar, sections group stages, and any key outside the schema is an
//! error. Keys before the first section header belong to [pipeline].

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

const SCHEMA: &[(&str, &[&str])] = &[
    (
        "pipeline",
        &[
            "seed",
            "window",
            "test_fraction",
            "min_history",
            "out_dir",
            "baseline_l2",
            "baseline_lr",
            "baseline_epochs",
        ],
    ),
    ("synth", &["days", "bars_per_day", "r", "vol"]),
    ("model", &["d_model", "n_heads", "d_ff", "lstm_hidden"]),
    (
        "train",
        &["learning_rate", "max_epochs", "patience", "batch_size", "clip_norm", "val_fraction"],
    ),
    ("chaos", &["m", "tau", "theiler", "fit_lo", "fit_hi", "r_frac"]),
];

fn known(section: &str, key: &str) -> bool {
    SCHEMA
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

#[derive(Debug, Default)]
pub struct FileConfig {
    entries: BTreeMap<(String, String), String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = "pipeline".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| usage(format!("unterminated section header (line {line_no})")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(usage(format!("unknown section [{name}] (line {line_no})")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key = value (line {line_no})")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(usage(format!("empty key (line {line_no})")));
            }
            if !known(&section, key) {
                return Err(usage(format!("unknown key {section}.{key} (line {line_no})")));
            }
            if entries
                .insert((section.clone(), key.to_string()), value.to_string())
                .is_some()
            {
                return Err(usage(format!("duplicate key {section}.{key} (line {line_no})")));
            }
        }
        Ok(FileConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        debug_assert!(known(section, key), "unschema'd lookup {section}.{key}");
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    fn typed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        what: &str,
    ) -> Result<Option<T>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                usage(format!("config {section}.{key}: expected {what}, got {raw:?}"))
            }),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, CliError> {
        self.typed(section, key, "an unsigned integer")
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        self.typed(section, key, "an unsigned integer")
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.typed(section, key, "a number")
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}
