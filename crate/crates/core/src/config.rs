//! Flat sectioned `key = value` configuration documents.
//!
//! The format is deliberately language-neutral: `[section]` headers, one
//! `key = value` pair per line, `#` comments. A JSON front end (an object of
//! section objects) can be converted into the same document by callers that
//! support it.

use crate::error::{CoreError, Result};
use std::collections::BTreeMap;

/// Parsed configuration: section -> key -> raw value string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CoreError::Config(format!(
                        "line {}: malformed section header '{raw}'",
                        lineno + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                doc.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CoreError::Config(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                )));
            };
            doc.set(&section, key.trim(), value.trim());
        }
        Ok(doc)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    CoreError::Config(format!("{section}.{key}: expected a number, got '{v}'"))
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    CoreError::Config(format!(
                        "{section}.{key}: expected a non-negative integer, got '{v}'"
                    ))
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    CoreError::Config(format!(
                        "{section}.{key}: expected a non-negative integer, got '{v}'"
                    ))
                })
            })
            .transpose()
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.get(section, key)
            .map(|v| match v {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                other => Err(CoreError::Config(format!(
                    "{section}.{key}: expected a boolean, got '{other}'"
                ))),
            })
            .transpose()
    }

    /// Comma-separated list of integers, e.g. `2, 2, 1, 2`.
    pub fn get_usize_list(&self, section: &str, key: &str) -> Result<Option<Vec<usize>>> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(|part| {
                        part.trim().parse::<usize>().map_err(|_| {
                            CoreError::Config(format!(
                                "{section}.{key}: expected integers, got '{part}'"
                            ))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(|part| {
                        part.trim().parse::<f64>().map_err(|_| {
                            CoreError::Config(format!(
                                "{section}.{key}: expected numbers, got '{part}'"
                            ))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64> {
        self.get_f64(section, key)?
            .ok_or_else(|| CoreError::Config(format!("{section}.{key}: missing required key")))
    }

    pub fn require_usize(&self, section: &str, key: &str) -> Result<usize> {
        self.get_usize(section, key)?
            .ok_or_else(|| CoreError::Config(format!("{section}.{key}: missing required key")))
    }

    /// Echo the document back as canonical text (sorted sections and keys).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.sections {
            if !section.is_empty() {
                out.push_str(&format!("[{section}]\n"));
            }
            for (key, value) in keys {
                out.push_str(&format!("{key} = {value}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_keys_and_comments() {
        let doc = ConfigDoc::parse(
            "# top comment\n[solver]\ndt = 0.02  # timestep\nstride = 5\n\n[dataset]\ncount = 24\n",
        )
        .unwrap();
        assert_eq!(doc.get_f64("solver", "dt").unwrap(), Some(0.02));
        assert_eq!(doc.get_usize("solver", "stride").unwrap(), Some(5));
        assert_eq!(doc.get_usize("dataset", "count").unwrap(), Some(24));
        assert_eq!(doc.get("dataset", "missing"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigDoc::parse("[broken\n").is_err());
        assert!(ConfigDoc::parse("just words\n").is_err());
    }

    #[test]
    fn field_level_error_names_the_key() {
        let doc = ConfigDoc::parse("[solver]\ndt = fast\n").unwrap();
        let err = doc.get_f64("solver", "dt").unwrap_err();
        assert!(err.to_string().contains("solver.dt"));
    }

    #[test]
    fn canonical_echo_roundtrips() {
        let doc = ConfigDoc::parse("[b]\nk = 1\n[a]\nz = 2\ny = 3\n").unwrap();
        let echoed = ConfigDoc::parse(&doc.to_text()).unwrap();
        assert_eq!(doc, echoed);
    }

    #[test]
    fn parses_lists() {
        let doc = ConfigDoc::parse("[model]\nmultipliers = 2, 2, 1, 2\n").unwrap();
        assert_eq!(
            doc.get_usize_list("model", "multipliers").unwrap(),
            Some(vec![2, 2, 1, 2])
        );
    }
}
