//! Line-oriented configuration files.
//!
//! ```text
//! file     := line*
//! line     := blank | comment | section | entry
//! comment  := ws ("#" | ";") any*
//! section  := ws "[" ws name ws "]" ws
//! entry    := ws name ws "=" ws value
//! name     := [A-Za-z_] [A-Za-z0-9_.-]*
//! value    := any* (surrounding whitespace trimmed, must be nonempty)
//! ```
//!
//! Entries must follow a section header. Section names and keys are unique
//! within their scope. Values are kept verbatim and typed on access; list
//! values are comma separated.

use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// 1-based position of the value, for error reporting.
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<Entry>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub sections: Vec<Section>,
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { line, column, message: message.into() }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let indent = raw.len() - raw.trim_start().len();
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
                continue;
            }
            let col = |byte: usize| raw[..byte].chars().count() + 1;
            if let Some(rest) = body.strip_prefix('[') {
                let Some(inner) = rest.strip_suffix(']') else {
                    return Err(parse_error(line, col(indent + body.len()), "expected ']' at end of section header"));
                };
                let name = inner.trim();
                if !is_name(name) {
                    return Err(parse_error(line, col(indent + 1), format!("invalid section name {name:?}")));
                }
                if cfg.sections.iter().any(|s| s.name == name) {
                    return Err(parse_error(line, col(indent + 1), format!("duplicate section [{name}]")));
                }
                cfg.sections.push(Section { name: name.to_string(), entries: Vec::new(), line });
                continue;
            }
            let Some(eq) = body.find('=') else {
                return Err(parse_error(line, col(indent), "expected 'key = value', a [section] or a comment"));
            };
            let key = body[..eq].trim();
            if !is_name(key) {
                return Err(parse_error(line, col(indent), format!("invalid key {key:?}")));
            }
            let after = &body[eq + 1..];
            let value = after.trim();
            let value_at = indent + eq + 1 + (after.len() - after.trim_start().len());
            if value.is_empty() {
                return Err(parse_error(line, col(value_at), format!("missing value for {key:?}")));
            }
            let Some(section) = cfg.sections.last_mut() else {
                return Err(parse_error(line, col(indent), "entry outside of any [section]"));
            };
            if section.entries.iter().any(|e| e.key == key) {
                return Err(parse_error(line, col(indent), format!("duplicate key {key:?} in [{}]", section.name)));
            }
            section.entries.push(Entry { key: key.to_string(), value: value.to_string(), line, column: col(value_at) });
        }
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Adds or replaces `section.key`.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        let idx = match self.sections.iter().position(|s| s.name == section) {
            Some(i) => i,
            None => {
                self.sections.push(Section { name: section.to_string(), entries: Vec::new(), line: 0 });
                self.sections.len() - 1
            }
        };
        let s = &mut self.sections[idx];
        match s.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => s.entries.push(Entry { key: key.to_string(), value: value.to_string(), line: 0, column: 0 }),
        }
    }

    pub fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.section(section)?.entries.iter().find(|e| e.key == key)
    }

    pub fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&Entry, CliError> {
        self.entry(section, key).ok_or_else(|| CliError::Config(format!("missing key '{key}' in [{section}]")))
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError> {
        self.entry(section, key).map(|e| e.parse()).transpose()
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn req<T: FromStr>(&self, section: &str, key: &str) -> Result<T, CliError> {
        self.require(section, key)?.parse()
    }

    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.entry(section, key).map(|e| e.parse_list()).transpose()
    }

    pub fn flag(&self, section: &str, key: &str) -> Result<bool, CliError> {
        match self.entry(section, key) {
            None => Ok(false),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                other => Err(e.error(format!("expected a boolean, got {other:?}"))),
            },
        }
    }
}

impl Entry {
    pub fn error(&self, message: impl Into<String>) -> CliError {
        parse_error(self.line, self.column, format!("{}: {}", self.key, message.into()))
    }

    pub fn parse<T: FromStr>(&self) -> Result<T, CliError> {
        self.value.parse().map_err(|_| self.error(format!("cannot parse {:?}", self.value)))
    }

    pub fn parse_list<T: FromStr>(&self) -> Result<Vec<T>, CliError> {
        self.value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| self.error(format!("cannot parse list item {:?}", s.trim()))))
            .collect()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.name)?;
            for e in &s.entries {
                writeln!(f, "{} = {}", e.key, e.value)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_reports_positions() {
        let c = Config::parse("# c\n[model]\nfamily = product\n  f = 1 + y1^2\n\n[sweep]\nhbar = 0.2, 0.1\n").unwrap();
        assert_eq!(c.str("model", "f"), Some("1 + y1^2"));
        assert_eq!(c.list::<f64>("sweep", "hbar").unwrap().unwrap(), vec![0.2, 0.1]);
        let e = c.entry("model", "f").unwrap();
        assert_eq!((e.line, e.column), (4, 7));
        match Config::parse("[a]\nx = 1\n   y 2\n") {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 4)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Config::parse("x = 1"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("[a\n"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("[a]\nx=1\nx=2"), Err(CliError::Parse { line: 3, .. })));
        let bad = Config::parse("[s]\nk = abc\n").unwrap();
        assert!(matches!(bad.req::<f64>("s", "k"), Err(CliError::Parse { line: 2, column: 5, .. })));
    }
}
