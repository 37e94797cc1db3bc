//! Flat `key = value` configuration files with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyFile {
    entries: BTreeMap<String, Entry>,
}

impl KeyFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| format!("line {line}: expected 'key = value', found '{content}'"))?;
            let key = key.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(format!("line {line}: invalid key '{key}'"));
            }
            let value = value.trim().to_string();
            if let Some(prev) = entries.insert(key.to_string(), Entry { value, line }) {
                return Err(format!(
                    "line {line}: key '{key}' already set on line {}",
                    prev.line
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses `key` with `parse`, reporting the line and token on failure.
    pub fn parsed<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|msg| {
                format!(
                    "config line {}: invalid value '{}' for '{key}': {msg}",
                    e.line, e.value
                )
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let f = KeyFile::parse("# device\nd12 = 0.05  # coupling\n\n  mode=gated\n").unwrap();
        assert_eq!(f.get("d12").unwrap().value, "0.05");
        assert_eq!(f.get("mode").unwrap().line, 4);
        assert_eq!(f.keys().collect::<Vec<_>>(), ["d12", "mode"]);
    }

    #[test]
    fn rejects_malformed_lines_and_duplicates() {
        assert!(KeyFile::parse("ratio 0.1").unwrap_err().contains("line 1"));
        assert!(KeyFile::parse("a b = 1").is_err());
        let err = KeyFile::parse("points = 3\npoints = 4").unwrap_err();
        assert!(err.contains("line 2") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn typed_lookup_names_the_token() {
        let f = KeyFile::parse("points = many").unwrap();
        let err = f
            .parsed("points", |s| s.parse::<usize>().map_err(|e| e.to_string()))
            .unwrap_err();
        assert!(err.contains("'many'"), "{err}");
        assert_eq!(
            f.parsed("min", |s| s.parse::<f64>().map_err(|e| e.to_string())),
            Ok(None)
        );
    }
}
