use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

/// Known-key lists loaded from a sectioned text table.
#[derive(Debug, Clone, Default)]
pub struct KeyTable {
    sections: BTreeMap<String, BTreeSet<String>>,
}

impl KeyTable {
    pub fn parse(text: &str) -> Self {
        let mut sections: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut current = String::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.to_string();
                continue;
            }
            sections
                .entry(current.clone())
                .or_default()
                .insert(line.to_string());
        }
        Self { sections }
    }

    pub fn contains(&self, section: &str, key: &str) -> bool {
        self.sections
            .get(section)
            .is_some_and(|keys| keys.contains(key))
    }

    pub fn section(&self, section: &str) -> impl Iterator<Item = &str> {
        self.sections
            .get(section)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }
}

pub(crate) static GHA_KEYS: LazyLock<KeyTable> =
    LazyLock::new(|| KeyTable::parse(include_str!("../../data/gha_keys.txt")));

pub(crate) static TRAVIS_KEYS: LazyLock<KeyTable> =
    LazyLock::new(|| KeyTable::parse(include_str!("../../data/travis_keys.txt")));

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let t = KeyTable::parse("# c\n[a]\nx\ny # trailing\n\n[b]\nz\n");
        assert!(t.contains("a", "x"));
        assert!(t.contains("a", "y"));
        assert!(t.contains("b", "z"));
        assert!(!t.contains("b", "x"));
    }

    #[test]
    fn shipped_tables_load() {
        assert!(GHA_KEYS.contains("workflow", "on"));
        assert!(GHA_KEYS.contains("job", "runs-on"));
        assert!(TRAVIS_KEYS.contains("root", "language"));
        assert!(TRAVIS_KEYS.contains("phase", "script"));
        assert_eq!(TRAVIS_KEYS.section("phase").count(), 10);
    }
}
