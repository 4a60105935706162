//! In-memory YAML node tree shared by both CI dialects.

use std::fmt;
use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;

/// Resolved kind of a scalar, following the YAML 1.2 core schema for plain
/// scalars. Quoted and block scalars are always strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    String,
    Int,
    Float,
    Bool,
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    pub text: String,
    pub kind: ScalarKind,
}

impl Scalar {
    pub fn new(text: impl Into<String>, kind: ScalarKind) -> Self {
        Self {
            text: text.into(),
            kind,
        }
    }

    /// Builds a scalar the way a plain (unquoted) occurrence of `text` would
    /// resolve.
    pub fn plain(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = resolve_plain(&text);
        Self { text, kind }
    }

    pub fn is_null(&self) -> bool {
        self.kind == ScalarKind::Null
    }
}

/// Ordered mapping; iteration order is source order.
pub type Mapping = IndexMap<String, YamlNode>;

#[derive(Debug, Clone)]
pub enum YamlNode {
    Mapping(Mapping),
    Sequence(Vec<YamlNode>),
    Scalar(Scalar),
}

// Mapping equality is order-sensitive: two documents with the same keys in a
// different order are different documents.
impl PartialEq for YamlNode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (YamlNode::Mapping(a), YamlNode::Mapping(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x == y)
            }
            (YamlNode::Sequence(a), YamlNode::Sequence(b)) => a == b,
            (YamlNode::Scalar(a), YamlNode::Scalar(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for YamlNode {}

impl YamlNode {
    pub fn string(text: impl Into<String>) -> Self {
        YamlNode::Scalar(Scalar::new(text, ScalarKind::String))
    }

    pub fn int(value: i64) -> Self {
        YamlNode::Scalar(Scalar::new(value.to_string(), ScalarKind::Int))
    }

    pub fn bool(value: bool) -> Self {
        YamlNode::Scalar(Scalar::new(value.to_string(), ScalarKind::Bool))
    }

    pub fn null() -> Self {
        YamlNode::Scalar(Scalar::new("", ScalarKind::Null))
    }

    pub fn empty_mapping() -> Self {
        YamlNode::Mapping(Mapping::new())
    }

    pub fn seq_of_strings<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        YamlNode::Sequence(items.into_iter().map(YamlNode::string).collect())
    }

    pub fn as_mapping(&self) -> Option<&Mapping> {
        match self {
            YamlNode::Mapping(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_mapping_mut(&mut self) -> Option<&mut Mapping> {
        match self {
            YamlNode::Mapping(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[YamlNode]> {
        match self {
            YamlNode::Sequence(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            YamlNode::Scalar(s) => Some(s),
            _ => None,
        }
    }

    /// Text of a non-null scalar of any kind.
    pub fn scalar_text(&self) -> Option<&str> {
        match self {
            YamlNode::Scalar(s) if !s.is_null() => Some(&s.text),
            _ => None,
        }
    }

    /// Text of a scalar with string kind.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            YamlNode::Scalar(s) if s.kind == ScalarKind::String => Some(&s.text),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            YamlNode::Scalar(s) if s.kind == ScalarKind::Bool => {
                Some(s.text.eq_ignore_ascii_case("true"))
            }
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, YamlNode::Scalar(s) if s.is_null())
    }

    pub fn get(&self, key: &str) -> Option<&YamlNode> {
        self.as_mapping().and_then(|m| m.get(key))
    }

    /// Follows a dotted path of mapping keys.
    pub fn lookup(&self, dotted: &str) -> Option<&YamlNode> {
        dotted.split('.').try_fold(self, |node, key| node.get(key))
    }

    /// A scalar or a sequence of scalars, flattened to their texts.
    /// Returns `None` for anything else (mappings, nested sequences).
    pub fn string_list(&self) -> Option<Vec<String>> {
        match self {
            YamlNode::Scalar(s) if !s.is_null() => Some(vec![s.text.clone()]),
            YamlNode::Sequence(items) => items
                .iter()
                .map(|i| i.scalar_text().map(str::to_string))
                .collect(),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            YamlNode::Mapping(_) => "mapping",
            YamlNode::Sequence(_) => "sequence",
            YamlNode::Scalar(s) => match s.kind {
                ScalarKind::String => "string",
                ScalarKind::Int => "int",
                ScalarKind::Float => "float",
                ScalarKind::Bool => "bool",
                ScalarKind::Null => "null",
            },
        }
    }
}

impl From<Mapping> for YamlNode {
    fn from(m: Mapping) -> Self {
        YamlNode::Mapping(m)
    }
}

impl From<&str> for YamlNode {
    fn from(s: &str) -> Self {
        YamlNode::string(s)
    }
}

impl From<String> for YamlNode {
    fn from(s: String) -> Self {
        YamlNode::string(s)
    }
}

static INT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-+]?[0-9]+|0o[0-7]+|0x[0-9a-fA-F]+)$").unwrap());
static FLOAT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:[-+]?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?)(?:[eE][-+]?[0-9]+)?|[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$",
    )
    .unwrap()
});

/// Resolves the kind of a plain scalar under the YAML 1.2 core schema.
pub fn resolve_plain(text: &str) -> ScalarKind {
    match text {
        "" | "~" | "null" | "Null" | "NULL" => ScalarKind::Null,
        "true" | "True" | "TRUE" | "false" | "False" | "FALSE" => ScalarKind::Bool,
        _ if INT_RE.is_match(text) => ScalarKind::Int,
        _ if FLOAT_RE.is_match(text) => ScalarKind::Float,
        _ => ScalarKind::String,
    }
}

/// YAML 1.1 boolean spellings. Strings spelled like this are always quoted on
/// output so that 1.1-era tooling does not coerce them.
pub fn is_yaml11_bool(text: &str) -> bool {
    matches!(
        text,
        "y" | "Y"
            | "yes"
            | "Yes"
            | "YES"
            | "n"
            | "N"
            | "no"
            | "No"
            | "NO"
            | "on"
            | "On"
            | "ON"
            | "off"
            | "Off"
            | "OFF"
    )
}

/// Address of a node inside a document, rendered as `jobs.build.steps[2]`.
/// The root renders as `$`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YamlPath(Vec<PathSegment>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathSegment {
    Key(String),
    Index(usize),
}

impl YamlPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn key(&self, key: impl Into<String>) -> Self {
        let mut next = self.clone();
        next.0.push(PathSegment::Key(key.into()));
        next
    }

    pub fn index(&self, index: usize) -> Self {
        let mut next = self.clone();
        next.0.push(PathSegment::Index(index));
        next
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.0
    }

    pub fn starts_with(&self, prefix: &YamlPath) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Resolves the path against a document.
    pub fn resolve<'a>(&self, root: &'a YamlNode) -> Option<&'a YamlNode> {
        self.0.iter().try_fold(root, |node, seg| match seg {
            PathSegment::Key(k) => node.get(k),
            PathSegment::Index(i) => node.as_sequence().and_then(|s| s.get(*i)),
        })
    }
}

impl fmt::Display for YamlPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("$");
        }
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                PathSegment::Key(k) if i == 0 => write!(f, "{k}")?,
                PathSegment::Key(k) => write!(f, ".{k}")?,
                PathSegment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

impl From<&str> for YamlPath {
    fn from(dotted: &str) -> Self {
        YamlPath(
            dotted
                .split('.')
                .map(|k| PathSegment::Key(k.to_string()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_resolution() {
        assert_eq!(resolve_plain("java"), ScalarKind::String);
        assert_eq!(resolve_plain("11"), ScalarKind::Int);
        assert_eq!(resolve_plain("3.10"), ScalarKind::Float);
        assert_eq!(resolve_plain("~"), ScalarKind::Null);
        assert_eq!(resolve_plain(""), ScalarKind::Null);
        assert_eq!(resolve_plain("True"), ScalarKind::Bool);
        assert_eq!(resolve_plain("yes"), ScalarKind::String);
        assert_eq!(resolve_plain("on"), ScalarKind::String);
        assert_eq!(resolve_plain(".inf"), ScalarKind::Float);
        assert_eq!(resolve_plain("1.2.3"), ScalarKind::String);
    }

    #[test]
    fn mapping_equality_is_ordered() {
        let mut a = Mapping::new();
        a.insert("x".into(), YamlNode::int(1));
        a.insert("y".into(), YamlNode::int(2));
        let mut b = Mapping::new();
        b.insert("y".into(), YamlNode::int(2));
        b.insert("x".into(), YamlNode::int(1));
        assert_ne!(YamlNode::Mapping(a.clone()), YamlNode::Mapping(b));
        assert_eq!(YamlNode::Mapping(a.clone()), YamlNode::Mapping(a));
    }

    #[test]
    fn path_display() {
        let p = YamlPath::root().key("jobs").key("b").key("steps").index(2);
        assert_eq!(p.to_string(), "jobs.b.steps[2]");
        assert_eq!(YamlPath::root().to_string(), "$");
        assert_eq!(YamlPath::from("env.global").to_string(), "env.global");
    }
}
