//! Canonical block-style YAML emitter.
//!
//! Output rules: LF line endings, trailing newline, two-space indentation,
//! sequences indented under their parent key, empty collections written as
//! `{}` / `[]`, and string scalars quoted only when a plain rendering would be
//! misread (including YAML 1.1 boolean spellings such as `yes` or `on`).

use super::node::{is_yaml11_bool, resolve_plain, Mapping, Scalar, ScalarKind, YamlNode};

const INDENT: usize = 2;

pub fn emit_document(root: &YamlNode) -> String {
    let mut out = String::new();
    match root {
        YamlNode::Mapping(m) if !m.is_empty() => emit_mapping(m, 0, &mut out),
        YamlNode::Sequence(s) if !s.is_empty() => emit_sequence(s, 0, &mut out),
        YamlNode::Mapping(_) => out.push_str("{}\n"),
        YamlNode::Sequence(_) => out.push_str("[]\n"),
        YamlNode::Scalar(s) => {
            out.push_str(&render_scalar(s, 0));
            out.push('\n');
        }
    }
    out
}

fn pad(out: &mut String, indent: usize) {
    out.extend(std::iter::repeat_n(' ', indent));
}

fn emit_mapping(map: &Mapping, indent: usize, out: &mut String) {
    for (key, value) in map {
        pad(out, indent);
        out.push_str(&render_key(key));
        out.push(':');
        emit_value(value, indent, out);
    }
}

fn emit_sequence(items: &[YamlNode], indent: usize, out: &mut String) {
    for item in items {
        pad(out, indent);
        out.push('-');
        match item {
            YamlNode::Mapping(m) if !m.is_empty() => {
                // Compact form: the first entry shares the dash line.
                let mut nested = String::new();
                emit_mapping(m, indent + INDENT, &mut nested);
                out.push(' ');
                out.push_str(&nested[indent + INDENT..]);
            }
            YamlNode::Sequence(s) if !s.is_empty() => {
                let mut nested = String::new();
                emit_sequence(s, indent + INDENT, &mut nested);
                out.push(' ');
                out.push_str(&nested[indent + INDENT..]);
            }
            other => emit_value(other, indent, out),
        }
    }
}

/// Writes whatever follows `key:` or `-`, including the newline.
fn emit_value(value: &YamlNode, indent: usize, out: &mut String) {
    match value {
        YamlNode::Mapping(m) if m.is_empty() => out.push_str(" {}\n"),
        YamlNode::Sequence(s) if s.is_empty() => out.push_str(" []\n"),
        YamlNode::Mapping(m) => {
            out.push('\n');
            emit_mapping(m, indent + INDENT, out);
        }
        YamlNode::Sequence(s) => {
            out.push('\n');
            emit_sequence(s, indent + INDENT, out);
        }
        YamlNode::Scalar(s) => {
            let rendered = render_scalar(s, indent + INDENT);
            if !rendered.is_empty() {
                out.push(' ');
                out.push_str(&rendered);
            }
            out.push('\n');
        }
    }
}

fn render_key(key: &str) -> String {
    if key_needs_quotes(key) {
        double_quote(key)
    } else {
        key.to_string()
    }
}

fn render_scalar(s: &Scalar, content_indent: usize) -> String {
    match s.kind {
        ScalarKind::String => {
            if !needs_quotes(&s.text) {
                s.text.clone()
            } else if let Some(block) = literal_block(&s.text, content_indent) {
                block
            } else {
                double_quote(&s.text)
            }
        }
        // Non-string scalars carry text that already resolves to their kind.
        _ if resolve_plain(&s.text) == s.kind => s.text.clone(),
        ScalarKind::Null => String::new(),
        _ => double_quote(&s.text),
    }
}

fn has_syntax_hazard(text: &str) -> bool {
    let Some(first) = text.chars().next() else {
        return true;
    };
    if text.starts_with(char::is_whitespace) || text.ends_with(char::is_whitespace) {
        return true;
    }
    if matches!(
        first,
        '[' | ']' | '{' | '}' | ',' | '#' | '&' | '*' | '!' | '|' | '>' | '\'' | '"' | '%' | '@' | '`'
    ) {
        return true;
    }
    if matches!(first, '-' | '?' | ':') {
        let second = text.chars().nth(1);
        if second.is_none_or(char::is_whitespace) {
            return true;
        }
    }
    if text.starts_with("---") || text.starts_with("...") {
        return true;
    }
    text.contains(": ")
        || text.contains(" #")
        || text.ends_with(':')
        || text.chars().any(|c| c.is_control())
}

/// Whether a string-kind scalar must be quoted to survive a re-parse as the
/// same string.
pub fn needs_quotes(text: &str) -> bool {
    has_syntax_hazard(text) || resolve_plain(text) != ScalarKind::String || is_yaml11_bool(text)
}

fn key_needs_quotes(key: &str) -> bool {
    key == "<<" || has_syntax_hazard(key) || resolve_plain(key) != ScalarKind::String
}

/// Renders a multi-line string as a literal block when that is lossless.
fn literal_block(text: &str, content_indent: usize) -> Option<String> {
    if !text.contains('\n') || text.starts_with([' ', '\n', '\t']) {
        return None;
    }
    if text
        .chars()
        .any(|c| (c.is_control() && c != '\n' && c != '\t') || c == '\u{feff}')
    {
        return None;
    }
    let body = text.trim_end_matches('\n');
    let trailing = text.len() - body.len();
    // Whitespace-only lines are ambiguous against indentation.
    if body
        .split('\n')
        .any(|line| !line.is_empty() && line.trim().is_empty())
    {
        return None;
    }
    let chomp = match trailing {
        0 => "|-",
        1 => "|",
        _ => "|+",
    };
    let mut out = String::from(chomp);
    for line in body.split('\n') {
        out.push('\n');
        if !line.is_empty() {
            out.extend(std::iter::repeat_n(' ', content_indent));
            out.push_str(line);
        }
    }
    for _ in 1..trailing {
        out.push('\n');
    }
    Some(out)
}

pub fn double_quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c if c.is_control() || c == '\u{feff}' => {
                let cp = c as u32;
                if cp <= 0xff {
                    out.push_str(&format!("\\x{cp:02x}"));
                } else {
                    out.push_str(&format!("\\u{cp:04x}"));
                }
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_rules() {
        assert!(!needs_quotes("java"));
        assert!(!needs_quotes("mvn -B test"));
        assert!(!needs_quotes("actions/checkout@v4"));
        assert!(!needs_quotes("-Xmx2g"));
        assert!(!needs_quotes("${{ matrix.java }}"));
        assert!(needs_quotes("yes"));
        assert!(needs_quotes("on"));
        assert!(needs_quotes("11"));
        assert!(needs_quotes(""));
        assert!(needs_quotes("- item"));
        assert!(needs_quotes("a: b"));
        assert!(needs_quotes("*.jar"));
        assert!(needs_quotes("echo # hi"));
        assert!(needs_quotes("~"));
    }

    #[test]
    fn literal_blocks() {
        assert_eq!(
            literal_block("a\nb\n", 2).as_deref(),
            Some("|\n  a\n  b")
        );
        assert_eq!(literal_block("a\n\nb", 4).as_deref(), Some("|-\n    a\n\n    b"));
        assert_eq!(literal_block(" a\nb", 2), None);
    }

    #[test]
    fn escapes() {
        assert_eq!(double_quote("a\"b\\c\u{1}"), "\"a\\\"b\\\\c\\x01\"");
    }
}
