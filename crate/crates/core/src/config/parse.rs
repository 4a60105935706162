//! Event-driven YAML loader producing [`YamlNode`] trees.
//!
//! Aliases are expanded in place and `<<` merge keys are applied, so the
//! resulting tree carries no anchor information. Duplicate keys, complex keys
//! and multi-document streams are rejected.

use std::collections::{HashMap, HashSet};

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser, Tag};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use super::node::{resolve_plain, Mapping, Scalar, ScalarKind, YamlNode};
use super::ConfigError;

const MERGE_KEY: &str = "<<";

enum Frame {
    Sequence {
        anchor: usize,
        items: Vec<YamlNode>,
    },
    Mapping {
        anchor: usize,
        entries: Vec<(String, YamlNode)>,
        merges: Vec<YamlNode>,
        pending_key: Option<(String, bool)>,
        seen: HashSet<String>,
    },
}

#[derive(Default)]
struct Loader {
    stack: Vec<Frame>,
    anchors: HashMap<usize, YamlNode>,
    documents: Vec<YamlNode>,
    doc_count: usize,
    // Set while delivering a plain `<<` scalar, the only spelling that merges.
    plain_merge_key: bool,
    error: Option<ConfigError>,
}

fn scalar_from_event(text: String, style: TScalarStyle, tag: Option<&Tag>) -> Scalar {
    let explicit_str = tag.is_some_and(|t| t.suffix == "str");
    let kind = if style != TScalarStyle::Plain || explicit_str {
        ScalarKind::String
    } else {
        resolve_plain(&text)
    };
    Scalar { text, kind }
}

fn syntax_error(message: impl Into<String>, mark: Marker) -> ConfigError {
    ConfigError::YamlSyntax {
        message: message.into(),
        line: mark.line(),
        column: mark.col() + 1,
    }
}

impl Loader {
    fn fail(&mut self, err: ConfigError) {
        if self.error.is_none() {
            self.error = Some(err);
        }
    }

    fn register_anchor(&mut self, anchor: usize, node: &YamlNode) {
        if anchor > 0 {
            self.anchors.insert(anchor, node.clone());
        }
    }

    /// Delivers a completed node to the enclosing collection (or the document).
    fn push_node(&mut self, node: YamlNode, mark: Marker) {
        if let Err(err) = self.try_push_node(node, mark) {
            self.fail(err);
        }
    }

    fn try_push_node(&mut self, node: YamlNode, mark: Marker) -> Result<(), ConfigError> {
        match self.stack.last_mut() {
            None => self.documents.push(node),
            Some(Frame::Sequence { items, .. }) => items.push(node),
            Some(Frame::Mapping {
                entries,
                merges,
                pending_key,
                seen,
                ..
            }) => match pending_key.take() {
                None => {
                    let key = match node {
                        YamlNode::Scalar(s) => s.text,
                        _ => return Err(syntax_error("complex mapping keys are not supported", mark)),
                    };
                    let is_merge = self.plain_merge_key && key == MERGE_KEY;
                    if !is_merge && !seen.insert(key.clone()) {
                        return Err(ConfigError::DuplicateKey {
                            key,
                            line: mark.line(),
                            column: mark.col() + 1,
                        });
                    }
                    *pending_key = Some((key, is_merge));
                }
                Some((_, true)) => merges.push(node),
                Some((key, false)) => entries.push((key, node)),
            },
        }
        Ok(())
    }

    fn finish_mapping(
        &mut self,
        entries: Vec<(String, YamlNode)>,
        merges: Vec<YamlNode>,
        mark: Marker,
    ) -> Option<Mapping> {
        let mut out = Mapping::with_capacity(entries.len());
        for (k, v) in entries {
            out.insert(k, v);
        }
        for source in merges {
            let sources = match source {
                YamlNode::Mapping(m) => vec![m],
                YamlNode::Sequence(items) => {
                    let mut maps = Vec::with_capacity(items.len());
                    for item in items {
                        match item {
                            YamlNode::Mapping(m) => maps.push(m),
                            _ => {
                                self.fail(syntax_error("merge key expects mappings", mark));
                                return None;
                            }
                        }
                    }
                    maps
                }
                _ => {
                    self.fail(syntax_error("merge key expects a mapping", mark));
                    return None;
                }
            };
            for m in sources {
                for (k, v) in m {
                    out.entry(k).or_insert(v);
                }
            }
        }
        Some(out)
    }
}

impl MarkedEventReceiver for Loader {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        if self.error.is_some() {
            return;
        }
        match ev {
            Event::DocumentStart => self.doc_count += 1,
            Event::Scalar(text, style, anchor, tag) => {
                self.plain_merge_key = style == TScalarStyle::Plain && text == MERGE_KEY;
                let node = YamlNode::Scalar(scalar_from_event(text, style, tag.as_ref()));
                self.register_anchor(anchor, &node);
                self.push_node(node, mark);
                self.plain_merge_key = false;
            }
            Event::Alias(id) => match self.anchors.get(&id) {
                Some(node) => {
                    let node = node.clone();
                    self.push_node(node, mark);
                }
                None => self.fail(syntax_error("unknown anchor", mark)),
            },
            Event::SequenceStart(anchor, _) => self.stack.push(Frame::Sequence {
                anchor,
                items: Vec::new(),
            }),
            Event::MappingStart(anchor, _) => {
                if let Some(Frame::Mapping {
                    pending_key: None, ..
                }) = self.stack.last()
                {
                    self.fail(syntax_error("complex mapping keys are not supported", mark));
                    return;
                }
                self.stack.push(Frame::Mapping {
                    anchor,
                    entries: Vec::new(),
                    merges: Vec::new(),
                    pending_key: None,
                    seen: HashSet::new(),
                })
            }
            Event::SequenceEnd => {
                if let Some(Frame::Sequence { anchor, items }) = self.stack.pop() {
                    let node = YamlNode::Sequence(items);
                    self.register_anchor(anchor, &node);
                    self.push_node(node, mark);
                }
            }
            Event::MappingEnd => {
                if let Some(Frame::Mapping {
                    anchor,
                    entries,
                    merges,
                    ..
                }) = self.stack.pop()
                {
                    if let Some(map) = self.finish_mapping(entries, merges, mark) {
                        let node = YamlNode::Mapping(map);
                        self.register_anchor(anchor, &node);
                        self.push_node(node, mark);
                    }
                }
            }
            Event::StreamStart | Event::StreamEnd | Event::DocumentEnd | Event::Nothing => {}
        }
    }
}

/// Parses a single-document YAML text into a node tree.
pub fn parse_yaml(text: &str) -> Result<YamlNode, ConfigError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut loader = Loader::default();
    let mut parser = Parser::new_from_str(text);
    parser
        .load(&mut loader, true)
        .map_err(|e| syntax_error(e.info().to_string(), *e.marker()))?;
    if let Some(err) = loader.error {
        return Err(err);
    }
    if loader.doc_count > 1 {
        return Err(ConfigError::MultiDoc(loader.doc_count));
    }
    match loader.documents.pop() {
        Some(doc) => Ok(doc),
        None => Err(ConfigError::RootNotMapping("empty document")),
    }
}
