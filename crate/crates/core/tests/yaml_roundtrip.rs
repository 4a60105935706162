use cigrate_core::config::{
    parse_config, serialize_config, serialize_node, CiDialect, Mapping, RawConfig, Scalar,
    ScalarKind, YamlNode,
};
use proptest::prelude::*;

fn scalar_strategy() -> impl Strategy<Value = YamlNode> {
    prop_oneof![
        // Arbitrary text, including quotes, colons, hashes, newlines and control chars.
        "[ -~\\n\\t\u{e9}\u{4e2d}\u{1}]{0,24}".prop_map(YamlNode::string),
        "[a-z][a-z0-9_./-]{0,10}".prop_map(YamlNode::string),
        prop_oneof![Just("yes"), Just("on"), Just("No"), Just("null"), Just("~"), Just("3.10"), Just("true")]
            .prop_map(YamlNode::string),
        any::<i32>().prop_map(|v| YamlNode::int(v as i64)),
        any::<bool>().prop_map(YamlNode::bool),
        Just(YamlNode::null()),
        Just(YamlNode::Scalar(Scalar::new("~", ScalarKind::Null))),
        Just(YamlNode::Scalar(Scalar::new("2.5", ScalarKind::Float))),
    ]
}

fn node_strategy() -> impl Strategy<Value = YamlNode> {
    scalar_strategy().prop_recursive(4, 48, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..5).prop_map(YamlNode::Sequence),
            prop::collection::vec(("[ -~]{0,8}", inner), 0..5).prop_map(|entries| {
                let mut m = Mapping::new();
                for (k, v) in entries {
                    m.insert(k, v);
                }
                YamlNode::Mapping(m)
            }),
        ]
    })
}

fn document_strategy() -> impl Strategy<Value = YamlNode> {
    prop::collection::vec(("[a-z_-]{1,8}", node_strategy()), 0..6).prop_map(|entries| {
        let mut m = Mapping::new();
        for (k, v) in entries {
            m.insert(k, v);
        }
        YamlNode::Mapping(m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_after_serialize_is_identity(doc in document_strategy()) {
        let config = RawConfig::from_document(CiDialect::TravisCI, doc).unwrap();
        let bytes = serialize_config(&config);
        let text = String::from_utf8(bytes.clone()).unwrap();
        let reparsed = parse_config(&bytes, CiDialect::TravisCI)
            .unwrap_or_else(|e| panic!("{e}\n---\n{text}"));
        prop_assert_eq!(&reparsed.document, &config.document, "\n{}", text);
        prop_assert!(text.ends_with('\n'));
        prop_assert!(!text.contains('\r'));
        // Deterministic.
        prop_assert_eq!(serialize_config(&config), bytes);
        // Canonical text is a fixed point.
        prop_assert_eq!(serialize_node(&reparsed.document), text);
    }
}
