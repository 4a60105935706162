//! Property tests for the rule-based translator over generated configs.

use std::collections::BTreeSet;

use cigrate_core::config::{parse_config, serialize_config, CiDialect, RawConfig, YamlNode};
use cigrate_core::lint::lint;
use cigrate_core::normalize::{normalize, NormalizedConfig};
use cigrate_core::synth::{gha_config, travis_config};
use cigrate_core::translate::{
    lower_gha_to_ir, lower_travis_to_ir, migrate_rules, parse_assignments, raise_ir_to_gha,
    MigrationWarning, TranslateError,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn travis(seed: u64) -> RawConfig {
    let doc = travis_config(&mut ChaCha8Rng::seed_from_u64(seed));
    RawConfig::from_document(CiDialect::TravisCI, doc).unwrap()
}

fn gha(seed: u64) -> RawConfig {
    let doc = gha_config(&mut ChaCha8Rng::seed_from_u64(seed));
    RawConfig::from_document(CiDialect::GitHubActions, doc).unwrap()
}

/// Re-reads emitted output through the byte-level parser, as a user would.
fn reparse(output: &NormalizedConfig) -> RawConfig {
    parse_config(output.to_yaml().as_bytes(), output.dialect).expect("output parses")
}

fn assert_lint_clean(config: &RawConfig) -> Result<(), TestCaseError> {
    let report = lint(config);
    prop_assert!(
        report.passed,
        "{:?}\n{}",
        report.errors().collect::<Vec<_>>(),
        String::from_utf8_lossy(&serialize_config(config))
    );
    Ok(())
}

/// Every leaf of a document (scalars and empty collections) with its path.
fn leaves(node: &YamlNode, path: String, out: &mut Vec<(String, YamlNode)>) {
    match node {
        YamlNode::Mapping(m) if !m.is_empty() => {
            for (k, v) in m {
                let next = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                leaves(v, next, out);
            }
        }
        YamlNode::Sequence(s) if !s.is_empty() => {
            for (i, v) in s.iter().enumerate() {
                leaves(v, format!("{path}[{i}]"), out);
            }
        }
        other => out.push((path, other.clone())),
    }
}

/// Keys, scalar texts and whitespace-separated words of a document.
struct Atoms {
    atoms: BTreeSet<String>,
    texts: Vec<String>,
}

impl Atoms {
    fn of(node: &YamlNode) -> Self {
        let mut atoms = BTreeSet::new();
        let mut texts = Vec::new();
        fn walk(node: &YamlNode, atoms: &mut BTreeSet<String>, texts: &mut Vec<String>) {
            match node {
                YamlNode::Mapping(m) => {
                    for (k, v) in m {
                        atoms.insert(k.clone());
                        walk(v, atoms, texts);
                    }
                }
                YamlNode::Sequence(s) => s.iter().for_each(|v| walk(v, atoms, texts)),
                YamlNode::Scalar(s) => {
                    atoms.insert(s.text.clone());
                    atoms.extend(s.text.split_whitespace().map(str::to_string));
                    for (k, v) in parse_assignments(&s.text).unwrap_or_default() {
                        atoms.insert(k);
                        atoms.insert(v);
                    }
                    texts.push(s.text.clone());
                }
            }
        }
        walk(node, &mut atoms, &mut texts);
        Self { atoms, texts }
    }

    fn carries(&self, text: &str) -> bool {
        text.is_empty()
            || self.atoms.contains(text)
            || (text.len() >= 4 && self.texts.iter().any(|t| t.contains(text)))
    }
}

/// Independent fate table: how a source leaf may legitimately reappear in
/// the target dialect without being copied verbatim.
fn carried(dialect: CiDialect, path: &str, leaf: &YamlNode, out: &Atoms, reassigned: &BTreeSet<String>) -> bool {
    let generic = path_pattern(path);
    let Some(text) = leaf.scalar_text() else {
        // Empty collections carry no content of their own.
        return true;
    };
    if out.carries(text) {
        return true;
    }
    // Newline-joined lists (cache paths) split into one item per line.
    if text.contains('\n') && text.lines().all(|line| out.carries(line)) {
        return true;
    }
    if let Some(assignments) = parse_assignments(text) {
        // A later assignment to the same name legitimately replaces the value.
        if assignments
            .iter()
            .all(|(k, v)| out.carries(k) && (out.carries(v) || reassigned.contains(k)))
        {
            return true;
        }
    }
    // An `env` mapping entry replaced by a closer-scoped one of the same name.
    if env_entry_name(path).is_some_and(|k| out.carries(k) && reassigned.contains(k)) {
        return true;
    }
    match dialect {
        CiDialect::TravisCI => {
            let last = generic.rsplit('.').next().unwrap_or("");
            let structural = generic == "language"
                || generic.starts_with("stages")
                || last == "stage"
                || last == "name"
                || last == "allow_failure"
                || generic.contains("allow_failures")
                || generic.contains("exclude");
            let runner = matches!(last, "os" | "os[*]")
                && match text {
                    "linux" => out.carries("ubuntu-latest") || out.texts.iter().any(|t| t.contains("ubuntu")),
                    "osx" => out.texts.iter().any(|t| t.contains("macos")),
                    "windows" => out.texts.iter().any(|t| t.contains("windows")),
                    _ => false,
                };
            let version = text
                .strip_prefix("openjdk")
                .or_else(|| text.strip_prefix("oraclejdk"))
                .is_some_and(|v| out.carries(v));
            structural || runner || version
        }
        CiDialect::GitHubActions => {
            let condition = generic.ends_with(".if")
                && ["success()", "failure()", "always()"].iter().any(|c| text.contains(c));
            let apt_marker = generic.ends_with(".name") && text == "Install apt packages";
            let apt_packages = text
                .strip_prefix("sudo apt-get update && sudo apt-get install -y ")
                .is_some_and(|pkgs| pkgs.split_whitespace().all(|p| out.carries(p)));
            let structural = condition
                || apt_marker
                || apt_packages
                || generic == "on"
                || generic.starts_with("on[")
                || generic.starts_with("on.push")
                || generic.starts_with("on.pull_request")
                || generic.ends_with(".needs[*]")
                || generic.ends_with(".continue-on-error")
                || generic.contains(".strategy.matrix.")
                || text.starts_with("${{ matrix.");
            let known_action = generic.ends_with(".uses")
                && ["actions/checkout@", "actions/setup-", "actions/cache@", "dtolnay/rust-toolchain@"]
                    .iter()
                    .any(|p| text.starts_with(p));
            let runner = generic.ends_with(".runs-on")
                && [("ubuntu-", "linux"), ("macos-", "osx"), ("windows-", "windows")]
                    .iter()
                    .any(|(prefix, os)| text.starts_with(prefix) && out.carries(os));
            let jdk = ["openjdk", "oraclejdk"].iter().any(|p| out.carries(&format!("{p}{text}")));
            structural || known_action || runner || jdk
        }
    }
}

/// `K` for a path ending in `env.K`.
fn env_entry_name(path: &str) -> Option<&str> {
    let (parent, name) = path.rsplit_once('.')?;
    (parent == "env" || parent.ends_with(".env")).then_some(name)
}

/// `jobs.include[3].os` -> `jobs.include[*].os`; job ids in GHA become `*`.
fn path_pattern(path: &str) -> String {
    let mut out = String::new();
    let mut in_index = false;
    for c in path.chars() {
        match c {
            '[' => {
                in_index = true;
                out.push_str("[*");
            }
            ']' => {
                in_index = false;
                out.push(']');
            }
            _ if in_index => {}
            _ => out.push(c),
        }
    }
    out
}

fn covers(warning: &str, path: &str) -> bool {
    path == warning
        || path.strip_prefix(warning).is_some_and(|rest| rest.starts_with('.') || rest.starts_with('['))
}

/// Audits warnings against a key-diff of source and output.
fn audit(source: &NormalizedConfig, output: &NormalizedConfig, warnings: &[MigrationWarning]) -> Result<(), TestCaseError> {
    let mut seen = BTreeSet::new();
    for w in warnings {
        prop_assert!(seen.insert(w.path.clone()), "duplicate warning path {}", w.path);
    }
    for a in warnings {
        for b in warnings {
            prop_assert!(
                a.path == b.path || !covers(&a.path, &b.path),
                "nested warnings {} and {}",
                a.path,
                b.path
            );
        }
    }
    let mut source_leaves = Vec::new();
    leaves(&source.document, String::new(), &mut source_leaves);
    for w in warnings {
        prop_assert!(
            source_leaves.iter().any(|(p, _)| covers(&w.path, p)),
            "warning {} points at no source key",
            w
        );
    }
    let atoms = Atoms::of(&output.document);
    let mut names = BTreeSet::new();
    let mut reassigned = BTreeSet::new();
    for (path, leaf) in &source_leaves {
        let mapped = env_entry_name(path).map(str::to_string);
        let assigned = leaf.scalar_text().and_then(parse_assignments).into_iter().flat_map(|a| a.into_keys());
        for name in mapped.into_iter().chain(assigned) {
            if !names.insert(name.clone()) {
                reassigned.insert(name);
            }
        }
    }
    for (path, leaf) in &source_leaves {
        let covering = warnings.iter().filter(|w| covers(&w.path, path)).count();
        prop_assert!(covering <= 1, "{path} covered by {covering} warnings");
        if covering == 0 {
            prop_assert!(
                carried(source.dialect, path, leaf, &atoms, &reassigned),
                "{path} = {:?} vanished without a warning\n--- source\n{}--- output\n{}",
                leaf,
                source.to_yaml(),
                output.to_yaml()
            );
        }
    }
    Ok(())
}

fn commands_of(ir: &cigrate_core::translate::PipelineIR) -> Vec<String> {
    ir.commands().into_iter().map(str::to_string).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn travis_to_gha_output_lints_clean(seed in any::<u64>()) {
        let result = migrate_rules(&travis(seed), CiDialect::GitHubActions).unwrap();
        assert_lint_clean(&reparse(&result.output))?;
    }

    #[test]
    fn gha_to_travis_output_lints_clean(seed in any::<u64>()) {
        match migrate_rules(&gha(seed), CiDialect::TravisCI) {
            Ok(result) => assert_lint_clean(&reparse(&result.output))?,
            Err(TranslateError::EmptyPipeline(_)) => {
                let ir = lower_gha_to_ir(&normalize(&gha(seed)));
                prop_assert!(ir.map_or(true, |ir| ir.commands().is_empty()));
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn lowered_pipelines_are_valid(seed in any::<u64>()) {
        let ir = lower_travis_to_ir(&normalize(&travis(seed))).unwrap();
        prop_assert_eq!(ir.validate(), Ok(()));
        if let Ok(ir) = lower_gha_to_ir(&normalize(&gha(seed))) {
            prop_assert_eq!(ir.validate(), Ok(()));
        }
    }

    #[test]
    fn run_commands_survive_travis_gha_round_trip(seed in any::<u64>()) {
        let first = lower_travis_to_ir(&normalize(&travis(seed))).unwrap();
        let workflow = reparse(&raise_ir_to_gha(&first));
        let second = lower_gha_to_ir(&normalize(&workflow)).unwrap();
        prop_assert_eq!(commands_of(&first), commands_of(&second));
    }

    #[test]
    fn travis_warnings_account_for_every_dropped_key(seed in any::<u64>()) {
        let source = travis(seed);
        let result = migrate_rules(&source, CiDialect::GitHubActions).unwrap();
        audit(&normalize(&source), &result.output, &result.warnings)?;
    }

    #[test]
    fn gha_warnings_account_for_every_dropped_key(seed in any::<u64>()) {
        let source = gha(seed);
        if let Ok(result) = migrate_rules(&source, CiDialect::TravisCI) {
            audit(&normalize(&source), &result.output, &result.warnings)?;
        }
    }

    #[test]
    fn migration_is_deterministic(seed in any::<u64>()) {
        for source in [travis(seed), gha(seed)] {
            let target = source.dialect.other();
            let a = migrate_rules(&source, target);
            let b = migrate_rules(&source.clone(), target);
            prop_assert_eq!(&a, &b);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert_eq!(a.output.to_yaml(), b.output.to_yaml());
            }
        }
    }
}
