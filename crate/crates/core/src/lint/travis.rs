use super::keys::TRAVIS_KEYS;
use super::Sink;
use crate::config::{Mapping, ScalarKind, YamlNode, YamlPath};

const REQUIRED_ANY: [&str; 5] = ["language", "script", "install", "jobs", "matrix"];
const OS_VALUES: [&str; 3] = ["linux", "osx", "windows"];

pub(super) fn check(root: &Mapping, sink: &mut Sink) {
    let top = YamlPath::root();

    if !REQUIRED_ANY.iter().any(|k| root.contains_key(*k)) {
        sink.error(
            "TRV001",
            top.clone(),
            "config defines none of language, script, install, jobs, matrix",
        );
    }
    for key in root.keys() {
        if !TRAVIS_KEYS.contains("root", key) {
            sink.warning("TRV002", top.key(key), format!("unknown top-level key `{key}`"));
        }
    }

    check_job_fields(root, &top, sink);

    if let Some(env) = root.get("env") {
        if let Some(global) = env.get("global") {
            check_env_global(global, &top.key("env").key("global"), sink);
        }
    }

    if let Some(dirs) = root.get("cache").and_then(|c| c.get("directories")) {
        let all_strings = dirs
            .as_sequence()
            .is_some_and(|items| items.iter().all(|i| i.as_str().is_some()));
        if !all_strings {
            sink.error(
                "TRV006",
                top.key("cache").key("directories"),
                "`cache.directories` must be a list of strings",
            );
        }
    }

    for section in ["matrix", "jobs"] {
        let Some(matrix) = root.get(section) else {
            continue;
        };
        for list in ["include", "exclude"] {
            let Some(entries) = matrix.get(list) else {
                continue;
            };
            let path = top.key(section).key(list);
            let Some(entries) = entries.as_sequence() else {
                sink.error("TRV007", path, format!("`{section}.{list}` must be a list of mappings"));
                continue;
            };
            for (i, entry) in entries.iter().enumerate() {
                match entry.as_mapping() {
                    Some(job) if list == "include" => check_job_fields(job, &path.index(i), sink),
                    Some(_) => {}
                    None => sink.error(
                        "TRV007",
                        path.index(i),
                        format!("`{section}.{list}` entries must be mappings"),
                    ),
                }
            }
        }
    }
}

/// Rules that apply both at the root and inside `jobs.include` entries.
fn check_job_fields(job: &Mapping, path: &YamlPath, sink: &mut Sink) {
    for phase in TRAVIS_KEYS.section("phase") {
        let Some(value) = job.get(phase) else {
            continue;
        };
        let ok = match value {
            YamlNode::Scalar(s) => s.kind == ScalarKind::String,
            YamlNode::Sequence(items) => items.iter().all(|i| i.as_str().is_some()),
            YamlNode::Mapping(_) => false,
        };
        if !ok {
            sink.error(
                "TRV003",
                path.key(phase),
                format!("`{phase}` must be a string or a list of strings"),
            );
        }
    }

    if let Some(os) = job.get("os") {
        let values = os.string_list().unwrap_or_else(|| vec![String::new()]);
        for value in values {
            if !OS_VALUES.contains(&value.as_str()) {
                sink.error(
                    "TRV005",
                    path.key("os"),
                    format!("unsupported os `{value}` (expected linux, osx or windows)"),
                );
            }
        }
    }
}

fn is_assignment(text: &str) -> bool {
    text.split_once('=')
        .is_some_and(|(name, _)| !name.trim().is_empty())
}

fn check_env_global(global: &YamlNode, path: &YamlPath, sink: &mut Sink) {
    let entries: Vec<&YamlNode> = match global {
        YamlNode::Sequence(items) => items.iter().collect(),
        other => vec![other],
    };
    for (i, entry) in entries.into_iter().enumerate() {
        let ok = match entry {
            YamlNode::Scalar(s) => s.kind == ScalarKind::String && is_assignment(&s.text),
            YamlNode::Mapping(m) => m.len() == 1,
            YamlNode::Sequence(_) => false,
        };
        if !ok {
            let at = if global.as_sequence().is_some() {
                path.index(i)
            } else {
                path.clone()
            };
            sink.error(
                "TRV004",
                at,
                "`env.global` entries must be `NAME=value` strings or single-key mappings",
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::config::{parse_config, CiDialect};
    use crate::lint::{lint_travis, LintReport};

    fn run(src: &str) -> LintReport {
        lint_travis(&parse_config(src.as_bytes(), CiDialect::TravisCI).unwrap()).unwrap()
    }

    fn rules(report: &LintReport) -> Vec<(&'static str, String)> {
        report
            .diagnostics
            .iter()
            .map(|d| (d.rule_id, d.path.to_string()))
            .collect()
    }

    #[test]
    fn minimal_config_passes() {
        let r = run("language: java\nscript: mvn test\n");
        assert!(r.passed);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn bad_os() {
        let r = run("os: solaris\n");
        assert_eq!(
            rules(&r),
            [("TRV001", "$".to_string()), ("TRV005", "os".to_string())]
        );
    }

    #[test]
    fn empty_config() {
        let r = run("{}");
        assert!(!r.passed);
        assert_eq!(rules(&r), [("TRV001", "$".to_string())]);
    }

    #[test]
    fn phases_env_cache_matrix() {
        let src = "language: java\nscript: {a: 1}\ninstall: [true]\nenv:\n  global:\n    - FOO=1\n    - secure: abc\n    - nope\ncache:\n  directories: [~/.m2, 3]\njobs:\n  include:\n    - os: beos\n      script: make\n    - 7\n  exclude: [x]\nwat: 1\n";
        let r = run(src);
        assert_eq!(
            rules(&r),
            [
                ("TRV006", "cache.directories".to_string()),
                ("TRV004", "env.global[2]".to_string()),
                ("TRV003", "install".to_string()),
                ("TRV007", "jobs.exclude[0]".to_string()),
                ("TRV005", "jobs.include[0].os".to_string()),
                ("TRV007", "jobs.include[1]".to_string()),
                ("TRV003", "script".to_string()),
                ("TRV002", "wat".to_string()),
            ]
        );
    }

    #[test]
    fn os_list_values() {
        let r = run("language: java\nos: [linux, osx, windows]\n");
        assert!(r.passed);
    }
}
