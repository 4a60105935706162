//! Grammar-based generators of random Travis CI and GitHub Actions configs,
//! plus alternative renderings of a document, for property testing.
//!
//! Generated configs cover the inputs the rule translator understands and a
//! selection of keys it must report as untranslatable. Every generated
//! config passes its dialect's linter.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{double_quote, Mapping, Scalar, ScalarKind, YamlNode};

/// Shell commands with YAML-hostile characters mixed in.
const COMMANDS: &[&str] = &[
    "mvn test",
    "mvn -B verify",
    "./gradlew check --info",
    "make",
    "make -j4 all",
    "npm ci",
    "npm test",
    "pytest -k 'not slow'",
    "go test ./...",
    "cargo test --all",
    "echo \"hello world\"",
    "echo '#not a comment'",
    "cat build.log: done",
    "- leading dash",
    "true",
    "yes",
    "123",
    "null",
    "export PATH=${HOME}/bin:$PATH",
    "echo ${{ github.sha }}",
    "cmd1 && cmd2 | tee out.txt",
    "set -e\n./configure\nmake install",
    "python -c \"print('x')\"",
    "[ -f x ] || exit 1",
    "{ echo a; }",
    "ls *.jar",
    "echo 'tab\there'",
];

const DIRECTORIES: &[&str] = &["~/.m2", "$HOME/.cache/pip", "node_modules", "~/.gradle/caches", "vendor/bundle"];
const PACKAGES: &[&str] = &["graphviz", "libxml2-dev", "gcc-multilib", "libssl-dev", "cmake"];
const ENV_NAMES: &[&str] = &["CI", "DB", "MODE", "JAVA_OPTS", "TOXENV", "FLAGS"];
const ENV_VALUES: &[&str] = &["true", "postgres", "fast", "-Xmx1g -Xms256m", "py38", "", "a'b", "x=y"];
const BRANCHES: &[&str] = &["main", "master", "develop", "release/**", "feature/*", "v1.x"];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap()
}

fn pick_some<'a, R: Rng>(rng: &mut R, items: &[&'a str], max: usize) -> Vec<&'a str> {
    let n = rng.gen_range(1..=max.min(items.len()));
    items.choose_multiple(rng, n).copied().collect()
}

fn s(text: &str) -> YamlNode {
    YamlNode::string(text)
}

fn strings(items: &[&str]) -> YamlNode {
    YamlNode::seq_of_strings(items.iter().copied())
}

fn map(entries: Vec<(&str, YamlNode)>) -> YamlNode {
    YamlNode::Mapping(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn command<R: Rng>(rng: &mut R) -> YamlNode {
    s(pick(rng, COMMANDS))
}

fn commands<R: Rng>(rng: &mut R) -> YamlNode {
    if rng.gen_bool(0.4) {
        s(pick(rng, COMMANDS))
    } else {
        let n = rng.gen_range(1..=3);
        YamlNode::Sequence((0..n).map(|_| command(rng)).collect())
    }
}

fn assignment<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(1..=2);
    pick_some(rng, ENV_NAMES, n)
        .into_iter()
        .map(|name| {
            let value = pick(rng, ENV_VALUES);
            if value.is_empty() || value.contains([' ', '\'']) {
                format!("{name}=\"{value}\"")
            } else {
                format!("{name}={value}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn versions(language: &str) -> &'static [&'static str] {
    match language {
        "java" => &["openjdk8", "openjdk11", "openjdk17", "oraclejdk11"],
        "node_js" => &["12", "14", "lts/*", "node"],
        "python" => &["3.8", "3.9", "3.10", "pypy3"],
        "go" => &["1.20", "1.21.x", "stable"],
        "rust" => &["stable", "beta", "nightly", "1.70.0"],
        _ => &[],
    }
}

fn version_key(language: &str) -> Option<&'static str> {
    match language {
        "java" => Some("jdk"),
        "node_js" => Some("node_js"),
        "python" => Some("python"),
        "go" => Some("go"),
        "rust" => Some("rust"),
        _ => None,
    }
}

/// A version value; numeric-looking versions are sometimes left unquoted.
fn version_value<R: Rng>(rng: &mut R, text: &str) -> YamlNode {
    if rng.gen_bool(0.3) {
        YamlNode::Scalar(Scalar::plain(text))
    } else {
        s(text)
    }
}

fn travis_env<R: Rng>(rng: &mut R) -> YamlNode {
    match rng.gen_range(0..4) {
        0 => s(&assignment(rng)),
        1 => {
            let n = rng.gen_range(1..=3);
            YamlNode::Sequence((0..n).map(|_| s(&assignment(rng))).collect())
        }
        _ => {
            let mut env = Mapping::new();
            let mut global: Vec<YamlNode> = (0..rng.gen_range(1..=2)).map(|_| s(&assignment(rng))).collect();
            if rng.gen_bool(0.3) {
                global.push(map(vec![("secure", s("c2VjcmV0"))]));
            }
            env.insert("global".into(), YamlNode::Sequence(global));
            if rng.gen_bool(0.5) {
                let n = rng.gen_range(1..=3);
                env.insert("jobs".into(), YamlNode::Sequence((0..n).map(|_| s(&assignment(rng))).collect()));
            }
            YamlNode::Mapping(env)
        }
    }
}

fn travis_os<R: Rng>(rng: &mut R) -> YamlNode {
    let all = ["linux", "osx", "windows"];
    if rng.gen_bool(0.5) {
        s(pick(rng, &all))
    } else {
        strings(&pick_some(rng, &all, 3))
    }
}

/// Fields a job-defining `jobs.include` entry may set.
fn travis_job_entry<R: Rng>(rng: &mut R, language: &str, stage_names: &[&str], uses_stages: bool) -> Mapping {
    let mut entry = Mapping::new();
    if uses_stages && rng.gen_bool(0.7) {
        entry.insert("stage".into(), s(pick(rng, stage_names)));
    }
    if rng.gen_bool(0.6) {
        entry.insert("name".into(), s(pick(rng, &["Unit tests", "lint", "Integration (JDK 17)", "docs", "2nd pass"])));
    }
    if let Some(key) = version_key(language) {
        if rng.gen_bool(0.3) {
            let v = pick(rng, versions(language));
            entry.insert(key.into(), version_value(rng, v));
        }
    }
    if rng.gen_bool(0.2) {
        entry.insert("os".into(), s(pick(rng, &["linux", "osx"])));
    }
    if rng.gen_bool(0.3) {
        entry.insert("env".into(), s(&assignment(rng)));
    }
    if rng.gen_bool(0.2) {
        entry.insert("install".into(), commands(rng));
    }
    entry.insert("script".into(), commands(rng));
    if rng.gen_bool(0.1) {
        entry.insert("deploy".into(), map(vec![("provider", s("pages"))]));
    }
    if rng.gen_bool(0.1) {
        entry.insert("if".into(), s("branch = main"));
    }
    entry
}

/// A random Travis CI config that passes the Travis linter.
pub fn travis_config<R: Rng>(rng: &mut R) -> YamlNode {
    let mut root = Mapping::new();
    let language = pick(rng, &["java", "java", "node_js", "python", "go", "rust", "c", "generic", "ruby", ""]);
    if !language.is_empty() {
        root.insert("language".into(), s(language));
    }
    if let Some(key) = version_key(language) {
        if rng.gen_bool(0.8) {
            let pool = versions(language);
            let value = if rng.gen_bool(0.5) {
                let v = pick(rng, pool);
                version_value(rng, v)
            } else {
                YamlNode::Sequence(pick_some(rng, pool, 3).into_iter().map(|v| version_value(rng, v)).collect())
            };
            root.insert(key.into(), value);
        }
    }
    if rng.gen_bool(0.05) {
        root.insert("node_js".into(), s("14"));
    }
    if rng.gen_bool(0.4) {
        root.insert("os".into(), travis_os(rng));
    }
    if rng.gen_bool(0.2) {
        root.insert("dist".into(), s(pick(rng, &["xenial", "bionic", "focal", "jammy"])));
    }
    if rng.gen_bool(0.1) {
        root.insert("sudo".into(), s("required"));
    }
    if rng.gen_bool(0.05) {
        root.insert("arch".into(), s("arm64"));
    }
    if rng.gen_bool(0.5) {
        root.insert("env".into(), travis_env(rng));
    }
    if rng.gen_bool(0.3) {
        let cache = match rng.gen_range(0..4) {
            0 => s(pick(rng, &["maven", "pip", "npm"])),
            1 => YamlNode::bool(false),
            2 => map(vec![("directories", strings(&pick_some(rng, DIRECTORIES, 2))), ("pip", YamlNode::bool(true))]),
            _ => map(vec![("directories", strings(&pick_some(rng, DIRECTORIES, 3)))]),
        };
        root.insert("cache".into(), cache);
    }
    if rng.gen_bool(0.25) {
        let mut addons = Mapping::new();
        let mut apt = Mapping::new();
        apt.insert("packages".into(), strings(&pick_some(rng, PACKAGES, 3)));
        if rng.gen_bool(0.2) {
            apt.insert("sources".into(), strings(&["ubuntu-toolchain-r-test"]));
        }
        addons.insert("apt".into(), YamlNode::Mapping(apt));
        if rng.gen_bool(0.3) {
            addons.insert("chrome".into(), s("stable"));
        }
        root.insert("addons".into(), YamlNode::Mapping(addons));
    }
    if rng.gen_bool(0.2) {
        root.insert("services".into(), strings(&pick_some(rng, &["docker", "postgresql", "redis", "mysql"], 2)));
    }

    let phases = [
        ("before_install", 0.3),
        ("install", 0.3),
        ("before_script", 0.2),
        ("script", 0.85),
        ("after_success", 0.2),
        ("after_failure", 0.2),
        ("after_script", 0.15),
        ("before_cache", 0.05),
    ];
    for (phase, p) in phases {
        if rng.gen_bool(p) {
            let value = if phase == "install" && rng.gen_bool(0.1) {
                s("skip")
            } else {
                commands(rng)
            };
            root.insert(phase.into(), value);
        }
    }

    let stage_names = ["test", "build", "deploy"];
    let uses_stages = rng.gen_bool(0.3);
    if rng.gen_bool(0.4) {
        let mut jobs = Mapping::new();
        let mut include = Vec::new();
        let mut names = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let matrix_only = rng.gen_bool(0.4);
            let entry = if matrix_only {
                let mut entry = Mapping::new();
                match version_key(language) {
                    Some(key) if rng.gen_bool(0.6) => {
                        entry.insert(key.into(), s(pick(rng, versions(language))));
                    }
                    _ => {
                        entry.insert("os".into(), s(pick(rng, &["linux", "osx", "windows"])));
                    }
                }
                if rng.gen_bool(0.3) {
                    entry.insert("env".into(), s(&assignment(rng)));
                }
                entry
            } else {
                travis_job_entry(rng, language, &stage_names, uses_stages)
            };
            if let Some(name) = entry.get("name").and_then(YamlNode::as_str) {
                names.push(name.to_string());
            }
            include.push(YamlNode::Mapping(entry));
        }
        jobs.insert("include".into(), YamlNode::Sequence(include));
        if rng.gen_bool(0.3) {
            let mut exclude = Mapping::new();
            match version_key(language) {
                Some(key) => exclude.insert(key.into(), s(pick(rng, versions(language)))),
                None => exclude.insert("os".into(), s("osx")),
            };
            jobs.insert("exclude".into(), YamlNode::Sequence(vec![YamlNode::Mapping(exclude)]));
        }
        if rng.gen_bool(0.3) {
            let entry = match names.first() {
                Some(name) if rng.gen_bool(0.6) => map(vec![("name", s(name))]),
                _ => map(vec![("os", s("osx"))]),
            };
            jobs.insert("allow_failures".into(), YamlNode::Sequence(vec![entry]));
        }
        if rng.gen_bool(0.2) {
            jobs.insert("fast_finish".into(), YamlNode::bool(true));
        }
        let key = if rng.gen_bool(0.8) { "jobs" } else { "matrix" };
        root.insert(key.into(), YamlNode::Mapping(jobs));
        if uses_stages && rng.gen_bool(0.5) {
            root.insert("stages".into(), strings(&stage_names));
        }
    }

    let has_content = ["install", "script", "jobs", "matrix"]
        .iter()
        .any(|k| root.contains_key(*k));
    if !has_content {
        root.insert("script".into(), commands(rng));
    }

    if rng.gen_bool(0.2) {
        let mut branches = Mapping::new();
        branches.insert("only".into(), strings(&pick_some(rng, &["main", "master", "/^release-.*$/"], 2)));
        if rng.gen_bool(0.3) {
            branches.insert("except".into(), s("wip"));
        }
        root.insert("branches".into(), YamlNode::Mapping(branches));
    }
    if rng.gen_bool(0.1) {
        root.insert("deploy".into(), map(vec![("provider", s("releases")), ("on", map(vec![("tags", YamlNode::bool(true))]))]));
    }
    if rng.gen_bool(0.1) {
        root.insert("notifications".into(), map(vec![("email", YamlNode::bool(false))]));
    }
    if rng.gen_bool(0.05) {
        root.insert("import".into(), s("org/shared:base.yml"));
    }
    if rng.gen_bool(0.05) {
        root.insert("git".into(), map(vec![("depth", YamlNode::int(3))]));
    }
    YamlNode::Mapping(root)
}

const SETUPS: &[(&str, &str, &[&str])] = &[
    ("actions/setup-java@v4", "java-version", &["8", "11", "17", "21"]),
    ("actions/setup-node@v4", "node-version", &["18", "20", "lts/*"]),
    ("actions/setup-python@v5", "python-version", &["3.9", "3.10", "3.12"]),
    ("actions/setup-go@v5", "go-version", &["1.21", "1.22.x"]),
    ("dtolnay/rust-toolchain@master", "toolchain", &["stable", "1.75.0"]),
];

const LABELS: &[&str] = &["ubuntu-latest", "ubuntu-22.04", "macos-latest", "windows-latest", "macos-13", "self-hosted"];

fn gha_steps<R: Rng>(rng: &mut R, matrix_version_key: Option<&str>, setup: usize) -> Vec<YamlNode> {
    let mut steps = Vec::new();
    if rng.gen_bool(0.85) {
        steps.push(map(vec![("uses", s("actions/checkout@v4"))]));
    }
    let (action, input, pool) = SETUPS[setup];
    if matrix_version_key.is_some() || rng.gen_bool(0.7) {
        let mut with = Mapping::new();
        if action.contains("java") {
            with.insert("distribution".into(), s(pick(rng, &["temurin", "zulu"])));
        }
        let version = match matrix_version_key {
            Some(key) => s(&format!("${{{{ matrix.{key} }}}}")),
            None => {
                let v = pick(rng, pool);
                version_value(rng, v)
            }
        };
        with.insert(input.into(), version);
        if rng.gen_bool(0.15) {
            with.insert("cache".into(), s("maven"));
        }
        steps.push(map(vec![("uses", s(action)), ("with", YamlNode::Mapping(with))]));
    }
    if rng.gen_bool(0.2) {
        let with = map(vec![
            ("path", s(&pick_some(rng, DIRECTORIES, 2).join("\n"))),
            ("key", s("${{ runner.os }}-deps-${{ hashFiles('**/lockfile') }}")),
        ]);
        steps.push(map(vec![("uses", s("actions/cache@v4")), ("with", with)]));
    }
    if rng.gen_bool(0.1) {
        let run = format!("sudo apt-get update && sudo apt-get install -y {}", pick_some(rng, PACKAGES, 2).join(" "));
        steps.push(map(vec![("name", s("Install apt packages")), ("run", s(&run))]));
    }
    for _ in 0..rng.gen_range(1..=4) {
        let mut step = Mapping::new();
        if rng.gen_bool(0.3) {
            step.insert("name".into(), s(pick(rng, &["Build", "Run tests", "Upload: logs", "yes"])));
        }
        step.insert("run".into(), command(rng));
        if rng.gen_bool(0.25) {
            let cond = pick(rng, &["success()", "failure()", "always()", "${{ always() }}", "github.event_name == 'push'"]);
            step.insert("if".into(), s(cond));
        }
        if rng.gen_bool(0.08) {
            step.insert("shell".into(), s("bash"));
        }
        if rng.gen_bool(0.08) {
            step.insert("env".into(), map(vec![("TOKEN", s("${{ secrets.TOKEN }}"))]));
        }
        steps.push(YamlNode::Mapping(step));
    }
    if rng.gen_bool(0.2) {
        let uses = pick(rng, &["someorg/custom@v1", "codecov/codecov-action@v4", "actions/upload-artifact@v4"]);
        steps.push(map(vec![("uses", s(uses)), ("with", map(vec![("name", s("report"))]))]));
    }
    steps
}

/// A random GitHub Actions workflow that passes the GitHub Actions linter.
pub fn gha_config<R: Rng>(rng: &mut R) -> YamlNode {
    let mut root = Mapping::new();
    if rng.gen_bool(0.7) {
        root.insert("name".into(), s(pick(rng, &["CI", "Build and test", "on"])));
    }
    let on = match rng.gen_range(0..4) {
        0 => s("push"),
        1 => strings(&["push", "pull_request"]),
        2 => {
            let filters = map(vec![("branches", strings(&pick_some(rng, BRANCHES, 2)))]);
            map(vec![("push", filters.clone()), ("pull_request", filters)])
        }
        _ => map(vec![
            ("push", map(vec![("branches", strings(&["main"])), ("tags", strings(&["v*"]))])),
            ("schedule", YamlNode::Sequence(vec![map(vec![("cron", s("0 3 * * 1"))])])),
            ("workflow_dispatch", YamlNode::empty_mapping()),
        ]),
    };
    root.insert("on".into(), on);
    if rng.gen_bool(0.3) {
        let env: Vec<(&str, YamlNode)> = pick_some(rng, ENV_NAMES, 2)
            .into_iter()
            .map(|n| (n, s(pick(rng, ENV_VALUES))))
            .collect();
        root.insert("env".into(), map(env));
    }
    if rng.gen_bool(0.1) {
        root.insert("permissions".into(), map(vec![("contents", s("read"))]));
    }

    let ids = ["build", "test", "lint", "unit-tests", "docs_build", "deploy"];
    let count = rng.gen_range(1..=3);
    let chosen: Vec<&str> = ids.choose_multiple(rng, count).copied().collect();
    let mut jobs = Mapping::new();
    for (index, id) in chosen.iter().enumerate() {
        if index > 0 && rng.gen_bool(0.05) {
            jobs.insert((*id).into(), map(vec![("uses", s("org/repo/.github/workflows/reuse.yml@main"))]));
            continue;
        }
        let mut job = Mapping::new();
        let setup = rng.gen_range(0..SETUPS.len());
        let mut matrix = Mapping::new();
        let mut version_key = None;
        let mut os_key = None;
        if rng.gen_bool(0.4) {
            let key = pick(rng, &["java", "jdk", "version", "node"]);
            let pool = SETUPS[setup].2;
            let values = pick_some(rng, pool, 3).into_iter().map(|v| version_value(rng, v)).collect();
            matrix.insert(key.into(), YamlNode::Sequence(values));
            version_key = Some(key);
            if rng.gen_bool(0.4) {
                let key = pick(rng, &["os", "platform"]);
                let labels = pick_some(rng, &["ubuntu-latest", "macos-latest", "windows-latest", "ubuntu-20.04"], 3);
                matrix.insert(key.into(), strings(&labels));
                os_key = Some(key);
            }
            if rng.gen_bool(0.2) {
                let sets = (0..rng.gen_range(1..=2))
                    .map(|_| map(vec![("MODE", s(pick(rng, &["fast", "slow"])))]))
                    .collect();
                matrix.insert("env".into(), YamlNode::Sequence(sets));
            }
            if rng.gen_bool(0.2) {
                matrix.insert("db".into(), strings(&["pg", "mysql"]));
            }
            if rng.gen_bool(0.3) {
                let entry = map(vec![(key, s(pick(rng, pool)))]);
                matrix.insert("include".into(), YamlNode::Sequence(vec![entry]));
            }
            if rng.gen_bool(0.2) {
                let entry = map(vec![(key, s(pick(rng, pool)))]);
                matrix.insert("exclude".into(), YamlNode::Sequence(vec![entry]));
            }
        }
        let runs_on = match os_key {
            Some(key) => s(&format!("${{{{ matrix.{key} }}}}")),
            None => s(pick(rng, LABELS)),
        };
        job.insert("runs-on".into(), runs_on);
        if index > 0 && rng.gen_bool(0.4) {
            let needs = chosen[..index].iter().copied().filter(|n| jobs.get(*n).is_some_and(|j| j.get("uses").is_none()));
            let needs: Vec<&str> = needs.collect();
            if !needs.is_empty() {
                job.insert("needs".into(), strings(&needs));
            }
        }
        if rng.gen_bool(0.15) {
            job.insert("continue-on-error".into(), YamlNode::bool(true));
        } else if version_key.is_some() && rng.gen_bool(0.15) {
            job.insert("continue-on-error".into(), s("${{ matrix.experimental }}"));
            let entry = map(vec![
                (version_key.unwrap(), s(pick(rng, SETUPS[setup].2))),
                ("experimental", YamlNode::bool(true)),
            ]);
            let include = matrix.entry("include".to_string()).or_insert_with(|| YamlNode::Sequence(Vec::new()));
            if let YamlNode::Sequence(items) = include {
                items.push(entry);
            }
        }
        if !matrix.is_empty() {
            let mut strategy = Mapping::new();
            if rng.gen_bool(0.3) {
                strategy.insert("fail-fast".into(), YamlNode::bool(false));
            }
            strategy.insert("matrix".into(), YamlNode::Mapping(matrix));
            job.insert("strategy".into(), YamlNode::Mapping(strategy));
        }
        if rng.gen_bool(0.3) {
            job.insert("env".into(), map(vec![(pick(rng, ENV_NAMES), s(pick(rng, ENV_VALUES)))]));
        }
        if rng.gen_bool(0.1) {
            job.insert("timeout-minutes".into(), YamlNode::int(30));
        }
        if rng.gen_bool(0.08) {
            job.insert("services".into(), map(vec![("postgres", map(vec![("image", s("postgres:15"))]))]));
        }
        job.insert("steps".into(), YamlNode::Sequence(gha_steps(rng, version_key, setup)));
        jobs.insert((*id).into(), YamlNode::Mapping(job));
    }
    root.insert("jobs".into(), YamlNode::Mapping(jobs));
    YamlNode::Mapping(root)
}

/// Alternative surface syntaxes for the same document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// The whole document as one flow collection with single-quoted strings.
    Flow,
    /// Four-space block indentation, double-quoted strings and comments.
    Verbose,
}

fn flow_scalar(scalar: &Scalar) -> String {
    match scalar.kind {
        ScalarKind::String => {
            if scalar.text.chars().any(|c| c.is_control()) {
                double_quote(&scalar.text)
            } else {
                format!("'{}'", scalar.text.replace('\'', "''"))
            }
        }
        ScalarKind::Null => "~".to_string(),
        _ => scalar.text.clone(),
    }
}

fn flow(node: &YamlNode, out: &mut String) {
    match node {
        YamlNode::Scalar(scalar) => out.push_str(&flow_scalar(scalar)),
        YamlNode::Sequence(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                flow(item, out);
            }
            out.push(']');
        }
        YamlNode::Mapping(m) => {
            out.push('{');
            for (i, (k, v)) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&flow_scalar(&Scalar::new(k.clone(), ScalarKind::String)));
                out.push_str(": ");
                flow(v, out);
            }
            out.push('}');
        }
    }
}

fn verbose_scalar(scalar: &Scalar) -> String {
    match scalar.kind {
        ScalarKind::String => double_quote(&scalar.text),
        ScalarKind::Null => "null".to_string(),
        _ => scalar.text.clone(),
    }
}

fn verbose(node: &YamlNode, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match node {
        YamlNode::Mapping(m) if !m.is_empty() => {
            for (k, v) in m {
                out.push_str(&format!("{pad}{}:", double_quote(k)));
                verbose_value(v, indent, out);
            }
        }
        YamlNode::Sequence(items) if !items.is_empty() => {
            for item in items {
                out.push_str(&format!("{pad}-"));
                verbose_value(item, indent, out);
            }
        }
        other => {
            let mut text = String::new();
            flow(other, &mut text);
            out.push_str(&format!("{pad}{text}\n"));
        }
    }
}

fn verbose_value(node: &YamlNode, indent: usize, out: &mut String) {
    match node {
        YamlNode::Scalar(scalar) => out.push_str(&format!(" {}\n", verbose_scalar(scalar))),
        YamlNode::Mapping(m) if m.is_empty() => out.push_str(" {}\n"),
        YamlNode::Sequence(s) if s.is_empty() => out.push_str(" []\n"),
        nested => {
            out.push_str("   # nested\n");
            verbose(nested, indent + 4, out);
        }
    }
}

/// Renders `node` in the given layout. Parsing the result yields `node`.
pub fn render(node: &YamlNode, layout: Layout) -> String {
    let mut out = String::new();
    match layout {
        Layout::Flow => {
            flow(node, &mut out);
            out.push('\n');
        }
        Layout::Verbose => {
            out.push_str("# generated\n\n");
            verbose(node, 0, &mut out);
        }
    }
    out
}
