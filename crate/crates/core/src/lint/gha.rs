use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::keys::GHA_KEYS;
use super::Sink;
use crate::config::{Mapping, YamlNode, YamlPath};

static JOB_ID_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_-]*$").unwrap());

pub(super) fn check(root: &Mapping, sink: &mut Sink) {
    let top = YamlPath::root();

    if !root.contains_key("on") {
        sink.error("GHA001", top.clone(), "workflow has no `on` trigger");
    }
    for key in root.keys() {
        if !GHA_KEYS.contains("workflow", key) {
            sink.warning("GHA008", top.key(key), format!("unknown top-level key `{key}`"));
        }
    }

    let jobs = match root.get("jobs") {
        Some(YamlNode::Mapping(jobs)) if !jobs.is_empty() => jobs,
        Some(_) => {
            sink.error("GHA002", top.key("jobs"), "`jobs` must be a non-empty mapping");
            return;
        }
        None => {
            sink.error("GHA002", top, "workflow has no `jobs`");
            return;
        }
    };

    let ids: BTreeSet<&str> = jobs.keys().map(String::as_str).collect();
    for (id, job) in jobs {
        let path = top.key("jobs").key(id);
        if !JOB_ID_RE.is_match(id) {
            sink.error("GHA006", path.clone(), format!("invalid job id `{id}`"));
        }
        match job.as_mapping() {
            Some(job) => check_job(job, &path, &ids, sink),
            None => sink.error("GHA003", path, "job must be a mapping with `runs-on`"),
        }
    }
}

fn check_job(job: &Mapping, path: &YamlPath, ids: &BTreeSet<&str>, sink: &mut Sink) {
    for key in job.keys() {
        if !GHA_KEYS.contains("job", key) {
            sink.warning("GHA009", path.key(key), format!("unknown job key `{key}`"));
        }
    }

    // Jobs calling a reusable workflow have neither a runner nor steps.
    let calls_workflow = job.get("uses").is_some_and(|u| u.scalar_text().is_some());
    if !calls_workflow {
        if job.get("runs-on").is_none_or(YamlNode::is_null) {
            sink.error("GHA003", path.clone(), "job has no `runs-on`");
        }
        match job.get("steps") {
            Some(YamlNode::Sequence(steps)) if !steps.is_empty() => {
                for (i, step) in steps.iter().enumerate() {
                    check_step(step, &path.key("steps").index(i), sink);
                }
            }
            Some(_) => sink.error(
                "GHA004",
                path.key("steps"),
                "`steps` must be a non-empty sequence",
            ),
            None => sink.error("GHA004", path.clone(), "job has no `steps`"),
        }
    }

    if let Some(needs) = job.get("needs") {
        let needs_path = path.key("needs");
        match needs.string_list() {
            Some(targets) => {
                for target in targets {
                    if !ids.contains(target.as_str()) {
                        sink.error(
                            "GHA007",
                            needs_path.clone(),
                            format!("`needs` refers to unknown job `{target}`"),
                        );
                    }
                }
            }
            None => sink.error("GHA007", needs_path, "`needs` must be a job id or a list of job ids"),
        }
    }

    if let Some(matrix) = job.get("strategy").and_then(|s| s.get("matrix")) {
        check_matrix(matrix, &path.key("strategy").key("matrix"), sink);
    }
}

fn check_step(step: &YamlNode, path: &YamlPath, sink: &mut Sink) {
    let Some(step) = step.as_mapping() else {
        sink.error("GHA005", path.clone(), "step must be a mapping");
        return;
    };
    let has_run = step.contains_key("run");
    let has_uses = step.contains_key("uses");
    if has_run == has_uses {
        let message = if has_run {
            "step has both `run` and `uses`"
        } else {
            "step has neither `run` nor `uses`"
        };
        sink.error("GHA005", path.clone(), message);
    }
}

fn check_matrix(matrix: &YamlNode, path: &YamlPath, sink: &mut Sink) {
    let Some(matrix) = matrix.as_mapping() else {
        sink.error("GHA010", path.clone(), "`strategy.matrix` must be a mapping");
        return;
    };
    for (key, value) in matrix {
        let entry_path = path.key(key);
        match (key.as_str(), value) {
            ("include" | "exclude", YamlNode::Sequence(entries)) => {
                for (i, entry) in entries.iter().enumerate() {
                    if entry.as_mapping().is_none() {
                        sink.error(
                            "GHA010",
                            entry_path.index(i),
                            format!("`{key}` entries must be mappings"),
                        );
                    }
                }
            }
            (_, YamlNode::Sequence(_)) => {}
            _ => sink.error(
                "GHA010",
                entry_path,
                format!("matrix value `{key}` must be a sequence"),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::config::{parse_config, CiDialect};
    use crate::lint::{lint_gha, LintReport, Severity};

    fn run(src: &str) -> LintReport {
        lint_gha(&parse_config(src.as_bytes(), CiDialect::GitHubActions).unwrap()).unwrap()
    }

    fn rules(report: &LintReport) -> Vec<(&'static str, String)> {
        report
            .diagnostics
            .iter()
            .map(|d| (d.rule_id, d.path.to_string()))
            .collect()
    }

    #[test]
    fn minimal_workflow_passes() {
        let r = run("on: push\njobs: {b: {runs-on: ubuntu-latest, steps: [{run: make}]}}");
        assert!(r.passed);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn missing_runs_on() {
        let r = run("on: push\njobs:\n  b:\n    steps: [{run: make}]\n");
        assert!(!r.passed);
        assert_eq!(rules(&r), [("GHA003", "jobs.b".to_string())]);
        assert_eq!(r.diagnostics[0].to_string(), "Error GHA003 jobs.b job has no `runs-on`");
    }

    #[test]
    fn step_with_run_and_uses() {
        let r = run("on: push\njobs:\n  b:\n    runs-on: x\n    steps: [{run: make, uses: a/b@v1}]\n");
        assert_eq!(rules(&r), [("GHA005", "jobs.b.steps[0]".to_string())]);
    }

    #[test]
    fn structural_errors() {
        let r = run("name: x\n");
        assert_eq!(
            rules(&r),
            [("GHA001", "$".to_string()), ("GHA002", "$".to_string())]
        );
        let r = run("on: push\njobs: {}\n");
        assert_eq!(rules(&r), [("GHA002", "jobs".to_string())]);
        let r = run("on: push\njobs:\n  1bad:\n    runs-on: x\n    steps: []\n");
        assert_eq!(
            rules(&r),
            [("GHA006", "jobs.1bad".to_string()), ("GHA004", "jobs.1bad.steps".to_string())]
        );
    }

    #[test]
    fn needs_and_matrix() {
        let src = "on: push\njobs:\n  a:\n    runs-on: x\n    needs: [b, zz]\n    strategy:\n      matrix:\n        java: 11\n        include: [3]\n    steps: [{run: m}]\n  b:\n    runs-on: x\n    steps: [{uses: a/b@v1}]\n";
        let r = run(src);
        assert_eq!(
            rules(&r),
            [
                ("GHA007", "jobs.a.needs".to_string()),
                ("GHA010", "jobs.a.strategy.matrix.include[0]".to_string()),
                ("GHA010", "jobs.a.strategy.matrix.java".to_string()),
            ]
        );
    }

    #[test]
    fn unknown_keys_warn_only() {
        let r = run("on: push\nfoo: 1\njobs: {b: {runs-on: x, bar: 2, steps: [{run: m}]}}");
        assert!(r.passed);
        assert!(r.diagnostics.iter().all(|d| d.severity == Severity::Warning));
        assert_eq!(
            rules(&r),
            [("GHA008", "foo".to_string()), ("GHA009", "jobs.b.bar".to_string())]
        );
    }

    #[test]
    fn reusable_workflow_job() {
        let r = run("on: push\njobs:\n  call:\n    uses: org/repo/.github/workflows/x.yml@main\n");
        assert!(r.passed);
    }

    #[test]
    fn wrong_dialect() {
        let c = parse_config(b"language: java", CiDialect::TravisCI).unwrap();
        assert_eq!(lint_gha(&c).unwrap_err().code(), "E_WRONG_DIALECT");
    }
}
