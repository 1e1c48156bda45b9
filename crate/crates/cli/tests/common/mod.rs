//! Shared helpers for CLI integration tests.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modal-sentinel"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

pub fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("no exit code")
}

pub fn write_config(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
}

/// Healthy / damage-1 / damage-2 configurations for a shared run root.
pub fn three_state_configs(root: &Path) -> [std::path::PathBuf; 3] {
    let healthy = root.join("healthy.json");
    let d1 = root.join("d1.json");
    let d2 = root.join("d2.json");
    write_config(
        &healthy,
        &format!(
            r#"{{ "name": "00-healthy", "io": {{ "output_dir": "{}" }} }}"#,
            root.join("healthy").display()
        ),
    );
    write_config(
        &d1,
        &format!(
            r#"{{
  "name": "01-damage1",
  "damage": {{ "locations": [0.1], "severities": [0.394] }},
  "scoring": {{ "baseline_dir": "{0}" }},
  "io": {{ "output_dir": "{1}" }}
}}"#,
            root.join("healthy").display(),
            root.join("d1").display()
        ),
    );
    write_config(
        &d2,
        &format!(
            r#"{{
  "name": "02-damage2",
  "damage": {{ "locations": [0.3, 0.2, 0.1], "severities": [0.197, 0.197, 0.512] }},
  "scoring": {{ "baseline_dir": "{0}" }},
  "io": {{ "output_dir": "{1}" }}
}}"#,
            root.join("healthy").display(),
            root.join("d2").display()
        ),
    );
    [healthy, d1, d2]
}

/// Run simulate/fit (plus baseline for the first config) and score for all
/// three states under `root`.
pub fn run_three_states(root: &Path) {
    let [healthy, d1, d2] = three_state_configs(root);
    let hc = healthy.to_str().unwrap();
    run_ok(&["simulate", "--config", hc, "--quiet"]);
    run_ok(&["fit", "--config", hc, "--quiet"]);
    run_ok(&["baseline", "--config", hc, "--quiet"]);
    run_ok(&["score", "--config", hc, "--quiet"]);
    for config in [&d1, &d2] {
        let c = config.to_str().unwrap();
        run_ok(&["simulate", "--config", c, "--quiet"]);
        run_ok(&["fit", "--config", c, "--quiet"]);
        run_ok(&["score", "--config", c, "--quiet"]);
    }
}

pub fn report_q(dir: &Path, kind: &str) -> f64 {
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    report["kinds"][kind]["Q"].as_f64().unwrap()
}

/// Minimal XML well-formedness check: tags must nest and close in order.
pub fn assert_well_formed_xml(xml: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = xml;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unclosed angle bracket") + start;
        let tag = &rest[start + 1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().expect("closing tag without opener");
            assert_eq!(open, name, "mismatched tag");
        } else if !tag.ends_with('/') {
            stack.push(tag.split_whitespace().next().unwrap().into());
        }
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
}
