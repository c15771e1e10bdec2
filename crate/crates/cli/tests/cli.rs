use std::process::{Command, Output};

fn coarsesmith(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarsesmith")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn list_names_every_builtin() {
    let o = coarsesmith(&["list"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert!(names.contains(&"euclidean_line".to_owned()));
    assert!(names.contains(&"goalposts".to_owned()));
}

#[test]
fn line_report_is_versioned_json() {
    let o = coarsesmith(&["run", "euclidean_line"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"schema\": \"coarsesmith-report/1\""), "{out}");
    assert!(out.contains("\"exit_code\": 0"));
    // reruns are byte-identical
    assert_eq!(stdout(&coarsesmith(&["run", "euclidean_line"])), out);
}

#[test]
fn text_format_and_window_flag() {
    let o = coarsesmith(&["run", "euclidean_plane", "--window", "16", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("HC(X) = {2:1}"), "{}", stdout(&o));
}

#[test]
fn goalposts_exit_with_an_honest_negative() {
    let o = coarsesmith(&["run", "goalposts", "--format", "text"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scenario_file_with_scales_flag() {
    let dir = std::env::temp_dir().join(format!("coarsesmith-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pair.json");
    std::fs::write(
        &path,
        r#"{"name": "pair", "space": {"kind": "matrix", "points": ["a", "b"], "dist": [["0", "3"], ["3", "0"]]},
            "group": {"table": [[0, 1], [1, 0]], "names": ["e", "s"]},
            "action": {"kind": "perms", "perms": {"e": [0, 1], "s": [1, 0]}},
            "tasks": {"homology": false}}"#,
    )
    .unwrap();
    let o = coarsesmith(&["run", path.to_str().unwrap(), "--scales", "0,3"]);
    std::fs::remove_dir_all(&dir).unwrap();
    // the swap moves both points, so X_0 is empty while X_3 is everything
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("\"sizes\": [\n"), "{out}");
    assert!(out.contains("not stable in window"));
}

#[test]
fn bad_input_is_an_error() {
    let o = coarsesmith(&["run", "no_such_scenario"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("neither a builtin scenario nor a file"));
    let o = coarsesmith(&["run", "euclidean_line", "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
}
