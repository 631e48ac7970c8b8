use std::process::{Command, Output};

fn xytr(args: &[&str], cache: Option<&std::path::Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xytr"));
    c.args(args).env_remove("XYTR_CACHE_DIR");
    if let Some(dir) = cache {
        c.env("XYTR_CACHE_DIR", dir);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

#[test]
fn lambert_w11() {
    let o = xytr(&["omega", "--curve", "lambert", "--g", "1", "--n", "1"], None);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "z^2*(z-4)/(24*(z-1)^5)");
}

#[test]
fn hurwitz_both_routes() {
    let o = xytr(&["hurwitz", "--g", "0", "--mu", "2"], None);
    assert_eq!(stdout(&o), "1/2");
    let a = stdout(&xytr(&["hurwitz", "--g", "1", "--mu", "2,1"], None));
    let b = stdout(&xytr(&["hurwitz", "--g", "1", "--mu", "2,1", "--brute"], None));
    assert_eq!(a, b);
    assert_eq!(a, "40");
}

#[test]
fn xy_verify_exit_codes() {
    let ok = xytr(&["xy-verify", "--curve", "lambert", "--g", "0", "--n", "3"], None);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "PASS g=0 n=3");
    let bad = xytr(&["xy-verify", "--curve", "lambert-bad", "--g", "1", "--n", "1"], None);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.starts_with("FAIL g=1 n=1"));
    assert!(text.contains("(-6*z^2+4*z-1)/(24*z*(z-1)^5)"));
}

#[test]
fn errors_are_json_with_exit_2() {
    let o = xytr(&["omega", "--curve", "airy", "--g", "0", "--n", "0"], None);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "domain");
    let o = xytr(&["omega", "--curve", "lambert", "--g", "0", "--n", "1"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = xytr(&["omega", "--curve", "airy", "--g", "3..1"], None);
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "parse");
}

#[test]
fn psi_table_formats() {
    let csv = stdout(&xytr(&["psi-table", "--max-chi", "1"], None));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "g,n,indices,value");
    assert!(lines.contains(&"0,3,0 0 0,1"));
    assert!(lines.contains(&"1,1,1,1/24"));
    let json = xytr(&["psi-table", "--max-chi", "1", "--format", "json"], None);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v.is_object() || v.is_array());
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = xytr(&["omega", "--curve", "airy", "--g", "1", "--n", "1..2", "--format", "json"], Some(dir.path()));
    assert!(first.status.success());
    let list = stdout(&xytr(&["cache", "list", "--curve", "airy"], Some(dir.path())));
    assert!(list.contains("g=1 n=1") && list.contains("g=1 n=2"));
    let again = xytr(&["omega", "--curve", "airy", "--g", "1", "--n", "1..2", "--format", "json"], Some(dir.path()));
    assert_eq!(first.stdout, again.stdout);
    let path = stdout(&xytr(&["cache", "path"], Some(dir.path())));
    assert_eq!(path, dir.path().display().to_string());
    let cleared = stdout(&xytr(&["cache", "clear", "--curve", "airy"], Some(dir.path())));
    assert!(cleared.starts_with("removed"));
    let list = stdout(&xytr(&["cache", "list", "--curve", "airy"], Some(dir.path())));
    assert!(list.is_empty());
}

#[test]
fn corrupt_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    xytr(&["omega", "--curve", "airy", "--g", "0", "--n", "3"], Some(dir.path()));
    let file = dir.path().join("airy").join("g0_n3.json");
    let text = std::fs::read_to_string(&file).unwrap();
    std::fs::write(&file, text.replacen("-1", "-2", 1)).unwrap();
    let o = xytr(&["omega", "--curve", "airy", "--g", "0", "--n", "3"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "cache");
}

#[test]
fn curve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"name":"mine","x":"z^2/2","y":"z"}"#).unwrap();
    let o = xytr(&["omega", "--curve", path.to_str().unwrap(), "--g", "1", "--n", "1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "-1/(8*z^5)");
}
