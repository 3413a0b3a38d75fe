use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wittforge(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wittforge"));
    cmd.args(args).env_remove("WITTFORGE_CACHE");
    if let Some(dir) = cache {
        cmd.env("WITTFORGE_CACHE", dir);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn coeff_level_one_is_good() {
    let o = wittforge(&["coeff", "--prime", "2", "--level", "1"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("[pass]"));
    assert!(!out.contains("[FAIL]"));
}

#[test]
fn json_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = wittforge(
            &["verify", "--suite", "types", "--json", p.to_str().unwrap()],
            None,
        );
        assert_eq!(code(&o), 0);
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn coeff_json_carries_goodness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let o = wittforge(
        &[
            "coeff",
            "--prime",
            "3",
            "--level",
            "1",
            "--json",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["config"]["command"], "coeff");
    assert_eq!(v["goodness"]["verdict"], true);
    assert!(v["coefficient"]["terms"].as_u64().unwrap() > 0);
}

#[test]
fn configuration_errors_exit_one() {
    for args in [
        &["coeff", "--prime", "4"][..],
        &["coeff", "--level", "0"],
        &["coeff", "--scenario", "affine", "--affine-s", "1"],
        &["coeff", "--affine-t", "2"],
        &["verify"],
        &["verify", "--suite", "nope"],
        &["coeff", "--depth", "3", "--level", "2"],
        &["frobnicate"],
        &["cache", "build", "--prime", "2"],
    ] {
        let o = wittforge(args, None);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&wittforge(&["--help"], None)), 0);
    assert_eq!(code(&wittforge(&["--version"], None)), 0);
}

#[test]
fn out_of_budget_level_exits_two() {
    let o = wittforge(&["coeff", "--prime", "7", "--level", "9"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn cache_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&wittforge(
            &["cache", "build", "--prime", "2", "--max-index", "2"],
            Some(d)
        )),
        0
    );
    let list = wittforge(&["cache", "list"], Some(d));
    assert_eq!(code(&list), 0);
    assert!(String::from_utf8_lossy(&list.stdout).contains("witt-p2-sum-2"));
    assert_eq!(code(&wittforge(&["cache", "validate"], Some(d))), 0);

    let victim = d.join("witt-p2-product-2.txt");
    let mut bytes = fs::read(&victim).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] = if bytes[mid] == b'1' { b'2' } else { b'1' };
    fs::write(&victim, bytes).unwrap();
    let o = wittforge(&["cache", "validate"], Some(d));
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("witt-p2-product-2"));
    let o = wittforge(
        &["verify", "--suite", "witt-oracle", "--prime", "2"],
        Some(d),
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn cache_list_needs_existing_directory() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    assert_eq!(code(&wittforge(&["cache", "list"], Some(&missing))), 1);
    assert_eq!(code(&wittforge(&["cache", "list"], None)), 1);
}
