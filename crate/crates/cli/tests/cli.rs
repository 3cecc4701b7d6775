//! End-to-end tests of the command line surface: subcommands, exit codes,
//! deterministic reports, and the OBJ export format.

use std::process::Command;

fn blowup() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blowup"))
}

#[test]
fn list_names_every_registered_example() {
    let out = blowup().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "real-blowup-R2-origin",
        "real-blowup-R3-origin",
        "real-blowup-R3-line",
        "complex-blowup-C2-origin",
        "aug-c2-c1-1",
        "aug-c2-c1-1-line",
        "equiv-rotated",
        "merge-line",
    ] {
        assert!(text.contains(name), "missing {name} in list output");
    }
}

#[test]
fn verify_emits_json_records_and_succeeds() {
    let out = blowup()
        .args(["verify", "real-blowup-R2-origin", "--seed", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("check").is_some() && v.get("pass").is_some());
        assert_eq!(v.get("example").unwrap(), "real-blowup-R2-origin");
    }
}

#[test]
fn verify_unknown_example_fails() {
    let out = blowup().args(["verify", "nope"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn verify_with_impossible_tolerance_exits_nonzero() {
    let out = blowup()
        .args(["verify", "real-blowup-R2-origin", "--tol-id", "1e-30"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn reports_are_byte_identical_for_fixed_seed() {
    let dir = std::env::temp_dir();
    let p1 = dir.join("blowup-report-a.jsonl");
    let p2 = dir.join("blowup-report-b.jsonl");
    for p in [&p1, &p2] {
        let out = blowup()
            .args([
                "report",
                "--all",
                "--out",
                p.to_str().unwrap(),
                "--seed",
                "99",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&p1).unwrap();
    let b = std::fs::read(&p2).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

#[test]
fn seed_env_var_changes_default() {
    let with_env = blowup()
        .args(["verify", "real-blowup-R2-origin"])
        .env("BLOWUP_SEED", "31")
        .output()
        .unwrap();
    let with_flag = blowup()
        .args(["verify", "real-blowup-R2-origin", "--seed", "31"])
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, with_flag.stdout);
}

#[test]
fn mesh_export_writes_obj_with_expected_counts() {
    let path = std::env::temp_dir().join("blowup-mesh.obj");
    let out = blowup()
        .args([
            "mesh",
            "real-blowup-R2-origin",
            "--resolution",
            "16",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let n_v = text.lines().filter(|l| l.starts_with("v ")).count();
    assert_eq!(n_v, 2 * 16 * 16 + 16);
    assert!(text.contains("o exceptional"));
}

#[test]
fn mesh_export_rejects_high_dimensional_examples() {
    let path = std::env::temp_dir().join("blowup-mesh-c2.obj");
    let out = blowup()
        .args([
            "mesh",
            "complex-blowup-C2-origin",
            "--resolution",
            "8",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
