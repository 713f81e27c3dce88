//! End-to-end checks of the `jspec` binary: exit codes, determinism,
//! cache behavior, and input handling.

use std::collections::HashSet;
use std::path::Path;
use std::process::{Command, Output};

use jointspec_cli::cache::content_hash;
use jointspec_cli::input::{canonical_bytes, parse_input, InputDocument};

fn jspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jspec"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn read_dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const MINIMAL_DOC: &str = r#"{
    "dim": 2,
    "field": "real",
    "group": {"kind": "gl"},
    "generators": [
        {"label": "a", "entries": [[2.0, 0.0], [0.0, 1.0]]},
        {"label": "b", "entries": [[2.0, 1.0], [0.0, 1.0]]}
    ]
}"#;

#[test]
fn document_run_succeeds_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, MINIMAL_DOC).unwrap();
    let out_dir = dir.path().join("out");
    let out = jspec(&[
        "--input",
        doc.to_str().unwrap(),
        "--level",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("custom.csv").exists());
    assert!(out_dir.join("custom.svg").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("jsr_upper"), "{stdout}");
    let csv = std::fs::read_to_string(out_dir.join("custom.csv")).unwrap();
    assert!(csv.starts_with("scenario,level,kind,mode,x,y,word\n"));
    assert!(csv.contains("a.a.a.a.a") || csv.contains("custom,5"));
}

#[test]
fn wrong_entry_shape_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, MINIMAL_DOC.replace("[2.0, 0.0]", "[2.0, 0.0, 9.0]")).unwrap();
    let out = jspec(&["--input", doc.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2x2"));
}

#[test]
fn duplicate_labels_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, MINIMAL_DOC.replace("\"label\": \"b\"", "\"label\": \"a\"")).unwrap();
    let out = jspec(&["--input", doc.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unique"));
}

#[test]
fn malformed_json_exits_3_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, "{\n \"dim\": 2,,\n}").unwrap();
    let out = jspec(&["--input", doc.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn unknown_scenario_exits_2() {
    let out = jspec(&["fig99"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig99"));
}

#[test]
fn missing_scenario_and_input_exits_2() {
    let out = jspec(&[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn same_seed_and_flags_give_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o1 = dir.path().join("o1");
    let o2 = dir.path().join("o2");
    for o in [&o1, &o2] {
        let out = jspec(&["fig5", "--level", "8", "--seed", "3", "--out", o.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read_dir_files(&o1), read_dir_files(&o2));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let o1 = dir.path().join("t1");
    let o2 = dir.path().join("t4");
    for (o, k) in [(&o1, "1"), (&o2, "4")] {
        let out = jspec(&["fig3", "--level", "7", "--threads", k, "--out", o.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read_dir_files(&o1), read_dir_files(&o2));
}

#[test]
fn corrupt_cache_record_is_recomputed_transparently() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let o1 = dir.path().join("o1");
    let o2 = dir.path().join("o2");
    let run = |o: &Path| {
        jspec(&[
            "fig3",
            "--level",
            "5",
            "--cache",
            cache.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&run(&o1)), 0);
    let records: Vec<_> = std::fs::read_dir(&cache)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsc"))
        .collect();
    assert!(!records.is_empty(), "no cache records written");
    let victim = &records[0];
    let mut bytes = std::fs::read(victim).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xFF;
    std::fs::write(victim, &bytes).unwrap();

    assert_eq!(code(&run(&o2)), 0);
    assert_eq!(read_dir_files(&o1), read_dir_files(&o2), "corrupt record changed output");
    let healed = std::fs::read(victim).unwrap();
    assert_ne!(healed, bytes, "corrupt record was not rewritten");
}

#[test]
fn verify_cache_needs_cache_and_passes_when_intact() {
    let out = jspec(&["fig3", "--level", "4", "--verify-cache"]);
    assert_eq!(code(&out), 2);

    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = jspec(&[
        "fig3",
        "--level",
        "4",
        "--cache",
        cache.to_str().unwrap(),
        "--verify-cache",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict cache_verified: PASS"));
}

#[test]
fn tiny_budget_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = jspec(&[
        "fig5",
        "--level",
        "10",
        "--budget",
        "10",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn strict_mode_exits_4_on_failed_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = jspec(&[
        "fig6",
        "--level",
        "5",
        "--tol",
        "1e-12",
        "--strict",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict hull_close_to_square: FAIL"));
}

#[test]
fn content_hashes_of_random_documents_are_distinct() {
    use rand::Rng;
    let mut rng = jointspec::rng::stream_rng(99, 0);
    let mut seen = HashSet::new();
    for _ in 0..10_000 {
        let doc = InputDocument {
            dim: 2,
            field: "real".into(),
            group: jointspec_cli::input::GroupSpec { kind: "gl".into(), blocks: None },
            generators: (0..2)
                .map(|i| jointspec_cli::input::GeneratorSpec {
                    label: format!("g{i}"),
                    entries: (0..2)
                        .map(|_| (0..2).map(|_| rng.gen_range(-4.0..4.0)).collect())
                        .collect(),
                })
                .collect(),
            weights: None,
            scenario: None,
        };
        assert!(seen.insert(content_hash(&[&canonical_bytes(&doc)])));
    }
    assert_eq!(seen.len(), 10_000);
}

#[test]
fn document_scenario_field_selects_a_catalog_run() {
    let dir = tempfile::tempdir().unwrap();
    let doc_path = dir.path().join("doc.json");
    let with_scenario = MINIMAL_DOC.replace("\"dim\": 2,", "\"dim\": 2, \"scenario\": \"fig5\",");
    parse_input(&with_scenario).unwrap();
    std::fs::write(&doc_path, &with_scenario).unwrap();
    let out_dir = dir.path().join("out");
    let out = jspec(&[
        "--input",
        doc_path.to_str().unwrap(),
        "--level",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("fig5.csv").exists());
}
