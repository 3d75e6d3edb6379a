use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn csanno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csanno"))
        .args(args)
        .env("CSANNO_SECRET", "correct-horse")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = csanno(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn units_file(dir: &Path) -> String {
    let p = dir.join("units.tsv");
    let mut s = String::new();
    for i in 0..10 {
        s.push_str(&format!(
            "u{i}\ttweet\tEGY\tولكن مش خيال 2014 :) http://t.co/x{i}\n"
        ));
    }
    fs::write(&p, s).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn pretag_writes_machine_tags() {
    let dir = tempfile::tempdir().unwrap();
    let units = units_file(dir.path());
    let out = ok(&["pretag", "--in", &units]);
    let first: Vec<&str> = out.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(first, ["u0", "0", "ولكن", ""]);
    assert!(out.lines().any(|l| l.ends_with("\t2014\tNumber")));
    assert!(out.lines().any(|l| l.ends_with("\t:)\tEmotion")));
    assert!(out.lines().any(|l| l.ends_with("\tURL")));
}

#[test]
fn pretag_reports_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.tsv");
    fs::write(&p, "u1\ttweet\tEGY\tx\nu2\tblog\tEGY\ty\n").unwrap();
    let out = csanno(&["pretag", "--in", p.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn iaa_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a1.tsv"), "u1\t0\tx\tMSA\nu1\t1\ty\tDA\n").unwrap();
    fs::write(dir.path().join("a2.tsv"), "u1\t0\tx\tMSA\nu1\t1\ty\tMSA\n").unwrap();
    let d = dir.path().to_str().unwrap();
    let csv = ok(&["iaa", "--annotations", d, "--format", "csv"]);
    assert!(csv.starts_with("tag,percent,kappa,psa,support\n"));
    assert!(csv.contains("Overall,0.5"));
    let table = ok(&["iaa", "--annotations", d, "--disagreements"]);
    assert!(table.contains("Annotator1"));
}

#[test]
fn store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let units = units_file(dir.path());
    let store = dir.path().join("store");
    let store = store.to_str().unwrap();
    let out = ok(&[
        "corpus",
        "import",
        "--store",
        store,
        "--in",
        &units,
        "--id",
        "egy",
        "--source",
        "fixture",
        "--genre",
        "tweet",
        "--language",
        "MSA",
        "--language",
        "DA",
    ]);
    assert_eq!(out.trim(), "imported 10 units");
    ok(&[
        "workflow",
        "add-user",
        "--store",
        store,
        "--id",
        "lead",
        "--role",
        "lead-annotator",
        "--dialect",
        "EGY",
    ]);
    for a in ["a1", "a2"] {
        ok(&[
            "workflow",
            "add-user",
            "--store",
            store,
            "--id",
            a,
            "--role",
            "annotator",
            "--dialect",
            "EGY",
        ]);
    }
    let out = ok(&[
        "workflow",
        "assign",
        "--store",
        store,
        "--batch",
        "b1",
        "--period",
        "2024-W10",
        "--dialect",
        "EGY",
        "--seed",
        "3",
    ]);
    assert!(
        out.starts_with("batch b1: 2 tasks, 1 shared units, seed 3"),
        "{out}"
    );

    let review = csanno(&["workflow", "review", "--store", store, "--batch", "b1"]);
    assert!(!review.status.success());
    assert!(String::from_utf8_lossy(&review.stderr).contains("not ready"));

    let stats = ok(&["corpus", "stats", "--store", store]);
    let row: Vec<&str> = stats.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(&row[..5], ["egy", "Tweets", "EGY", "60", "15"]);
    assert!(row[5].starts_with("MSA:0, DA:0"));

    let export = csanno(&["corpus", "export", "--store", store]);
    assert!(!export.status.success());

    let report = ok(&["workflow", "report", "--store", store]);
    assert!(report.contains("\"tokens_annotated\": 0"));
}
