use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parity-shadow"))
        .current_dir(dir)
        .env_remove("PARITY_SHADOW_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_data_writes_exhaustive_parity5() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen-data", "--dataset", "parity5", "--out", "out"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("out/parity5.csv")).unwrap();
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn rank_words_puts_planted_word_first() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["rank-words", "--dataset", "parity5_5", "--out", "out"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("0111010100 1.000"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = run(dir.path(), &["rank-words", "--dataset", "parity5", "--set", "foo=1"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("foo"));
    assert_eq!(run(dir.path(), &["rank-words"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["rank-words", "--dataset", "missing.csv"]).status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{}").unwrap();
    assert_eq!(run(dir.path(), &["report", bad.to_str().unwrap()]).status.code(), Some(1));
    let v = run(dir.path(), &["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("result format 1"));
}

#[test]
fn env_selects_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_parity-shadow"))
        .current_dir(dir.path())
        .env("PARITY_SHADOW_OUT", "from-env")
        .args(["gen-data", "--dataset", "parity5"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/parity5.csv").is_file());
}

fn strip_timestamp(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["metadata"]["timestamp"] = serde_json::Value::Null;
    v
}

#[test]
fn train_native_is_reproducible_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train-native", "--dataset", "parity5", "--set", "native.epochs=20", "--set", "native.layers=2"];
    let mut a = args.to_vec();
    a.extend(["--out", "a"]);
    let mut b = args.to_vec();
    b.extend(["--out", "b"]);
    let (ra, rb) = (run(dir.path(), &a), run(dir.path(), &b));
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    let ja = fs::read_to_string(dir.path().join("a/train-native-parity5.json")).unwrap();
    let jb = fs::read_to_string(dir.path().join("b/train-native-parity5.json")).unwrap();
    let (mut va, mut vb) = (strip_timestamp(&ja), strip_timestamp(&jb));
    va["config"]["out"] = serde_json::Value::Null;
    vb["config"]["out"] = serde_json::Value::Null;
    assert_eq!(va, vb);

    let report = run(dir.path(), &["report", "a/train-native-parity5.json"]);
    assert!(report.status.success());
    let text = stdout(&report);
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(&header[2..], ["S42", "S123", "S456", "S789", "S1024", "Mean", "Std", "Best"]);
    assert_eq!(text, stdout(&run(dir.path(), &["report", "a/train-native-parity5.json"])));
    assert_eq!(stdout(&ra), stdout(&rb));

    // nothing outside the two output directories
    let mut entries: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    entries.sort();
    assert_eq!(entries, ["a", "b"]);
    assert!(dir.path().join("a/train-native-parity5-s42.clf").is_file());
}
