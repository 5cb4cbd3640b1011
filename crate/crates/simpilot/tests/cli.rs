use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

fn demo(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../exercises/demo").join(file)
}

fn simpilot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simpilot"))
}

#[test]
fn run_reads_stdin_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let tts = dir.path().join("tts.txt");
    let mut child = simpilot()
        .args(["run", "--logical-clock", "--config"])
        .arg(demo("exercise.cfg"))
        .arg("--log-dir")
        .arg(dir.path().join("logs"))
        .arg("--tts-out")
        .arg(&tts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"ryanair nine two bravo quebec turn right heading zero nine zero\ngood morning\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with("ryanair nine two bravo quebec"));
    let log = std::fs::read_to_string(dir.path().join("logs/session-0001.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert_eq!(std::fs::read_to_string(&tts).unwrap().lines().count(), 1);
}

#[test]
fn eval_reports_metrics() {
    let out = simpilot()
        .args(["eval", "--format", "kv", "--ref"])
        .arg(demo("ref.txt"))
        .arg("--hyp")
        .arg(demo("hyp.txt"))
        .arg("--surveillance")
        .arg(demo("radar.txt"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("utterances=5\n"));
    assert!(text.contains("callsign_acc=100.0\n"));

    let direct = simpilot()
        .args(["eval", "--format", "kv", "--ref"])
        .arg(demo("ref.txt"))
        .arg("--hyp")
        .arg(demo("hyp.txt"))
        .output()
        .unwrap();
    assert!(String::from_utf8(direct.stdout).unwrap().contains("callsign_acc=80.0\n"));
}

#[test]
fn eval_rejects_mismatched_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.txt");
    std::fs::write(&hyp, "one line\n").unwrap();
    let out = simpilot().args(["eval", "--ref"]).arg(demo("ref.txt")).arg("--hyp").arg(&hyp).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("5 reference lines but 1 hypothesis lines"));
}

#[test]
fn boostlist_modes() {
    let ngram = simpilot().args(["boostlist", "--mode", "ngram", "--surveillance"]).arg(demo("radar.txt")).output().unwrap();
    assert!(ngram.status.success());
    let text = String::from_utf8(ngram.stdout).unwrap();
    assert!(text.lines().any(|l| l == "six lima yankee\t1"));

    let unigram =
        simpilot().args(["boostlist", "--mode", "unigram", "--surveillance"]).arg(demo("radar.txt")).output().unwrap();
    let text = String::from_utf8(unigram.stdout).unwrap();
    assert!(text.lines().all(|l| !l.split('\t').next().unwrap().contains(' ')));

    let bad = simpilot().args(["boostlist", "--mode", "trigram", "--surveillance"]).arg(demo("radar.txt")).output().unwrap();
    assert!(!bad.status.success());
}
