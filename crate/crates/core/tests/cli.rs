//! Drives the `emoaudit` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use emoaudit::pipeline::RunManifest;
use emoaudit::stats::{write_ratings_jsonl, GroupSpec};
use emoaudit::synthetic::synthetic_ratings;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_emoaudit"));
    c.env_remove("EMOAUDIT_API_KEY")
        .env_remove("EMOAUDIT_ADMIN_TOKEN")
        .env("RUST_LOG", "warn");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn audit(out: &Path, variants: &str) -> Output {
    let scenario = format!("mock:{}", data("toy.scenario.jsonl").display());
    run(&[
        "audit",
        "--in",
        data("toy200.jsonl").to_str().unwrap(),
        "--backend",
        &scenario,
        "--variants",
        variants,
        "--n",
        "40",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn audit_writes_variants_and_warm_rerun_matches() {
    let dir = tempfile::tempdir().unwrap();
    let o = audit(dir.path(), "rs,ca,cam");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = RunManifest::load(&dir.path().join("run.json")).unwrap();
    assert_eq!(first.files.keys().collect::<Vec<_>>(), ["RS", "CA", "CAM"]);
    for f in first.files.values() {
        assert!(dir.path().join(&f.path).exists());
    }

    let o = audit(dir.path(), "rs,ca,cam");
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("misses 0"), "{}", stdout(&o));
    let second = RunManifest::load(&dir.path().join("run.json")).unwrap();
    let hashes = |m: &RunManifest| m.files.values().map(|f| f.sha256.clone()).collect::<Vec<_>>();
    assert_eq!(hashes(&first), hashes(&second));
}

#[test]
fn audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let toy = data("toy200.jsonl");
    let o = run(&[
        "audit",
        "--in",
        toy.to_str().unwrap(),
        "--backend",
        "remote",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "missing API key is a configuration error");
    assert!(String::from_utf8_lossy(&o.stderr).contains("EMOAUDIT_API_KEY"));

    let o = run(&[
        "audit",
        "--in",
        "/nonexistent.jsonl",
        "--backend",
        "mock",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);

    let o = run(&["audit", "--in", toy.to_str().unwrap(), "--backend", "carrier-pigeon"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn audit_transport_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("down.jsonl");
    std::fs::write(&scenario, "{\"match\": {}, \"fail\": \"connection refused\"}\n").unwrap();
    let o = run(&[
        "audit",
        "--in",
        data("toy200.jsonl").to_str().unwrap(),
        "--backend",
        &format!("mock:{}", scenario.display()),
        "--n",
        "40",
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_eval_compares_variants() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&audit(dir.path(), "ca,cam")), 0);
    let m = RunManifest::load(&dir.path().join("run.json")).unwrap();
    let ca = dir.path().join(&m.files["CA"].path);
    let cam = dir.path().join(&m.files["CAM"].path);

    // a small sentiment set in the three-class label space
    let sent = dir.path().join("sent.jsonl");
    std::fs::write(
        &sent,
        "{\"id\":\"p1\",\"text\":\"what a wonderful day\",\"labels\":[\"positive\"],\"split\":\"test\"}\n\
         {\"id\":\"n1\",\"text\":\"this is awful\",\"labels\":[\"negative\"],\"split\":\"test\"}\n\
         {\"id\":\"u1\",\"text\":\"the bus is at noon\",\"labels\":[\"neutral\"],\"split\":\"test\"}\n",
    )
    .unwrap();
    let eval = dir.path().join("dd.jsonl");
    std::fs::write(
        &eval,
        "{\"id\":\"d1\",\"text\":\"so glad you came\",\"labels\":[\"happiness\"],\"split\":\"test\"}\n\
         {\"id\":\"d2\",\"text\":\"I am furious\",\"labels\":[\"anger\"],\"split\":\"test\"}\n",
    )
    .unwrap();
    let out = dir.path().join("te");
    let o = run(&[
        "train-eval",
        "--in",
        ca.to_str().unwrap(),
        "--in",
        cam.to_str().unwrap(),
        "--eval",
        &format!("dailydialog={}", eval.display()),
        "--sentiment",
        &format!("sst={}", sent.display()),
        "--epochs",
        "3",
        "--folds",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    let rows = |d: &str| table.lines().filter(|l| l.starts_with(d)).count();
    assert_eq!(rows("dailydialog"), 2, "{table}");
    assert_eq!(rows("in-domain"), 2);
    assert!(table.contains("sst"), "sentiment column missing:\n{table}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("train_eval.json")).unwrap()).unwrap();
    assert_eq!(report["variants"].as_array().unwrap().len(), 2);
    assert_eq!(std::fs::read_to_string(out.join("train_eval.txt")).unwrap(), table);

    // no bundled mapping for this name and no --mapping file
    let o = run(&[
        "train-eval",
        "--in",
        ca.to_str().unwrap(),
        "--eval",
        &format!("mystery={}", eval.display()),
    ]);
    assert_eq!(code(&o), 3);
    let o = run(&[
        "train-eval",
        "--in",
        ca.to_str().unwrap(),
        "--eval",
        &format!("dailydialog={}", eval.display()),
        "--mapping",
        "dailydialog=/nonexistent/map.json",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn stats_reports_groups_pairs_and_words() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.jsonl");
    let records = synthetic_ratings(&GroupSpec::default(), 30, 1, 3);
    write_ratings_jsonl(&records, std::fs::File::create(&ratings).unwrap()).unwrap();
    let out = dir.path().join("stats");
    let o = run(&[
        "stats",
        "--in",
        ratings.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(report["subjective"]["groups"].as_array().unwrap().len(), 18);
    assert_eq!(report["subjective"]["omnibus"]["df"], 17);
    assert_eq!(report["subjective"]["pairs"].as_array().unwrap().len(), 9);

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(
        code(&run(&[
            "stats",
            "--in",
            empty.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])),
        3
    );

    // word frequencies over a CAM file from a mock audit
    let run_dir = dir.path().join("run");
    assert_eq!(code(&audit(&run_dir, "ca,cam")), 0);
    let m = RunManifest::load(&run_dir.join("run.json")).unwrap();
    let cam = run_dir.join(&m.files["CAM"].path);
    let o = run(&[
        "stats",
        "--words",
        "--dataset",
        cam.to_str().unwrap(),
        "--emotion",
        "admiration",
        "--segment",
        "appended",
        "--top-k",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("top words for admiration"));
    assert!(text.lines().filter(|l| l.trim_end().ends_with('%')).count() <= 5);
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_survey(ca: &Path, cam: &Path, state: &Path, port: u16) -> Server {
    let child = bin()
        .args(["survey", "--ca", ca.to_str().unwrap(), "--cam", cam.to_str().unwrap()])
        .args([
            "--dir",
            state.to_str().unwrap(),
            "--port",
            &port.to_string(),
            "--batch-size",
            "5",
        ])
        .env("EMOAUDIT_ADMIN_TOKEN", "op-token")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    while std::net::TcpStream::connect(("127.0.0.1", port)).is_err() {
        assert!(Instant::now() < deadline, "survey did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    Server(child)
}

fn get_json(http: &reqwest::blocking::Client, url: &str) -> serde_json::Value {
    serde_json::from_str(&http.get(url).send().unwrap().text().unwrap()).unwrap()
}

#[cfg(unix)]
#[test]
fn survey_restart_after_sigterm_resumes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&audit(dir.path(), "ca,cam")), 0);
    let m = RunManifest::load(&dir.path().join("run.json")).unwrap();
    let (ca, cam) = (
        dir.path().join(&m.files["CA"].path),
        dir.path().join(&m.files["CAM"].path),
    );
    let state = dir.path().join("survey");
    let port = free_port();
    let base = format!("http://127.0.0.1:{port}");
    let http = reqwest::blocking::Client::new();

    let mut server = start_survey(&ca, &cam, &state, port);
    let session: serde_json::Value =
        serde_json::from_str(&http.post(format!("{base}/api/session")).send().unwrap().text().unwrap()).unwrap();
    let pid = session["participant_id"].as_str().unwrap().to_string();
    let batch = get_json(&http, &format!("{base}/api/survey/batch?participant={pid}"));
    let first_item = batch["items"][0]["item_id"].as_str().unwrap().to_string();
    let body = serde_json::json!({"participant_id": pid, "item_id": first_item, "rating": 5}).to_string();
    let r = http
        .post(format!("{base}/api/survey/response"))
        .header("content-type", "application/json")
        .body(body)
        .send()
        .unwrap();
    assert!(r.status().is_success());
    let bank = std::fs::read(state.join("bank.json")).unwrap();

    let status = Command::new("kill")
        .args(["-TERM", &server.0.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let exit = server.0.wait().unwrap();
    assert_eq!(exit.code(), Some(0), "graceful shutdown");

    // a second instance on the same port fails cleanly while the first runs
    let _server = start_survey(&ca, &cam, &state, port);
    let o = run(&[
        "survey",
        "--ca",
        ca.to_str().unwrap(),
        "--cam",
        cam.to_str().unwrap(),
        "--dir",
        dir.path().join("other").to_str().unwrap(),
        "--port",
        &port.to_string(),
    ]);
    assert_eq!(code(&o), 2);

    assert_eq!(std::fs::read(state.join("bank.json")).unwrap(), bank);
    let again = get_json(&http, &format!("{base}/api/survey/batch?participant={pid}"));
    assert_eq!(again, batch, "open batch survives the restart");
    let export = http
        .get(format!("{base}/api/export"))
        .header("authorization", "Bearer op-token")
        .send()
        .unwrap()
        .text()
        .unwrap();
    assert_eq!(export.lines().count(), 1);
    assert!(export.contains(&first_item));
}

#[test]
fn help_lists_flags_with_defaults() {
    for (sub, flags) in [
        (
            "audit",
            &[
                "--in",
                "--out",
                "--backend",
                "--model",
                "--seed",
                "--variants",
                "--n",
                "--api-base",
            ][..],
        ),
        (
            "train-eval",
            &[
                "--in",
                "--out",
                "--epochs",
                "--lr",
                "--threshold",
                "--mapping",
                "--sentiment",
                "--seed",
            ][..],
        ),
        (
            "stats",
            &[
                "--in",
                "--out",
                "--alpha",
                "--family",
                "--words",
                "--emotion",
                "--segment",
            ][..],
        ),
        ("survey", &["--ca", "--cam", "--port", "--dir"][..]),
    ] {
        let o = run(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
        assert!(text.contains("[default:"), "{sub} --help shows no defaults");
    }
}
