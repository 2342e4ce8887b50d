use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

const TABLES: &str = r#"[
 {"db_id": "school_bus",
  "table_names_original": ["driver", "school"],
  "table_names": ["driver", "school"],
  "column_names_original": [[-1, "*"], [0, "Driver_ID"], [0, "Name"], [0, "Age"], [1, "School_ID"], [1, "School"]],
  "column_names": [[-1, "*"], [0, "driver id"], [0, "name"], [0, "age"], [1, "school id"], [1, "school"]],
  "column_types": ["text", "number", "text", "number", "number", "text"],
  "primary_keys": [1, 4], "foreign_keys": []}
]"#;

const EXAMPLES: &str = r#"[
 {"db_id": "school_bus", "question": "Show the names of all drivers.", "query": "SELECT name FROM driver"},
 {"db_id": "school_bus", "question": "List all schools.", "query": "SELECT school FROM school"}
]"#;

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tables.json"), TABLES).unwrap();
    fs::write(dir.path().join("dev.json"), EXAMPLES).unwrap();
    dir
}

fn sqlbias(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqlbias"))
        .current_dir(dir)
        .env("SQLBIAS_JUDGE_TOKEN", "secret")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Serves chat-completions requests with a fixed status and answer until the
/// test exits. Returns the URL and the request counter.
fn mock_endpoint(status: u16, answer: &'static str) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut authorized = false;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization: bearer secret") {
                    authorized = true;
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let request: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let prompt = request["messages"][0]["content"].as_str().unwrap_or_default();
            let reply = if prompt.contains("school") && !prompt.contains("driver") { "No." } else { answer };
            let payload = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
            let code = if authorized { status } else { 401 };
            let response = format!(
                "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
    });
    (url, hits)
}

#[test]
fn llm_judge_uses_endpoint_then_cache() {
    let dir = workspace();
    let (url, hits) = mock_endpoint(200, "Yes, the main object is human.");
    let args = [
        "judge", "--judge-mode", "llm", "--endpoint", &url, "--schemas", "tables.json", "--examples", "dev.json",
        "--cache", "cache.jsonl", "--out", "j",
    ];
    let cold = sqlbias(dir.path(), &args);
    assert!(cold.status.success(), "{}", String::from_utf8_lossy(&cold.stderr));
    assert!(stdout(&cold).contains("client calls: 4"), "{}", stdout(&cold));
    assert!(stdout(&cold).contains("human tables: 1"));
    assert_eq!(hits.load(Ordering::SeqCst), 4);

    let warm = sqlbias(dir.path(), &args);
    assert!(warm.status.success());
    assert!(stdout(&warm).contains("client calls: 0"));
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}

#[test]
fn failing_endpoint_exits_3() {
    let dir = workspace();
    let (url, _) = mock_endpoint(500, "Yes.");
    let out = sqlbias(
        dir.path(),
        &["judge", "--judge-mode", "llm", "--endpoint", &url, "--schemas", "tables.json", "--examples", "dev.json", "--out", "j"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = workspace();
    for args in [
        &["build", "--versions", "v4", "--schemas", "tables.json"][..],
        &["judge", "--judge-mode", "llm", "--schemas", "tables.json", "--examples", "dev.json", "--out", "j"],
        &["judge", "--schemas", "missing.json", "--examples", "dev.json", "--out", "j"],
        &["judge", "--no-such-flag"],
    ] {
        let out = sqlbias(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn build(dir: &Path) -> PathBuf {
    let judge = sqlbias(
        dir,
        &["judge", "--judge-mode", "lexicon", "--schemas", "tables.json", "--examples", "dev.json", "--out", "j"],
    );
    assert!(judge.status.success());
    let build = sqlbias(
        dir,
        &[
            "build", "--judgments", "j", "--schemas", "tables.json", "--examples", "dev.json", "--versions", "v1",
            "--modifiers", "comparative", "--out", "bench",
        ],
    );
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    dir.join("bench").join("v1")
}

#[test]
fn evaluate_fail_over_and_length_mismatch() {
    let dir = workspace();
    build(dir.path());
    let biased = "SELECT name FROM driver WHERE ethnicity = 'Black'\nSELECT name FROM driver\nSELECT name FROM driver\nSELECT name FROM driver\n";
    fs::write(dir.path().join("p.sql"), biased).unwrap();
    let args = ["evaluate", "--benchmark", "bench/v1", "--predictions", "m=p.sql", "--out", "report"];
    let ok = sqlbias(dir.path(), &args);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("25.00"), "{}", stdout(&ok));

    let mut gated = args.to_vec();
    gated.extend(["--fail-over", "20"]);
    assert_eq!(sqlbias(dir.path(), &gated).status.code(), Some(1));
    let last = gated.len() - 1;
    gated[last] = "30";
    assert_eq!(sqlbias(dir.path(), &gated).status.code(), Some(0));

    fs::write(dir.path().join("p.sql"), "SELECT 1\n").unwrap();
    let short = sqlbias(dir.path(), &args);
    assert_eq!(short.status.code(), Some(1));
    let err = String::from_utf8_lossy(&short.stderr);
    assert!(err.contains("1 predictions") && err.contains("4 examples"), "{err}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = workspace();
    build(dir.path());
    fs::write(
        dir.path().join("run.toml"),
        "examples = [\"dev.json\"]\nmodifiers = [\"roberta_neg\"]\n",
    )
    .unwrap();
    let out = sqlbias(dir.path(), &["neutrality", "--config", "run.toml", "--modifiers", "comparative"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("comparative") && !text.contains("roberta_neg"), "{text}");
}

#[test]
fn exemplars_prints_ranked_json() {
    let dir = workspace();
    let out = sqlbias(
        dir.path(),
        &["exemplars", "--examples", "dev.json", "--question", "List all schools.", "--k", "1"],
    );
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value[0]["pool_index"], 1);
}
