//! Smoke tests for the command-line interface, driving the built binary.

use std::io::Write;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pirsi"))
}

fn run_with_stdin(args: &[&str], stdin: &[u8]) -> (String, String, bool) {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.as_mut().unwrap().write_all(stdin).unwrap();
    let out = child.wait_with_output().unwrap();
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.success(),
    )
}

#[test]
fn capacity_and_plan_print_rationals() {
    let out = bin().args(["capacity", "10", "2", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "2/7 (lower bound)\n"
    );

    let out = bin().args(["capacity", "5", "2", "1"]).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1/2 (exact)\n");

    let out = bin().args(["plan", "5", "2", "2"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("grs") && text.contains("3 symbols"), "{text}");
}

#[test]
fn query_answer_decode_pipeline_recovers_demands() {
    let dir = tempfile::tempdir().unwrap();
    let db_path = dir.path().join("db.txt");
    std::fs::write(&db_path, "5 1 10\n4\n2\n1\n3\n0\n2\n4\n1\n3\n2\n").unwrap();

    let out = bin()
        .args([
            "query", "10", "2", "2", "--w", "3,4", "--s", "5,8", "--seed", "7", "--q", "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let query_line = String::from_utf8(out.stdout).unwrap();
    assert!(query_line.starts_with(r#"{"type":"query","protocol":"gpc","q":5"#));
    // the wire query must carry nothing but the canonical partition and
    // row counts
    assert!(!query_line.contains('w') || !query_line.contains("\"w\""));

    let (answer_line, _, ok) = run_with_stdin(
        &["answer", db_path.to_str().unwrap()],
        query_line.as_bytes(),
    );
    assert!(ok);
    assert!(answer_line.starts_with(r#"{"type":"answer""#));

    let xs_path = dir.path().join("xs.txt");
    std::fs::write(&xs_path, "5 0\n8 1\n").unwrap();
    let both = format!("{query_line}{answer_line}");
    let (decoded, stderr, ok) = run_with_stdin(
        &[
            "decode",
            "--w",
            "3,4",
            "--s",
            "5,8",
            "--side-info",
            xs_path.to_str().unwrap(),
        ],
        both.as_bytes(),
    );
    assert!(ok, "stderr: {stderr}");
    assert_eq!(decoded, "3 1\n4 3\n"); // X_3 = 1, X_4 = 3 in the fixture
}

#[test]
fn grs_query_is_independent_of_demand_flags() {
    let a = bin()
        .args(["query", "5", "2", "1", "--w", "1,2", "--s", "3", "--q", "7"])
        .output()
        .unwrap();
    let b = bin()
        .args(["query", "5", "2", "1", "--w", "4,5", "--s", "1", "--q", "7"])
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("\"grs\""));
}

#[test]
fn privacy_check_exact_passes() {
    let out = bin()
        .args(["privacy-check", "5", "2", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS"), "{text}");
    assert!(text.contains("posterior uniform at 1/10"), "{text}");
}

#[test]
fn audit_reports_witnesses_and_full_recovery() {
    let query = bin()
        .args([
            "query",
            "6",
            "2",
            "2",
            "--w",
            "1,2",
            "--s",
            "3,4",
            "--q",
            "7",
            "--protocol",
            "gpc",
        ])
        .output()
        .unwrap();
    let (text, stderr, ok) = run_with_stdin(&["audit", "--d", "2", "--m-side", "2"], &query.stdout);
    assert!(ok, "stderr: {stderr}");
    assert!(text.contains("necessary condition: PASS"), "{text}");
}

#[test]
fn bench_renders_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(
        &config,
        "q = 13\nm = 1\ntrials = 2\nseed = 42\ninstances = [[10,2,2],[5,2,2],[8,3,1]]\n",
    )
    .unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = bin()
        .args([
            "bench",
            config.to_str().unwrap(),
            "--csv",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("protocol"), "{table}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.lines().count() == 4);
    assert!(csv.contains("10,2,2,gpc,7,2/7,2/7 (lb),match,ok"), "{csv}");
    assert!(csv.contains("5,2,2,grs,3,2/3,2/3 (lb),match,ok"), "{csv}");
    assert!(csv.contains("8,3,1,grs,7,3/7,3/7,match,ok"), "{csv}");
}

#[test]
fn serve_and_fetch_round_trip() {
    use std::net::TcpListener;
    let dir = tempfile::tempdir().unwrap();
    let db_path = dir.path().join("db.txt");
    std::fs::write(&db_path, "7 1 5\n3\n1\n4\n1\n5\n").unwrap();

    // reserve a free port, then hand it to the server process
    let port = {
        let probe = TcpListener::bind("127.0.0.1:0").unwrap();
        probe.local_addr().unwrap().port()
    };
    let addr = format!("127.0.0.1:{port}");
    let mut server = bin()
        .args(["serve", db_path.to_str().unwrap(), &addr])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    // wait for the listener to come up
    let mut connected = false;
    for _ in 0..100 {
        if std::net::TcpStream::connect(&addr).is_ok() {
            connected = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
    assert!(connected, "server did not come up");

    let query = bin()
        .args(["query", "5", "2", "1", "--w", "2,3", "--s", "1", "--q", "7"])
        .output()
        .unwrap();
    let (answer, stderr, ok) = run_with_stdin(&["fetch", &addr], &query.stdout);
    assert!(ok, "stderr: {stderr}");
    // 4 = K - M downloaded symbols
    let parsed: serde_json::Value = serde_json::from_str(answer.trim()).unwrap();
    assert_eq!(parsed["symbols"].as_array().unwrap().len(), 4);

    server.kill().unwrap();
    let _ = server.wait();
}
