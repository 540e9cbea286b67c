use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde_json::Value;
use sleec_core::checker::{analyze, Budget, CheckConfig};

const BIN: &str = env!("CARGO_BIN_EXE_sleec");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn sleec(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("SLEEC_LLM_PROVIDER")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CLEAN: &str = "def_start event A event B def_end rule_start R when A then B within 1 minute rule_end";

#[test]
fn r1r2_check_finds_one_deadlock() {
    let o = sleec(&["check", fixture("r1r2.sleec").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("deadlock (R1, R2)"), "{out}");
    assert!(out.contains("<DetectUserFallen, emergencyLevel.L1, tock, tock>"), "{out}");
}

#[test]
fn clean_typo_and_unreadable_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sleec(&["check", &write(dir.path(), "clean.sleec", CLEAN)])), 0);

    let typo = std::fs::read_to_string(fixture("almi.sleec"))
        .unwrap()
        .replacen("when MedicationDue then", "when MedicatonDue then", 1);
    let o = sleec(&["check", &write(dir.path(), "typo.sleec", &typo)]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("error[naming]"), "{}", stdout(&o));
    assert!(stdout(&o).contains("did you mean `MedicationDue`"));

    let o = sleec(&["check", dir.path().join("missing.sleec").to_str().unwrap()]);
    assert_eq!(code(&o), 64);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));

    assert_eq!(code(&sleec(&["check"])), 64);
    assert_eq!(code(&sleec(&["--help"])), 0);
}

#[test]
fn check_json_is_one_deterministic_document() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.sleec", CLEAN);
    let broken = write(dir.path(), "broken.sleec", "def_start event A def_end rule_start R when then rule_end");
    for path in [
        fixture("r1r2.sleec").to_str().unwrap().to_string(),
        fixture("almi.sleec").to_str().unwrap().to_string(),
        clean,
        broken,
    ] {
        let a = sleec(&["check", "--json", &path]);
        let b = sleec(&["check", "--json", &path]);
        assert_eq!(a.stdout, b.stdout, "{path}");
        let doc: Value = serde_json::from_slice(&a.stdout).unwrap();

        // Same verdict shape as the library, and therefore the service.
        let text = std::fs::read_to_string(&path).unwrap();
        let expected = analyze(&text, &CheckConfig::default(), &Budget::unlimited());
        assert_eq!(doc["verdicts"], serde_json::to_value(&expected.verdicts).unwrap(), "{path}");
        assert_eq!(doc["diagnostics"], serde_json::to_value(&expected.diagnostics).unwrap(), "{path}");
    }
}

#[test]
fn check_flags_reach_the_checker() {
    let r1r2 = fixture("r1r2.sleec");
    let o = sleec(&["check", "--json", "--no-elide-tocks", "--horizon", "4", r1r2.to_str().unwrap()]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let trace = doc["verdicts"][0]["trace"].as_str().unwrap();
    assert!(trace.starts_with("<DetectUserFallen, emergencyLevel.L1, tock, tock"), "{trace}");
    // Too short a horizon cannot reach the deadline.
    let o = sleec(&["check", "--json", "--horizon", "1", r1r2.to_str().unwrap()]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["verdicts"], serde_json::json!([]));
    assert_eq!(code(&sleec(&["check", "--max-env-events", "2", r1r2.to_str().unwrap()])), 1);
}

#[test]
fn explain_with_mock_provider() {
    let r1r2 = fixture("r1r2.sleec");
    let o = sleec(&["explain", "--mock", r1r2.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["Conflicting Rules"]["Error"]["Category"], "deadlock");

    let o = sleec(&["explain", "--mock", "--verdict", "9", r1r2.to_str().unwrap()]);
    assert_eq!(code(&o), 65);

    let dir = tempfile::tempdir().unwrap();
    let o = sleec(&["explain", "--mock", &write(dir.path(), "clean.sleec", CLEAN)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("nothing to explain"));

    let o = sleec(&[
        "explain",
        "--mock",
        "--system-description",
        fixture("almi_description.txt").to_str().unwrap(),
        fixture("almi.sleec").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["Conflicting Rules"]["Resolution"]["Kind"], "combine rule");
}

#[test]
fn fmt_is_idempotent_and_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let almi = fixture("almi.sleec");
    let once = sleec(&["fmt", almi.to_str().unwrap()]);
    assert_eq!(code(&once), 0);
    let formatted = write(dir.path(), "f.sleec", &stdout(&once));
    let twice = sleec(&["fmt", &formatted]);
    assert_eq!(stdout(&once), stdout(&twice));

    assert_eq!(code(&sleec(&["fmt", "--check", &formatted])), 0);
    assert_eq!(code(&sleec(&["fmt", "--check", almi.to_str().unwrap()])), 1);

    let empty = write(dir.path(), "e.sleec", "def_start def_end rule_start rule_end");
    assert_eq!(stdout(&sleec(&["fmt", &empty])), "def_start\ndef_end\nrule_start\nrule_end\n");

    let loose = write(dir.path(), "loose.sleec", CLEAN);
    assert_eq!(code(&sleec(&["fmt", "--write", &loose])), 0);
    assert_eq!(code(&sleec(&["fmt", "--check", &loose])), 0);

    // Comments would be lost, so the file is left alone.
    let commented = write(dir.path(), "c.sleec", &format!("// keep me\n{CLEAN}"));
    assert_eq!(code(&sleec(&["fmt", "--write", &commented])), 2);
    assert!(std::fs::read_to_string(dir.path().join("c.sleec")).unwrap().starts_with("// keep me"));

    let bad = write(dir.path(), "bad.sleec", "def_start event def_end");
    assert_eq!(code(&sleec(&["fmt", &bad])), 2);
}

fn http(addr: &str, method: &str, path: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(s, "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    resp
}

struct Server {
    child: Child,
    addr: String,
    log: mpsc::Receiver<String>,
}

fn start(args: &[&str]) -> Server {
    let mut child = Command::new(BIN)
        .arg("serve")
        .args(args)
        .env_remove("RUST_LOG")
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let (tx, rx) = mpsc::channel();
    let stderr = child.stderr.take().unwrap();
    std::thread::spawn(move || {
        for line in BufReader::new(stderr).lines().map_while(Result::ok) {
            let _ = tx.send(line);
        }
    });
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let line = rx
            .recv_timeout(deadline.saturating_duration_since(Instant::now()))
            .expect("server did not report its address");
        if let Some(at) = line.find("listening on http://") {
            let rest = &line[at + "listening on http://".len()..];
            let addr = rest.split_whitespace().next().unwrap().to_string();
            return Server { child, addr, log: rx };
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn interrupt(pid: u32) {
    let ok = Command::new("kill").args(["-INT", &pid.to_string()]).status().unwrap().success();
    assert!(ok);
}

#[test]
fn serve_answers_health_and_shuts_down_on_sigint() {
    let data = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut server = start(&["--port", &port.to_string(), "--mock", "--data-dir", data.path().to_str().unwrap()]);
    assert_eq!(server.addr, format!("127.0.0.1:{port}"));

    let health = http(&server.addr, "GET", "/api/health");
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.contains("\"status\":\"ok\""));
    let created = http(&server.addr, "POST", "/api/sessions");
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");

    interrupt(server.child.id());
    let deadline = Instant::now() + Duration::from_secs(20);
    let status = loop {
        if let Some(s) = server.child.try_wait().unwrap() {
            break s;
        }
        assert!(Instant::now() < deadline, "server ignored SIGINT");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(status.success(), "{status:?}");
    let rest: Vec<String> = server.log.iter().collect();
    assert!(rest.iter().any(|l| l.contains("server stopped")), "{rest:?}");
    let logs: Vec<_> = std::fs::read_dir(data.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "jsonl"))
        .collect();
    assert_eq!(logs.len(), 1);
}
