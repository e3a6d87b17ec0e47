use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::sync::OnceLock;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use ghostkey_core::bloom::bf_params;
use ghostkey_core::generator::{generate, Action, GeneratorConfig};
use ghostkey_core::presets::Resources;
use ghostkey_core::rng::derive;
use ghostkey_service::protocol::Response;
use ghostkey_service::{Server, ServiceConfig, ShutdownHandle};
use serde_json::json;

fn resources() -> Resources {
    static R: OnceLock<Resources> = OnceLock::new();
    R.get_or_init(Resources::default_trained).clone()
}

fn config(dir: &Path, seed: u64) -> ServiceConfig {
    let mut c = ServiceConfig::new("127.0.0.1:0", dir);
    c.seed = seed;
    c.detector.iterations = 10;
    c.detector.bloom = bf_params(10_000, 1e-9).unwrap();
    c
}

struct Running {
    addr: SocketAddr,
    handle: ShutdownHandle,
    thread: JoinHandle<()>,
}

impl Running {
    fn start(config: ServiceConfig) -> Self {
        let server = Server::start_with(config, resources()).unwrap();
        let addr = server.local_addr().unwrap();
        let handle = server.shutdown_handle();
        let thread = thread::spawn(move || server.run().unwrap());
        Self { addr, handle, thread }
    }

    fn stop(self) {
        self.handle.shutdown();
        self.thread.join().unwrap();
    }
}

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: u64,
}

impl Client {
    fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
        Self { reader: BufReader::new(s.try_clone().unwrap()), writer: s, next_id: 0 }
    }

    fn raw(&mut self, line: &str) -> String {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
        let mut out = String::new();
        self.reader.read_line(&mut out).unwrap();
        out
    }

    fn call(&mut self, mut msg: serde_json::Value) -> Response {
        self.next_id += 1;
        msg["request_id"] = json!(self.next_id.to_string());
        let line = self.raw(&msg.to_string());
        let r: Response = serde_json::from_str(&line).unwrap();
        assert_eq!(r.request_id, self.next_id.to_string());
        r
    }

    /// Types `password` through a full session and returns the keystrokes.
    fn type_password(&mut self, user: &str, password: &str) -> (String, String) {
        let r = self.call(json!({"op": "session_start", "user": user}));
        assert!(r.ok, "{r:?}");
        let session = r.session.clone().unwrap();
        let mut action = r.parsed_action().unwrap();
        let mut typed = String::new();
        let mut real = password.chars();
        loop {
            let key = match action {
                Action::Done => break,
                Action::RequireGhost(g) => g,
                Action::AwaitReal => match real.next() {
                    Some(c) => c,
                    None => {
                        let r = self.call(json!({"op": "session_finalize", "session": session}));
                        assert!(r.ok, "{r:?}");
                        action = r.parsed_action().unwrap();
                        continue;
                    }
                },
            };
            typed.push(key);
            let r = self.call(json!({"op": "session_key", "session": session, "char": key.to_string()}));
            assert!(r.ok, "{r:?}");
            action = r.parsed_action().unwrap();
            if action == Action::AwaitReal && real.as_str().is_empty() {
                let r = self.call(json!({"op": "session_finalize", "session": session}));
                assert!(r.ok, "{r:?}");
                action = r.parsed_action().unwrap();
            }
        }
        (session, typed)
    }
}

#[test]
fn register_and_login() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 1));
    let mut c = Client::connect(server.addr);
    assert!(c.call(json!({"op": "register", "user": "alice", "password": "correcthorse"})).ok);
    assert_eq!(c.call(json!({"op": "register", "user": "alice", "password": "correcthorse"})).error.as_deref(), Some("user_exists"));
    assert_eq!(c.call(json!({"op": "register", "user": "bob", "password": "abc"})).error.as_deref(), Some("invalid_password"));
    assert!(c.call(json!({"op": "login", "user": "alice", "password": "correcthorse"})).ok);
    assert!(!c.call(json!({"op": "login", "user": "alice", "password": "wrong-horse"})).ok);
    assert_eq!(c.call(json!({"op": "admin_alarms"})).events, Some(vec![]));
    let doc = c.call(json!({"op": "layout"})).document.unwrap();
    assert!(doc.lines().any(|l| l.starts_with("q\t")));
    server.stop();
}

#[test]
fn scripted_session_matches_batch_and_ghost_replay_alarms() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 77));
    let mut c = Client::connect(server.addr);
    assert!(c.call(json!({"op": "register", "user": "carol", "password": "password1"})).ok);
    let (session, typed) = c.type_password("carol", "password1");

    // First session on this server: seed derive(77, 0).
    let res = resources();
    let cfg = GeneratorConfig { rng_seed: derive(77, 0), ..Default::default() };
    let batch = generate(&cfg, "password1", &res.model, &res.meter, &res.layout).unwrap();
    assert_eq!(typed, batch.ghost);

    assert!(c.call(json!({"op": "login", "user": "carol", "password": "password1", "session": session})).ok);

    // An observer replays the full keystroke string.
    let mut other = Client::connect(server.addr);
    let alarm = other.raw(&json!({"op": "login", "request_id": "z", "user": "carol", "password": typed}).to_string());
    let wrong = other.raw(&json!({"op": "login", "request_id": "z", "user": "carol", "password": "passw0rd1"}).to_string());
    let unknown = other.raw(&json!({"op": "login", "request_id": "z", "user": "nobody", "password": typed}).to_string());
    assert_eq!(alarm, wrong);
    assert_eq!(alarm, unknown);
    assert_eq!(alarm, "{\"request_id\":\"z\",\"ok\":false}\n");
    let events = other.call(json!({"op": "admin_alarms"})).events.unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].user, "carol");
    server.stop();
}

#[test]
fn wrong_ghost_key_keeps_session() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 3));
    let mut c = Client::connect(server.addr);
    let r = c.call(json!({"op": "session_start", "user": "dave"}));
    let session = r.session.clone().unwrap();
    let mut action = r.parsed_action().unwrap();
    let mut real = "sunshine42".chars();
    let mut checked = false;
    while action != Action::Done {
        let key = match action {
            Action::RequireGhost(g) => {
                if !checked {
                    let bad = if g == 'a' { 'b' } else { 'a' };
                    let r = c.call(json!({"op": "session_key", "session": session, "char": bad.to_string()}));
                    assert_eq!(r.error.as_deref(), Some("ghost_mismatch"));
                    let r = c.call(json!({"op": "session_finalize", "session": session}));
                    assert_eq!(r.error.as_deref(), Some("protocol"));
                    checked = true;
                }
                g
            }
            Action::AwaitReal => match real.next() {
                Some(k) => k,
                None => {
                    action = c.call(json!({"op": "session_finalize", "session": session})).parsed_action().unwrap();
                    continue;
                }
            },
            Action::Done => unreachable!(),
        };
        let r = c.call(json!({"op": "session_key", "session": session, "char": key.to_string()}));
        assert!(r.ok, "{r:?}");
        action = r.parsed_action().unwrap();
    }
    assert!(checked);
    let r = c.call(json!({"op": "session_key", "session": session, "char": "x"}));
    assert_eq!(r.error.as_deref(), Some("protocol"));
    server.stop();
}

#[test]
fn finalize_tops_up_minimum_ghosts() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 12));
    let mut c = Client::connect(server.addr);
    for i in 0..10 {
        let (_, typed) = c.type_password(&format!("u{i}"), "abcde");
        assert!(typed.len() >= 5 + 2, "{typed}");
    }
    server.stop();
}

#[test]
fn malformed_and_out_of_order_requests() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 1));
    let mut c = Client::connect(server.addr);
    let r: Response = serde_json::from_str(&c.raw("{not json")).unwrap();
    assert_eq!((r.request_id.as_str(), r.error.as_deref()), ("?", Some("malformed")));
    let r: Response = serde_json::from_str(&c.raw(r#"{"op":"register"}"#)).unwrap();
    assert_eq!(r.request_id, "?");
    let r: Response = serde_json::from_str(&c.raw(r#"{"op":"teleport","request_id":"q"}"#)).unwrap();
    assert_eq!((r.request_id.as_str(), r.error.as_deref()), ("q", Some("malformed")));
    assert_eq!(c.call(json!({"op": "session_key", "session": "s0", "char": "a"})).error.as_deref(), Some("no_session"));
    assert_eq!(c.call(json!({"op": "session_finalize", "session": "s9"})).error.as_deref(), Some("no_session"));
    let s = c.call(json!({"op": "session_start", "user": "erin"})).session.unwrap();
    assert!(!c.call(json!({"op": "session_key", "session": s, "char": "ab"})).ok);
    // Still connected and serving.
    assert!(c.call(json!({"op": "register", "user": "erin", "password": "hello-world"})).ok);
    server.stop();
}

#[test]
fn sessions_are_bound_to_their_connection() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 1));
    let mut a = Client::connect(server.addr);
    let mut b = Client::connect(server.addr);
    let s = a.call(json!({"op": "session_start", "user": "frank"})).session.unwrap();
    assert_eq!(b.call(json!({"op": "session_finalize", "session": s})).error.as_deref(), Some("no_session"));
    server.stop();
}

#[test]
fn idle_sessions_expire() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 1);
    cfg.session_timeout = Duration::from_millis(200);
    let server = Running::start(cfg);
    let mut c = Client::connect(server.addr);
    let s = c.call(json!({"op": "session_start", "user": "gina"})).session.unwrap();
    thread::sleep(Duration::from_millis(500));
    assert_eq!(c.call(json!({"op": "session_finalize", "session": s})).error.as_deref(), Some("no_session"));
    server.stop();
}

#[test]
fn restart_keeps_credentials_and_honeywords() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 5));
    let mut c = Client::connect(server.addr);
    assert!(c.call(json!({"op": "register", "user": "hank", "password": "letmein99"})).ok);
    let (session, typed) = c.type_password("hank", "letmein99");
    assert!(c.call(json!({"op": "login", "user": "hank", "password": "letmein99", "session": session})).ok);
    drop(c);
    server.stop();

    let server = Running::start(config(dir.path(), 5));
    let mut c = Client::connect(server.addr);
    assert!(c.call(json!({"op": "login", "user": "hank", "password": "letmein99"})).ok);
    assert!(!c.call(json!({"op": "login", "user": "hank", "password": typed})).ok);
    assert_eq!(c.call(json!({"op": "admin_alarms"})).events.unwrap().len(), 1);
    server.stop();

    let server = Running::start(config(dir.path(), 5));
    let mut c = Client::connect(server.addr);
    assert_eq!(c.call(json!({"op": "admin_alarms"})).events.unwrap().len(), 1);
    server.stop();
}

#[test]
fn rebuild_clears_honeywords() {
    let dir = tempfile::tempdir().unwrap();
    let server = Running::start(config(dir.path(), 6));
    let mut c = Client::connect(server.addr);
    assert!(c.call(json!({"op": "register", "user": "ivy", "password": "trustno1!"})).ok);
    let (_, typed) = c.type_password("ivy", "trustno1!");
    assert!(c.call(json!({"op": "login", "user": "ivy", "password": "trustno1!"})).ok);
    assert_eq!(c.call(json!({"op": "admin_rebuild", "expected_n": 0, "target_fpr": 0.01})).error.as_deref(), Some("invalid_params"));
    assert!(c.call(json!({"op": "admin_rebuild", "expected_n": 1000, "target_fpr": 0.001})).ok);
    assert!(!c.call(json!({"op": "login", "user": "ivy", "password": typed})).ok);
    assert_eq!(c.call(json!({"op": "admin_alarms"})).events.unwrap().len(), 0);
    server.stop();
}

#[test]
fn start_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 1);
    cfg.preset = "turbo".into();
    assert_eq!(Server::start_with(cfg, resources()).err().unwrap().exit_code(), 2);

    std::fs::write(dir.path().join("filter.vrbf"), b"garbage").unwrap();
    let err = Server::start_with(config(dir.path(), 1), resources()).err().unwrap();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("filter.vrbf"));
}
