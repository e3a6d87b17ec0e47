//! Authentication service with server-driven ghost-typing sessions.
//!
//! Each TCP connection carries newline-delimited JSON requests (see
//! [`protocol`]). A connection owns at most one typing session; the
//! credential store is shared by all connections behind a mutex.

pub mod protocol;

use std::io::{self, ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use ghostkey_core::bloom::{BloomConfig, DEFAULT_MEMORY_CAP};
use ghostkey_core::detector::{valid_user_id, DetectorConfig, DetectorError, DetectorStore, LoginVerdict};
use ghostkey_core::generator::{Action, GeneratorConfig, GeneratorError, GhostResult, Session};
use ghostkey_core::oracle::{GuessOracle, OracleConfig};
use ghostkey_core::presets::{generator_preset, Resources};
use ghostkey_core::rng::derive;
use thiserror::Error;

use protocol::{parse_request, AlarmRecord, Request, Response, UNKNOWN_REQUEST_ID};

pub const ENV_BIND: &str = "GHOSTKEY_BIND";
pub const ENV_STORE_DIR: &str = "GHOSTKEY_STORE_DIR";
pub const ENV_PRESET: &str = "GHOSTKEY_PRESET";

pub const DEFAULT_BIND: &str = "127.0.0.1:7878";
pub const DEFAULT_STORE_DIR: &str = "ghostkey-store";
pub const DEFAULT_SESSION_TIMEOUT: Duration = Duration::from_secs(120);

/// Longest accepted request line, in bytes.
pub const MAX_LINE: usize = 64 * 1024;

const POLL_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error(transparent)]
    Store(#[from] DetectorError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl ServiceError {
    /// Process exit code: 2 for configuration problems, 3 for a corrupt
    /// store, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Config(_) | ServiceError::Bind { .. } => 2,
            ServiceError::Store(DetectorError::Corrupt { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: String,
    pub store_dir: PathBuf,
    /// Generator preset name; see [`ghostkey_core::presets::PRESET_NAMES`].
    pub preset: String,
    /// Root seed for typing sessions and password salts.
    pub seed: u64,
    pub session_timeout: Duration,
    pub detector: DetectorConfig,
}

impl ServiceConfig {
    pub fn new(bind: impl Into<String>, store_dir: impl Into<PathBuf>) -> Self {
        let bloom = BloomConfig::sized(1_000_000, 1e-6, DEFAULT_MEMORY_CAP).expect("default filter size is valid");
        Self {
            bind: bind.into(),
            store_dir: store_dir.into(),
            preset: "default".into(),
            seed: 0,
            session_timeout: DEFAULT_SESSION_TIMEOUT,
            detector: DetectorConfig::new(bloom),
        }
    }

    /// Defaults overridden by `GHOSTKEY_BIND`, `GHOSTKEY_STORE_DIR` and
    /// `GHOSTKEY_PRESET`.
    pub fn from_env() -> Self {
        let var = |k: &str, d: &str| std::env::var(k).unwrap_or_else(|_| d.to_string());
        let mut c = Self::new(var(ENV_BIND, DEFAULT_BIND), var(ENV_STORE_DIR, DEFAULT_STORE_DIR));
        c.preset = var(ENV_PRESET, "default");
        c
    }
}

struct Shared {
    resources: Resources,
    oracle: GuessOracle,
    generator: GeneratorConfig,
    session_timeout: Duration,
    store: Mutex<DetectorStore>,
    sessions_started: AtomicU64,
}

/// A bound, not yet running, service.
pub struct Server {
    listener: TcpListener,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
}

/// Stops a running [`Server`] from another thread.
#[derive(Clone)]
pub struct ShutdownHandle {
    stop: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
    }
}

impl Server {
    /// Loads the store, builds the model and binds the listener.
    pub fn start(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::start_with(config, Resources::default_trained())
    }

    pub fn start_with(config: ServiceConfig, resources: Resources) -> Result<Self, ServiceError> {
        let mut generator = generator_preset(&config.preset)
            .ok_or_else(|| ServiceError::Config(format!("unknown preset {:?}", config.preset)))?;
        generator.rng_seed = config.seed;
        generator.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        if config.session_timeout.is_zero() {
            return Err(ServiceError::Config("session timeout must be positive".into()));
        }
        let store = DetectorStore::open(&config.store_dir, config.detector.clone(), config.seed)?;
        let oracle = GuessOracle::new(resources.model.clone(), OracleConfig::default())
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        let listener = TcpListener::bind(&config.bind).map_err(|source| ServiceError::Bind { addr: config.bind.clone(), source })?;
        log::info!("listening on {}", listener.local_addr()?);
        Ok(Self {
            listener,
            shared: Arc::new(Shared {
                resources,
                oracle,
                generator,
                session_timeout: config.session_timeout,
                store: Mutex::new(store),
                sessions_started: AtomicU64::new(0),
            }),
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle { stop: self.stop.clone(), addr: self.listener.local_addr().expect("bound listener") }
    }

    /// Serves until shut down, then waits for open connections to finish
    /// their current request and flushes the store.
    pub fn run(self) -> Result<(), ServiceError> {
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        for stream in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            workers.retain(|w| !w.is_finished());
            let (shared, stop) = (self.shared.clone(), self.stop.clone());
            workers.push(thread::spawn(move || {
                if let Err(e) = serve_connection(stream, &shared, &stop) {
                    log::debug!("connection closed: {e}");
                }
            }));
        }
        for w in workers {
            let _ = w.join();
        }
        let store = self.shared.store.lock().unwrap_or_else(|e| e.into_inner());
        store.flush()?;
        log::info!("store flushed, shutting down");
        Ok(())
    }
}

fn serve_connection(mut stream: TcpStream, shared: &Shared, stop: &AtomicBool) -> io::Result<()> {
    stream.set_read_timeout(Some(POLL_INTERVAL))?;
    let loopback = stream.peer_addr()?.ip().is_loopback();
    let mut conn = Connection { shared, loopback, active: None };
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        while let Some(pos) = buf.iter().position(|&b| b == b'\n') {
            let line: Vec<u8> = buf.drain(..=pos).collect();
            let response = conn.handle_line(&line[..pos]);
            stream.write_all(response.to_line().as_bytes())?;
        }
        if buf.len() > MAX_LINE {
            let r = Response::error(UNKNOWN_REQUEST_ID, "malformed", "request line too long");
            stream.write_all(r.to_line().as_bytes())?;
            return stream.shutdown(Shutdown::Both);
        }
        if stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        conn.expire_idle();
        match stream.read(&mut chunk) {
            Ok(0) => return Ok(()),
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
            Err(e) => return Err(e),
        }
    }
}

struct ActiveSession<'a> {
    id: String,
    user: String,
    typing: Option<Session<'a>>,
    result: Option<GhostResult>,
    last_activity: Instant,
}

struct Connection<'a> {
    shared: &'a Shared,
    loopback: bool,
    active: Option<ActiveSession<'a>>,
}

fn generator_error(id: &str, e: GeneratorError) -> Response {
    let code = match e {
        GeneratorError::GhostMismatch { .. } => "ghost_mismatch",
        GeneratorError::OffAlphabet { .. } | GeneratorError::PasswordLength(_) => "invalid_key",
        _ => "protocol",
    };
    Response::error(id, code, e.to_string())
}

impl<'a> Connection<'a> {
    fn expire_idle(&mut self) {
        if self.active.as_ref().is_some_and(|s| s.last_activity.elapsed() > self.shared.session_timeout) {
            log::info!("typing session expired");
            self.active = None;
        }
    }

    fn handle_line(&mut self, line: &[u8]) -> Response {
        let (id, request) = parse_request(line);
        match request {
            Ok(req) => self.handle(&id, req),
            Err(msg) => Response::error(&id, "malformed", msg),
        }
    }

    fn handle(&mut self, id: &str, request: Request) -> Response {
        match request {
            Request::Register { user, password } => {
                let mut store = self.shared.store.lock().unwrap();
                match store.register(&user, &password) {
                    Ok(()) => Response::ok(id),
                    Err(e @ DetectorError::UserExists(_)) => Response::error(id, "user_exists", e.to_string()),
                    Err(e @ DetectorError::InvalidUserId(_)) => Response::error(id, "invalid_user", e.to_string()),
                    Err(e @ DetectorError::InvalidPassword) => Response::error(id, "invalid_password", e.to_string()),
                    Err(e) => internal(id, e),
                }
            }
            Request::SessionStart { user } => self.session_start(id, user),
            Request::SessionKey { session, key } => {
                let mut chars = key.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Response::error(id, "invalid_key", "char must be exactly one character");
                };
                self.with_session(id, &session, |typing| {
                    typing.feed(c)?;
                    typing.poll()
                })
            }
            Request::SessionFinalize { session } => self.with_session(id, &session, |typing| typing.finalize()),
            Request::Login { user, password, session, ghost } => self.login(id, &user, &password, session, ghost),
            Request::AdminAlarms {} => {
                if !self.loopback {
                    return Response::error(id, "forbidden", "admin operations are loopback-only");
                }
                let store = self.shared.store.lock().unwrap();
                let events = store
                    .alarms()
                    .iter()
                    .map(|a| AlarmRecord { timestamp: a.timestamp, user: a.user_id.clone() })
                    .collect();
                Response { events: Some(events), ..Response::ok(id) }
            }
            Request::AdminRebuild { expected_n, target_fpr } => {
                if !self.loopback {
                    return Response::error(id, "forbidden", "admin operations are loopback-only");
                }
                let config = match BloomConfig::sized(expected_n, target_fpr, DEFAULT_MEMORY_CAP) {
                    Ok(c) => c,
                    Err(e) => return Response::error(id, "invalid_params", e.to_string()),
                };
                match self.shared.store.lock().unwrap().rebuild_filter(config) {
                    Ok(()) => Response::ok(id),
                    Err(e) => internal(id, e),
                }
            }
            Request::Layout {} => Response { document: Some(self.shared.resources.layout.to_document()), ..Response::ok(id) },
        }
    }

    fn session_start(&mut self, id: &str, user: String) -> Response {
        if !valid_user_id(&user) {
            return Response::error(id, "invalid_user", format!("invalid user id {user:?}"));
        }
        let n = self.shared.sessions_started.fetch_add(1, Ordering::SeqCst);
        let res = &self.shared.resources;
        let config = GeneratorConfig { rng_seed: derive(self.shared.generator.rng_seed, n), ..self.shared.generator.clone() };
        let mut typing = match Session::new(&config, &res.model, &res.meter, &res.layout) {
            Ok(s) => s,
            Err(e) => return internal(id, e),
        };
        let action = match typing.poll() {
            Ok(a) => a,
            Err(e) => return internal(id, e),
        };
        let session = format!("s{n}");
        self.active = Some(ActiveSession {
            id: session.clone(),
            user,
            typing: Some(typing),
            result: None,
            last_activity: Instant::now(),
        });
        Response { session: Some(session), ..Response::ok(id) }.with_action(action)
    }

    fn with_session(
        &mut self,
        id: &str,
        session: &str,
        step: impl FnOnce(&mut Session<'a>) -> Result<Action, GeneratorError>,
    ) -> Response {
        self.expire_idle();
        let Some(active) = self.active.as_mut().filter(|s| s.id == session) else {
            return Response::error(id, "no_session", format!("no active session {session:?} on this connection"));
        };
        active.last_activity = Instant::now();
        let Some(typing) = active.typing.as_mut() else {
            return Response::error(id, "protocol", "session already complete");
        };
        match step(typing) {
            Ok(Action::Done) => match active.typing.take().unwrap().result() {
                Ok(result) => {
                    active.result = Some(result);
                    Response::ok(id).with_action(Action::Done)
                }
                Err(e) => internal(id, e),
            },
            Ok(action) => Response::ok(id).with_action(action),
            Err(e) => generator_error(id, e),
        }
    }

    fn login(&mut self, id: &str, user: &str, password: &str, session: Option<String>, ghost: Option<String>) -> Response {
        self.expire_idle();
        let finished = self.active.as_ref().is_some_and(|s| s.result.is_some() && s.user == user);
        if let Some(requested) = &session {
            if !finished || self.active.as_ref().is_some_and(|s| &s.id != requested) {
                return Response::error(id, "no_session", format!("no finished session {requested:?} for this user"));
            }
        }
        let typed = if finished {
            self.active.take().and_then(|s| s.result).map(|r| r.ghost)
        } else {
            ghost
        };
        let verdict = self.shared.store.lock().unwrap().check_login_attempt(user, password, typed.as_deref(), &self.shared.oracle);
        match verdict {
            Ok(LoginVerdict::Success) => Response::ok(id),
            Ok(LoginVerdict::FailBenign | LoginVerdict::FailAlarm) => Response::login_failed(id),
            Err(e) => internal(id, e),
        }
    }
}

fn internal(id: &str, e: impl std::fmt::Display) -> Response {
    log::error!("request {id}: {e}");
    Response::error(id, "internal", "internal error")
}
