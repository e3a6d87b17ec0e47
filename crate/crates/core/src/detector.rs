//! Server-side detection of logins that replay inferred keystrokes.
//!
//! After every successful login made through a ghost-typing session, the
//! ghost string and the oracle's best readings of it are stored as
//! honeywords in one Bloom filter, keyed per user as
//! `user ‖ 0x00 ‖ word`. A later failed login whose password is one of
//! these honeywords raises an alarm: only someone who watched the user type
//! would submit it.
//!
//! Persistent state lives in a directory:
//!
//! * `credentials.log` append-only `key=value` records, the last record for
//!   a user wins,
//! * `filter.vrbf` the Bloom filter snapshot,
//! * `alarms.log` one `timestamp<TAB>user<TAB>ALARM` line per alarm.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::bloom::{BloomConfig, BloomError, BloomFilter, InsertStatus};
use crate::corpus::Cleaning;
use crate::generator::is_subsequence;
use crate::oracle::{GuessOracle, OracleError};
use crate::rng::{seeded, SimRng};

pub const CREDENTIALS_FILE: &str = "credentials.log";
pub const FILTER_FILE: &str = "filter.vrbf";
pub const ALARMS_FILE: &str = "alarms.log";

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("user {0:?} already exists")]
    UserExists(String),
    #[error("invalid user id {0:?}: use 1-64 characters from [A-Za-z0-9_.@-]")]
    InvalidUserId(String),
    #[error("password must be 5-30 printable ASCII characters without spaces")]
    InvalidPassword,
    #[error("ghost string must differ from the password")]
    GhostEqualsOriginal,
    #[error("store file {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DetectorError + '_ {
    move |source| DetectorError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Honeywords stored per successful login, the ghost string included.
    pub honeyword_count: usize,
    /// PBKDF2-HMAC-SHA256 iterations for new password digests.
    pub iterations: u32,
    pub bloom: BloomConfig,
}

impl DetectorConfig {
    pub fn new(bloom: BloomConfig) -> Self {
        Self { honeyword_count: 20, iterations: 100_000, bloom }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: String,
    pub salt: [u8; 16],
    pub password_digest: [u8; 32],
    pub iterations: u32,
    pub created_at: u64,
    pub honeyword_count: u64,
}

impl UserRecord {
    fn to_line(&self) -> String {
        format!(
            "user={} salt={} digest={} iterations={} created_at={} honeywords={}",
            self.user_id,
            hex::encode(self.salt),
            hex::encode(self.password_digest),
            self.iterations,
            self.created_at,
            self.honeyword_count
        )
    }

    fn from_line(line: &str) -> Result<Self, String> {
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for part in line.split(' ') {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("field {part:?} is not key=value"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing {k}"));
        let num = |k: &str| get(k)?.parse::<u64>().map_err(|_| format!("bad {k}"));
        let mut salt = [0u8; 16];
        hex::decode_to_slice(get("salt")?, &mut salt).map_err(|_| "bad salt".to_string())?;
        let mut password_digest = [0u8; 32];
        hex::decode_to_slice(get("digest")?, &mut password_digest).map_err(|_| "bad digest".to_string())?;
        let user_id = get("user")?.to_string();
        if !valid_user_id(&user_id) {
            return Err(format!("bad user id {user_id:?}"));
        }
        Ok(Self {
            user_id,
            salt,
            password_digest,
            iterations: u32::try_from(num("iterations")?).map_err(|_| "bad iterations".to_string())?,
            created_at: num("created_at")?,
            honeyword_count: num("honeywords")?,
        })
    }
}

pub fn valid_user_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "_.@-".contains(c))
}

/// Outcome of a login attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoginVerdict {
    Success,
    FailBenign,
    /// The submitted password is one of this user's honeywords.
    FailAlarm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmEvent {
    pub timestamp: u64,
    pub user_id: String,
}

/// Honeywords for one login, best first, the ghost string leading.
#[derive(Debug, Clone, PartialEq)]
pub struct HoneywordSet {
    pub words: Vec<String>,
    /// How many fewer than requested the oracle could supply.
    pub shortfall: usize,
}

/// `{ghost}` plus the oracle's top `count - 1` readings of `ghost`, never
/// including `original`.
pub fn generate_honeywords(
    ghost: &str,
    original: &str,
    oracle: &GuessOracle,
    count: usize,
) -> Result<HoneywordSet, DetectorError> {
    if ghost == original {
        return Err(DetectorError::GhostEqualsOriginal);
    }
    let mut words = vec![ghost.to_string()];
    if count > 1 {
        match oracle.enumerate(ghost, count + 1) {
            Ok(guesses) => words.extend(
                guesses
                    .into_iter()
                    .map(|g| g.text)
                    .filter(|w| w != original && w != ghost)
                    .take(count - 1),
            ),
            Err(OracleError::TooLong { .. } | OracleError::EmptyCandidateSet { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let shortfall = count.saturating_sub(words.len());
    if shortfall > 0 {
        log::warn!("honeyword set for a {}-character ghost is {shortfall} short", ghost.chars().count());
    }
    Ok(HoneywordSet { words, shortfall })
}

fn filter_key(user_id: &str, word: &str) -> Vec<u8> {
    let mut key = Vec::with_capacity(user_id.len() + 1 + word.len());
    key.extend_from_slice(user_id.as_bytes());
    key.push(0);
    key.extend_from_slice(word.as_bytes());
    key
}

fn digest(password: &str, salt: &[u8], iterations: u32) -> [u8; 32] {
    pbkdf2::pbkdf2_hmac_array::<Sha256, 32>(password.as_bytes(), salt, iterations)
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Result of inserting one login's honeywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordStatus {
    pub inserted: usize,
    /// The filter holds more than its expected element count and should be
    /// rebuilt.
    pub rebuild_required: bool,
}

/// Credentials, honeyword filter and alarm sink.
///
/// Reads take `&self`; anything that mutates takes `&mut self`, so a
/// `RwLock<DetectorStore>` gives concurrent lookups with one writer.
pub struct DetectorStore {
    config: DetectorConfig,
    users: HashMap<String, UserRecord>,
    filter: BloomFilter,
    alarms: Vec<AlarmEvent>,
    dir: Option<PathBuf>,
    salt_rng: SimRng,
    clock: fn() -> u64,
}

impl DetectorStore {
    /// A store held only in memory. Salts come from `salt_seed`.
    pub fn in_memory(config: DetectorConfig, salt_seed: u64) -> Self {
        Self {
            filter: BloomFilter::new(config.bloom.clone()),
            config,
            users: HashMap::new(),
            alarms: Vec::new(),
            dir: None,
            salt_rng: seeded(salt_seed),
            clock: now_secs,
        }
    }

    /// Opens or creates a store in `dir`. An existing filter snapshot takes
    /// precedence over `config.bloom`.
    pub fn open(dir: &Path, config: DetectorConfig, salt_seed: u64) -> Result<Self, DetectorError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut store = Self::in_memory(config, salt_seed);
        store.dir = Some(dir.to_path_buf());

        let cred_path = dir.join(CREDENTIALS_FILE);
        if cred_path.exists() {
            let text = fs::read_to_string(&cred_path).map_err(io_err(&cred_path))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let rec = UserRecord::from_line(line).map_err(|reason| DetectorError::Corrupt {
                    path: cred_path.clone(),
                    reason: format!("line {}: {reason}", i + 1),
                })?;
                store.users.insert(rec.user_id.clone(), rec);
            }
        }

        let filter_path = dir.join(FILTER_FILE);
        if filter_path.exists() {
            let bytes = fs::read(&filter_path).map_err(io_err(&filter_path))?;
            store.filter = BloomFilter::from_bytes(&bytes).map_err(|e| DetectorError::Corrupt {
                path: filter_path.clone(),
                reason: e.to_string(),
            })?;
            store.config.bloom = store.filter.config().clone();
        }

        let alarm_path = dir.join(ALARMS_FILE);
        if alarm_path.exists() {
            let text = fs::read_to_string(&alarm_path).map_err(io_err(&alarm_path))?;
            for (i, line) in text.lines().enumerate() {
                let corrupt = || DetectorError::Corrupt { path: alarm_path.clone(), reason: format!("line {}", i + 1) };
                let mut parts = line.split('\t');
                let (Some(ts), Some(user), Some("ALARM"), None) = (parts.next(), parts.next(), parts.next(), parts.next())
                else {
                    return Err(corrupt());
                };
                let timestamp = ts.parse().map_err(|_| corrupt())?;
                store.alarms.push(AlarmEvent { timestamp, user_id: user.to_string() });
            }
        }
        Ok(store)
    }

    /// Replaces the wall clock, for reproducible timestamps.
    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn filter(&self) -> &BloomFilter {
        &self.filter
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn alarms(&self) -> &[AlarmEvent] {
        &self.alarms
    }

    fn append(&self, file: &str, line: &str) -> Result<(), DetectorError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(file);
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        writeln!(f, "{line}").map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    pub fn register(&mut self, user_id: &str, password: &str) -> Result<(), DetectorError> {
        if !valid_user_id(user_id) {
            return Err(DetectorError::InvalidUserId(user_id.to_string()));
        }
        if !Cleaning::default().accepts(password) {
            return Err(DetectorError::InvalidPassword);
        }
        if self.users.contains_key(user_id) {
            return Err(DetectorError::UserExists(user_id.to_string()));
        }
        let mut salt = [0u8; 16];
        self.salt_rng.fill_bytes(&mut salt);
        let iterations = self.config.iterations;
        let record = UserRecord {
            user_id: user_id.to_string(),
            salt,
            password_digest: digest(password, &salt, iterations),
            iterations,
            created_at: (self.clock)(),
            honeyword_count: 0,
        };
        self.append(CREDENTIALS_FILE, &record.to_line())?;
        self.users.insert(user_id.to_string(), record);
        Ok(())
    }

    /// `Some(true)` when `password` matches, `None` for an unknown user.
    pub fn verify_password(&self, user_id: &str, password: &str) -> Option<bool> {
        let rec = self.users.get(user_id)?;
        let d = digest(password, &rec.salt, rec.iterations);
        Some(constant_time_eq(&d, &rec.password_digest))
    }

    /// Whether `word` is stored as a honeyword for `user_id`.
    pub fn is_honeyword(&self, user_id: &str, word: &str) -> bool {
        self.filter.contains(&filter_key(user_id, word))
    }

    /// Stores the honeywords of a login whose password was verified.
    pub fn record_successful_login(
        &mut self,
        user_id: &str,
        ghost: &str,
        original: &str,
        oracle: &GuessOracle,
    ) -> Result<RecordStatus, DetectorError> {
        if !self.users.contains_key(user_id) {
            return Err(DetectorError::UnknownUser(user_id.to_string()));
        }
        let set = generate_honeywords(ghost, original, oracle, self.config.honeyword_count)?;
        let mut saturated = false;
        for w in &set.words {
            saturated |= self.filter.insert(&filter_key(user_id, w)) == InsertStatus::Saturated;
        }
        let rec = self.users.get_mut(user_id).unwrap();
        rec.honeyword_count += set.words.len() as u64;
        let line = rec.to_line();
        self.append(CREDENTIALS_FILE, &line)?;
        if saturated {
            log::warn!("honeyword filter is saturated; rebuild required");
        }
        Ok(RecordStatus { inserted: set.words.len(), rebuild_required: saturated })
    }

    /// Checks a login. A correct password succeeds and, when a ghost string
    /// accompanies it, stores that login's honeywords. A wrong password that
    /// is a stored honeyword raises an alarm. Unknown users fail benignly.
    pub fn check_login_attempt(
        &mut self,
        user_id: &str,
        password: &str,
        ghost: Option<&str>,
        oracle: &GuessOracle,
    ) -> Result<LoginVerdict, DetectorError> {
        let Some(ok) = self.verify_password(user_id, password) else {
            // Spend the same work as a real check.
            digest(password, &[0u8; 16], self.config.iterations);
            log::info!("login for unknown user {user_id:?}");
            return Ok(LoginVerdict::FailBenign);
        };
        if ok {
            match ghost {
                Some(g) if g != password && is_subsequence(password, g) => {
                    self.record_successful_login(user_id, g, password, oracle)?;
                }
                Some(_) => log::warn!("ignoring ghost string that does not contain the password"),
                None => {}
            }
            return Ok(LoginVerdict::Success);
        }
        if self.is_honeyword(user_id, password) {
            let event = AlarmEvent { timestamp: (self.clock)(), user_id: user_id.to_string() };
            self.append(ALARMS_FILE, &format!("{}\t{}\tALARM", event.timestamp, event.user_id))?;
            log::warn!("inference-attack alarm for user {user_id:?}");
            self.alarms.push(event);
            return Ok(LoginVerdict::FailAlarm);
        }
        Ok(LoginVerdict::FailBenign)
    }

    /// Replaces the filter with an empty one. Stored honeywords are
    /// forgotten.
    pub fn rebuild_filter(&mut self, config: BloomConfig) -> Result<(), DetectorError> {
        self.filter = BloomFilter::new(config.clone());
        self.config.bloom = config;
        self.flush()
    }

    /// Writes the filter snapshot (atomically, via a temporary file).
    pub fn flush(&self) -> Result<(), DetectorError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(FILTER_FILE);
        let tmp = dir.join(format!("{FILTER_FILE}.tmp"));
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&self.filter.to_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloom::bf_params;
    use crate::oracle::OracleConfig;
    use crate::presets::default_model;
    use std::sync::{Arc, OnceLock};

    fn oracle() -> &'static GuessOracle {
        static O: OnceLock<GuessOracle> = OnceLock::new();
        O.get_or_init(|| GuessOracle::new(Arc::new(default_model()), OracleConfig::default()).unwrap())
    }

    fn config() -> DetectorConfig {
        DetectorConfig { honeyword_count: 20, iterations: 10, bloom: bf_params(10_000, 1e-6).unwrap() }
    }

    fn store() -> DetectorStore {
        DetectorStore::in_memory(config(), 1).with_clock(|| 1_700_000_000)
    }

    #[test]
    fn honeyword_selection() {
        let one = generate_honeywords("pa5ssword", "password", oracle(), 1).unwrap();
        assert_eq!(one.words, vec!["pa5ssword"]);

        let set = generate_honeywords("pa5ssw;ord1", "password1", oracle(), 20).unwrap();
        assert_eq!(set.words.len(), 20);
        assert_eq!(set.words[0], "pa5ssw;ord1");
        assert!(!set.words.contains(&"password1".to_string()));
        let mut distinct = set.words.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 20);

        assert!(matches!(
            generate_honeywords("password", "password", oracle(), 5),
            Err(DetectorError::GhostEqualsOriginal)
        ));
    }

    #[test]
    fn original_is_skipped_when_it_ranks_first() {
        let ghost = "passwo-rd1";
        let top = oracle().enumerate(ghost, 1).unwrap()[0].text.clone();
        let set = generate_honeywords(ghost, &top, oracle(), 5).unwrap();
        assert!(!set.words.contains(&top));
        assert_eq!(set.words.len(), 5);
        assert_eq!(set.words[1], oracle().enumerate(ghost, 2).unwrap()[1].text);
    }

    #[test]
    fn login_flow() {
        let mut s = store();
        s.register("u", "password1").unwrap();
        assert!(matches!(s.register("u", "other12"), Err(DetectorError::UserExists(_))));
        assert!(matches!(s.register("bad id", "other12"), Err(DetectorError::InvalidUserId(_))));
        assert!(matches!(s.register("v", "abc"), Err(DetectorError::InvalidPassword)));

        let before = s.filter().inserted();
        let v = s.check_login_attempt("u", "password1", Some("pa5ssw;ord1"), oracle()).unwrap();
        assert_eq!(v, LoginVerdict::Success);
        assert_eq!(s.filter().inserted() - before, 20);
        assert_eq!(s.user("u").unwrap().honeyword_count, 20);

        assert_eq!(s.check_login_attempt("u", "pa5ssw;ord1", None, oracle()).unwrap(), LoginVerdict::FailAlarm);
        assert_eq!(s.check_login_attempt("u", "wrongpass", None, oracle()).unwrap(), LoginVerdict::FailBenign);
        assert_eq!(s.check_login_attempt("nobody", "pa5ssw;ord1", None, oracle()).unwrap(), LoginVerdict::FailBenign);
        assert_eq!(s.alarms(), &[AlarmEvent { timestamp: 1_700_000_000, user_id: "u".into() }]);

        // The correct password never alarms, whatever the filter holds.
        assert_eq!(s.check_login_attempt("u", "password1", None, oracle()).unwrap(), LoginVerdict::Success);
    }

    #[test]
    fn honeywords_are_user_scoped() {
        let mut s = store();
        s.register("a", "password1").unwrap();
        s.register("b", "password1").unwrap();
        s.check_login_attempt("a", "password1", Some("pa5ssw;ord1"), oracle()).unwrap();
        assert!(s.is_honeyword("a", "pa5ssw;ord1"));
        assert!(!s.is_honeyword("b", "pa5ssw;ord1"));
        assert_eq!(s.check_login_attempt("b", "pa5ssw;ord1", None, oracle()).unwrap(), LoginVerdict::FailBenign);
    }

    #[test]
    fn two_sessions_add_two_sets() {
        let mut s = store();
        s.register("u", "password1").unwrap();
        s.check_login_attempt("u", "pa5ssw;ord1", None, oracle()).unwrap();
        let st1 = s.record_successful_login("u", "pa5ssw;ord1", "password1", oracle()).unwrap();
        let st2 = s.record_successful_login("u", "xpassw0ord1!", "password1", oracle()).unwrap();
        assert_eq!(st1.inserted + st2.inserted, 40);
        assert_eq!(s.filter().inserted(), 40);
        assert!(matches!(
            s.record_successful_login("zz", "xpassw0ord1!", "password1", oracle()),
            Err(DetectorError::UnknownUser(_))
        ));
    }

    #[test]
    fn bogus_ghost_is_not_recorded() {
        let mut s = store();
        s.register("u", "password1").unwrap();
        let v = s.check_login_attempt("u", "password1", Some("qqqqqqqq"), oracle()).unwrap();
        assert_eq!(v, LoginVerdict::Success);
        assert_eq!(s.filter().inserted(), 0);
    }

    #[test]
    fn saturation_and_rebuild() {
        let cfg = DetectorConfig { bloom: bf_params(30, 1e-3).unwrap(), ..config() };
        let mut s = DetectorStore::in_memory(cfg, 2);
        s.register("u", "password1").unwrap();
        let a = s.record_successful_login("u", "pa5ssw;ord1", "password1", oracle()).unwrap();
        assert!(!a.rebuild_required);
        let b = s.record_successful_login("u", "xpassw0ord1!", "password1", oracle()).unwrap();
        assert!(b.rebuild_required);
        s.rebuild_filter(bf_params(1000, 1e-6).unwrap()).unwrap();
        assert!(!s.filter().is_saturated());
        assert!(!s.is_honeyword("u", "pa5ssw;ord1"));
        assert_eq!(s.check_login_attempt("u", "pa5ssw;ord1", None, oracle()).unwrap(), LoginVerdict::FailBenign);
    }

    #[test]
    fn rebuild_sizing_from_login_rate() {
        // 1,000 logins per year, 20 honeywords each, for 50 users.
        let n = 1_000 * 20 * 50;
        let c = bf_params(n, 1e-6).unwrap();
        assert_eq!(c.expected_n, 1_000_000);
        assert!(c.analytic_fpr(n) <= 2e-6);
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = DetectorStore::open(dir.path(), config(), 3).unwrap();
            s.register("u", "password1").unwrap();
            s.check_login_attempt("u", "password1", Some("pa5ssw;ord1"), oracle()).unwrap();
            s.check_login_attempt("u", "pa5ssw;ord1", None, oracle()).unwrap();
            s.flush().unwrap();
        }
        let mut s = DetectorStore::open(dir.path(), config(), 4).unwrap();
        assert_eq!(s.user("u").unwrap().honeyword_count, 20);
        assert_eq!(s.alarms().len(), 1);
        assert_eq!(s.check_login_attempt("u", "password1", None, oracle()).unwrap(), LoginVerdict::Success);
        assert_eq!(s.check_login_attempt("u", "pa5ssw;ord1", None, oracle()).unwrap(), LoginVerdict::FailAlarm);
        let log = fs::read_to_string(dir.path().join(ALARMS_FILE)).unwrap();
        assert_eq!(log.lines().count(), 2);
        assert!(log.lines().all(|l| l.ends_with("\tu\tALARM")));
    }

    #[test]
    fn corrupt_files_are_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(CREDENTIALS_FILE), "user=u salt=zz\n").unwrap();
        let err = DetectorStore::open(dir.path(), config(), 1).err().unwrap();
        assert!(matches!(&err, DetectorError::Corrupt { path, .. } if path.ends_with(CREDENTIALS_FILE)), "{err}");

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(FILTER_FILE), b"VRBF\x01\x00garbage").unwrap();
        let err = DetectorStore::open(dir.path(), config(), 1).err().unwrap();
        assert!(matches!(&err, DetectorError::Corrupt { path, .. } if path.ends_with(FILTER_FILE)), "{err}");
    }

    #[test]
    fn record_line_round_trip() {
        let rec = UserRecord {
            user_id: "alice@example.com".into(),
            salt: [7; 16],
            password_digest: [9; 32],
            iterations: 1000,
            created_at: 42,
            honeyword_count: 3,
        };
        assert_eq!(UserRecord::from_line(&rec.to_line()).unwrap(), rec);
    }
}
