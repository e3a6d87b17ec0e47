//! `ghostkey` operator tool. The binary is a thin wrapper over [`run`].

mod output;

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghostkey_core::alphabet;
use ghostkey_core::attack::{
    default_grid, evaluate_defense, evaluate_detector, published_detection, simulate_inference, NoiseConfig,
    CONSTRAINT_VARIANTS, METRICS_HEADER, SWEEP_R,
};
use ghostkey_core::bloom::bf_params;
use ghostkey_core::corpus::{parse_lines, random_like, Cleaning, SyntheticCorpus};
use ghostkey_core::generator::{generate, Constraint, GeneratorConfig, GhostResult, Selection, UNIT_SEPARATOR};
use ghostkey_core::oracle::{GuessOracle, OracleConfig, OracleError};
use ghostkey_core::presets::{self, generator_preset, Resources};
use ghostkey_core::rng::{derive, seeded};
use ghostkey_core::{KeyboardLayout, MarkovModel, MeterCalibration};
use ghostkey_service::{Server, ServiceConfig};
use output::{Format, Table};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ghostkey", version, about = "Ghost-keystroke password entry: models, generation, evaluation and service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Root seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Log level on stderr (off, error, warn, info, debug, trace).
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
}

#[derive(Args, Clone)]
struct ResourceArgs {
    /// Markov model file written by train-markov. Default: built-in model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Meter calibration written by calibrate-meter. Default: calibrated
    /// against the built-in synthetic corpora.
    #[arg(long)]
    meter: Option<PathBuf>,
    /// Keyboard layout document. Default: built-in QWERTY.
    #[arg(long)]
    layout: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Newline-delimited password file; `-` reads stdin.
    #[arg(long, conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Use this many synthetic passwords generated from --seed.
    #[arg(long)]
    synthetic: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectionArg {
    Markov,
    Uniform,
}

#[derive(Args, Clone)]
struct GenArgs {
    /// Base parameter preset (default, experiment2, soft, hard, uniform).
    #[arg(long, default_value = "default")]
    preset: String,
    /// Target randomness level.
    #[arg(long)]
    r: Option<f64>,
    /// Initial injection probability.
    #[arg(long)]
    p0: Option<f64>,
    /// Probability step per character.
    #[arg(long)]
    delta_p: Option<f64>,
    /// EMA smoothing factor.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// Longest allowed run of consecutive ghosts.
    #[arg(long)]
    max_consecutive: Option<usize>,
    /// Fixed minimum number of ghosts (default: max(2, ceil(0.15 len))).
    #[arg(long)]
    min_ghosts: Option<usize>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    /// Soft distance constraint strength.
    #[arg(long, conflicts_with = "tau")]
    lambda: Option<f64>,
    /// Hard distance constraint radius, in key pitches.
    #[arg(long)]
    tau: Option<f64>,
}

impl GenArgs {
    fn build(&self, seed: u64) -> Result<GeneratorConfig, CliError> {
        let mut c = generator_preset(&self.preset).ok_or_else(|| CliError::usage(format!("unknown preset {:?}", self.preset)))?;
        c.rng_seed = seed;
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = self.$f { c.$g = v; })* };
        }
        set!(r => r, p0 => p0, delta_p => delta_p, alpha => alpha, p_min => p_min, p_max => p_max, max_consecutive => max_consecutive_ghost);
        if self.min_ghosts.is_some() {
            c.min_total_ghost = self.min_ghosts;
        }
        if let Some(s) = self.selection {
            c.selection = match s {
                SelectionArg::Markov => Selection::Markov,
                SelectionArg::Uniform => Selection::Uniform,
            };
        }
        if let Some(lambda) = self.lambda {
            c.constraint = Constraint::Soft { lambda };
        }
        if let Some(tau) = self.tau {
            c.constraint = Constraint::Hard { tau };
        }
        c.validate().map_err(|e| CliError::new("config", e))?;
        Ok(c)
    }
}

#[derive(Args, Clone)]
struct NoiseArgs {
    /// Per-keystroke misread probability of the simulated observer.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Neighbour radius for misreads, in key pitches.
    #[arg(long, default_value_t = 1.2)]
    radius: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grid {
    /// The r sweep plus the constraint variants at r = 0.4.
    Default,
    /// r = 0.3 ... 0.7 without constraints.
    Sweep,
    /// Unconstrained and constrained variants at r = 0.4.
    Constraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GhostFormat {
    Table,
    Csv,
    JsonLines,
    /// `original<US>ghost<US>mask` records, one per line.
    Wire,
}

#[derive(Subcommand)]
enum Command {
    /// Train an order-k Markov model on a password corpus.
    TrainMarkov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = presets::ORDER)]
        order: u8,
        /// Additive smoothing constant.
        #[arg(long, default_value_t = presets::SMOOTHING)]
        smoothing: f64,
        /// Where to write the model.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Calibrate the randomness meter against human and uniform-random passwords.
    CalibrateMeter {
        #[command(flatten)]
        common: Common,
        /// Model file. Default: built-in model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Human passwords; default 2000 synthetic ones from --seed.
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Where to write the calibration.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Generate ghost strings for passwords read from a file or stdin.
    GenGhost {
        #[command(flatten)]
        common: Common,
        /// One password per line; `-` or omitted reads stdin.
        #[arg(long)]
        password_file: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        resources: ResourceArgs,
        #[arg(long, value_enum, default_value_t = GhostFormat::Table)]
        format: GhostFormat,
    },
    /// Attacker accuracy and typing overhead over a generator grid.
    EvalDefense {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum, default_value_t = Grid::Default)]
        grid: Grid,
        /// Guess budgets, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        budget: Vec<usize>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        resources: ResourceArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Detection rate of replayed observations against the honeyword detector.
    EvalDetector {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Randomness levels, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
        r: Vec<f64>,
        /// Attempt budgets, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        attempts: Vec<usize>,
        /// Honeywords stored per login, the ghost string included.
        #[arg(long, default_value_t = 20)]
        honeywords: usize,
        /// PBKDF2 iterations for the throwaway store.
        #[arg(long, default_value_t = 1000)]
        iterations: u32,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        resources: ResourceArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Bloom filter size for n elements at a target false-positive rate.
    BfParams {
        #[command(flatten)]
        common: Common,
        /// Expected number of elements.
        #[arg(long)]
        n: u64,
        /// Target false-positive rate.
        #[arg(long)]
        fpr: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run the authentication service until interrupted.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Listen address [env: GHOSTKEY_BIND, default 127.0.0.1:7878].
        #[arg(long)]
        bind: Option<String>,
        /// Store directory [env: GHOSTKEY_STORE_DIR, default ghostkey-store].
        #[arg(long)]
        store_dir: Option<PathBuf>,
        /// Generator preset [env: GHOSTKEY_PRESET, default "default"].
        #[arg(long)]
        preset: Option<String>,
        /// Idle typing-session timeout, seconds.
        #[arg(long, default_value_t = 120)]
        session_timeout: u64,
        /// PBKDF2 iterations for new passwords.
        #[arg(long, default_value_t = 100_000)]
        iterations: u32,
        /// Honeywords stored per successful login.
        #[arg(long, default_value_t = 20)]
        honeywords: usize,
        /// Accepted for uniformity; the service writes only logs.
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print a keyboard layout. `table` prints the loadable layout document.
    DumpLayout {
        #[command(flatten)]
        common: Common,
        /// Layout document to print. Default: built-in QWERTY.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Observe typed strings with noise and rank the attacker's guesses.
    SimulateAttack {
        #[command(flatten)]
        common: Common,
        /// Typed strings, or gen-ghost wire records, one per line; `-` or
        /// omitted reads stdin.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Guesses to list per observation.
        #[arg(long, default_value_t = 10)]
        budget: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        resources: ResourceArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn new(kind: &'static str, e: impl Display) -> Self {
        Self { kind, message: e.to_string(), code: 1 }
    }

    fn usage(message: impl Display) -> Self {
        Self::new("usage", message)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::new("io", e)
    }
}

fn read_input(path: Option<&Path>, stdin: &mut dyn Read) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(|e| CliError::new("input", format!("{}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

impl CorpusArgs {
    /// Cleaned corpus from the file, or `default` synthetic passwords.
    fn load(&self, seed: u64, default: usize, stdin: &mut dyn Read) -> Result<Vec<String>, CliError> {
        let raw = match (&self.corpus, self.synthetic) {
            (Some(p), _) => parse_lines(&read_input(Some(p), stdin)?),
            (None, n) => SyntheticCorpus::new(seed).generate(n.unwrap_or(default)),
        };
        let clean = Cleaning::default().apply(&raw);
        if clean.len() < raw.len() {
            log::warn!("dropped {} corpus entries outside the alphabet or length range", raw.len() - clean.len());
        }
        if clean.is_empty() {
            return Err(CliError::new("input", "corpus is empty after cleaning"));
        }
        Ok(clean)
    }
}

impl ResourceArgs {
    fn load(&self) -> Result<Resources, CliError> {
        let layout = match &self.layout {
            Some(p) => KeyboardLayout::load(Some(&fs::read_to_string(p).map_err(|e| CliError::new("input", format!("{}: {e}", p.display())))?)).map_err(|e| CliError::new("layout", e))?,
            None => KeyboardLayout::default(),
        };
        let model = match &self.model {
            Some(p) => Arc::new(load_model(p)?),
            None => Arc::new(presets::default_model()),
        };
        let meter = match &self.meter {
            Some(p) => MeterCalibration::from_text(&fs::read_to_string(p).map_err(|e| CliError::new("input", format!("{}: {e}", p.display())))?, model.clone()).map_err(|e| CliError::new("meter", e))?,
            None => presets::default_meter(model.clone()),
        };
        Ok(Resources { model, meter, layout })
    }
}

fn load_model(path: &Path) -> Result<MarkovModel, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::new("input", format!("{}: {e}", path.display())))?;
    MarkovModel::from_bytes(&bytes).map_err(|e| CliError::new("model", format!("{}: {e}", path.display())))
}

fn oracle_for(res: &Resources) -> Result<GuessOracle, CliError> {
    GuessOracle::new(res.model.clone(), OracleConfig::default()).map_err(|e| CliError::new("oracle", e))
}

fn noise_config(n: &NoiseArgs, seed: u64) -> NoiseConfig {
    NoiseConfig { char_error_rate: n.noise, radius: n.radius, rng_seed: seed }
}

fn emit(table: &Table, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    table.write(format, out)?;
    Ok(out.flush()?)
}

fn mask_bits(r: &GhostResult) -> String {
    r.mask.iter().map(|&g| if g { '1' } else { '0' }).collect()
}

fn execute(command: Command, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::TrainMarkov { common, corpus, order, smoothing, out: path, format } => {
            let entries = corpus.load(common.seed, presets::TRAIN_SIZE, stdin)?;
            let model = MarkovModel::train(&entries, order, smoothing).map_err(|e| CliError::new("train", e))?;
            fs::write(&path, model.to_bytes()).map_err(|e| CliError::new("output", format!("{}: {e}", path.display())))?;
            let mut t = Table::new(&["entries", "order", "smoothing", "contexts", "checksum"]);
            t.push(vec![
                json!(model.total_trained()),
                json!(order),
                json!(smoothing),
                json!(model.context_count()),
                json!(format!("{:08x}", model.checksum())),
            ]);
            emit(&t, format, out)
        }
        Command::CalibrateMeter { common, model, corpus, out: path, format } => {
            let model = Arc::new(match &model {
                Some(p) => load_model(p)?,
                None => presets::default_model(),
            });
            let human = corpus.load(common.seed, presets::HUMAN_SIZE, stdin)?;
            let random = random_like(&human, &mut seeded(derive(common.seed, 1)));
            let meter = MeterCalibration::calibrate(model, &human, &random).map_err(|e| CliError::new("calibrate", e))?;
            if let Some(path) = &path {
                fs::write(path, meter.to_text()).map_err(|e| CliError::new("output", format!("{}: {e}", path.display())))?;
            }
            let mean = |set: &[String]| -> Result<f64, CliError> {
                let mut sum = 0.0;
                for s in set {
                    sum += meter.eval(s).map_err(|e| CliError::new("meter", e))?;
                }
                Ok(sum / set.len() as f64)
            };
            let mut t = Table::new(&["scale", "midpoint", "human_mean_score", "random_mean_score", "n"]);
            t.push(vec![json!(meter.scale()), json!(meter.midpoint()), json!(mean(&human)?), json!(mean(&random)?), json!(human.len())]);
            emit(&t, format, out)
        }
        Command::GenGhost { common, password_file, gen, resources, format } => {
            let config = gen.build(common.seed)?;
            let res = resources.load()?;
            let passwords = parse_lines(&read_input(password_file.as_deref(), stdin)?);
            let mut results = Vec::with_capacity(passwords.len());
            for (i, pw) in passwords.iter().enumerate() {
                let cfg = GeneratorConfig { rng_seed: derive(config.rng_seed, i as u64), ..config.clone() };
                let r = generate(&cfg, pw, &res.model, &res.meter, &res.layout)
                    .map_err(|e| CliError::new("generate", format!("line {}: {e}", i + 1)))?;
                results.push(r);
            }
            let table_format = match format {
                GhostFormat::Wire => {
                    for r in &results {
                        writeln!(out, "{}", r.to_wire())?;
                    }
                    return Ok(out.flush()?);
                }
                GhostFormat::Table => Format::Table,
                GhostFormat::Csv => Format::Csv,
                GhostFormat::JsonLines => Format::JsonLines,
            };
            let mut t = Table::new(&["line", "original", "ghost", "mask", "ghosts"]);
            for (i, r) in results.iter().enumerate() {
                t.push(vec![json!(i + 1), json!(r.original), json!(r.ghost), json!(mask_bits(r)), json!(r.ghost_count())]);
            }
            emit(&t, table_format, out)
        }
        Command::EvalDefense { common, corpus, grid, budget, noise, resources, format } => {
            let passwords = corpus.load(common.seed, 1000, stdin)?;
            let res = resources.load()?;
            let oracle = oracle_for(&res)?;
            let all = default_grid(common.seed);
            let configs: Vec<GeneratorConfig> = match grid {
                Grid::Default => all,
                Grid::Sweep => all[..SWEEP_R.len()].to_vec(),
                Grid::Constraints => {
                    let base = all.iter().find(|c| c.r == 0.4).cloned().unwrap();
                    std::iter::once(base).chain(all[SWEEP_R.len()..SWEEP_R.len() + CONSTRAINT_VARIANTS.len()].iter().cloned()).collect()
                }
            };
            let report = evaluate_defense(&passwords, &configs, &noise_config(&noise, common.seed), &budget, &res, &oracle)
                .map_err(|e| CliError::new("evaluate", e))?;
            let present: std::collections::BTreeSet<_> = report.trials[0].iter().map(|t| t.category).collect();
            for class in 1..=3u8 {
                for band in ghostkey_core::attack::LengthBand::ALL {
                    if !present.iter().any(|c| c.class_count == class && c.band == band) {
                        log::info!("no passwords in cell class={class} len={band}; row omitted");
                    }
                }
            }
            if format == Format::Csv {
                out.write_all(report.to_csv().as_bytes())?;
                return Ok(out.flush()?);
            }
            let columns: Vec<&'static str> = METRICS_HEADER.split(',').collect();
            let mut t = Table::new(&columns);
            for row in &report.rows {
                t.push(vec![
                    json!(row.r),
                    json!(row.constraint),
                    json!(row.lambda_or_tau),
                    json!(row.selection),
                    row.class_count.map_or(json!("all"), |c| json!(c)),
                    json!(row.band.map_or("all".to_string(), |b| b.to_string())),
                    json!(row.budget),
                    json!(row.accuracy),
                    json!(row.mean_abs_overhead),
                    row.mean_rel_overhead.map_or(Value::Null, |v| json!(v)),
                    json!(row.n),
                ]);
            }
            emit(&t, format, out)
        }
        Command::EvalDetector { common, corpus, r, attempts, honeywords, iterations, noise, resources, format } => {
            let passwords = corpus.load(common.seed, 200, stdin)?;
            let res = resources.load()?;
            let oracle = oracle_for(&res)?;
            let configs: Vec<GeneratorConfig> =
                r.iter().map(|&r| GeneratorConfig { r, rng_seed: common.seed, ..Default::default() }).collect();
            for c in &configs {
                c.validate().map_err(|e| CliError::new("config", e))?;
            }
            let eval = evaluate_detector(&passwords, &configs, honeywords, &attempts, &noise_config(&noise, common.seed), &res, &oracle, iterations)
                .map_err(|e| CliError::new("evaluate", e))?;
            let mut t = Table::new(&["r", "attempts", "detection_rate", "attacker_success_rate", "n", "published_detection_rate"]);
            for row in &eval.rows {
                let published = if honeywords == 20 { published_detection(row.r, row.attempts) } else { None };
                t.push(vec![
                    json!(row.r),
                    json!(row.attempts),
                    json!(row.detection_rate),
                    json!(row.attacker_success_rate),
                    json!(row.n),
                    published.map_or(Value::Null, |v| json!(v / 100.0)),
                ]);
            }
            emit(&t, format, out)
        }
        Command::BfParams { common: _, n, fpr, format } => {
            let c = bf_params(n, fpr).map_err(|e| CliError::new("bloom", e))?;
            let mut t = Table::new(&["expected_n", "target_fpr", "m_bits", "h", "bytes", "mb", "mib", "analytic_fpr", "published_mb"]);
            let published = (n == 1_000_000 && fpr == 1e-30).then_some(17.55);
            t.push(vec![
                json!(n),
                json!(fpr),
                json!(c.m),
                json!(c.h),
                json!(c.storage_bytes()),
                json!((c.storage_mb() * 100.0).round() / 100.0),
                json!((c.storage_mib() * 100.0).round() / 100.0),
                json!(c.analytic_fpr(n)),
                published.map_or(Value::Null, |v| json!(v)),
            ]);
            emit(&t, format, out)
        }
        Command::Serve { common, bind, store_dir, preset, session_timeout, iterations, honeywords, format: _ } => {
            let mut config = ServiceConfig::from_env();
            if let Some(b) = bind {
                config.bind = b;
            }
            if let Some(d) = store_dir {
                config.store_dir = d;
            }
            if let Some(p) = preset {
                config.preset = p;
            }
            config.seed = common.seed;
            config.session_timeout = Duration::from_secs(session_timeout);
            config.detector.iterations = iterations;
            config.detector.honeyword_count = honeywords;
            let fail = |e: ghostkey_service::ServiceError| CliError { kind: "serve", message: e.to_string(), code: e.exit_code() as u8 };
            let server = Server::start(config).map_err(fail)?;
            let handle = server.shutdown_handle();
            ctrlc::set_handler(move || handle.shutdown()).map_err(|e| CliError::new("serve", e))?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run().map_err(fail)
        }
        Command::DumpLayout { common: _, layout, format } => {
            let layout = match &layout {
                Some(p) => KeyboardLayout::load(Some(&fs::read_to_string(p).map_err(|e| CliError::new("input", format!("{}: {e}", p.display())))?)).map_err(|e| CliError::new("layout", e))?,
                None => KeyboardLayout::default(),
            };
            if format == Format::Table {
                out.write_all(layout.to_document().as_bytes())?;
                return Ok(out.flush()?);
            }
            let mut t = Table::new(&["char", "x", "y"]);
            for c in alphabet::base_keys() {
                let p = layout.coord(c).unwrap();
                t.push(vec![json!(c.to_string()), json!(p.x), json!(p.y)]);
            }
            emit(&t, format, out)
        }
        Command::SimulateAttack { common, input, budget, noise, resources, format } => {
            if budget == 0 {
                return Err(CliError::usage("--budget must be positive"));
            }
            let res = resources.load()?;
            let oracle = oracle_for(&res)?;
            let mut t = Table::new(&["line", "observed", "rank", "guess", "score", "original"]);
            for (i, line) in parse_lines(&read_input(input.as_deref(), stdin)?).iter().enumerate() {
                let (typed, original) = if line.contains(UNIT_SEPARATOR) {
                    let r = GhostResult::from_wire(line).map_err(|e| CliError::new("input", format!("line {}: {e}", i + 1)))?;
                    (r.ghost, Some(r.original))
                } else {
                    (line.clone(), None)
                };
                let observed = simulate_inference(&res.layout, &typed, &noise_config(&noise, derive(common.seed, i as u64)))
                    .map_err(|e| CliError::new("input", format!("line {}: {e}", i + 1)))?;
                let guesses = match oracle.enumerate(&observed, budget) {
                    Ok(g) => g,
                    Err(e @ (OracleError::TooLong { .. } | OracleError::EmptyCandidateSet { .. })) => {
                        log::warn!("line {}: {e}", i + 1);
                        Vec::new()
                    }
                    Err(e) => return Err(CliError::new("oracle", e)),
                };
                for (k, g) in guesses.iter().enumerate() {
                    let hit = original.as_ref().map_or(Value::Null, |o| json!(*o == g.text));
                    t.push(vec![json!(i + 1), json!(observed), json!(k + 1), json!(g.text), json!(g.score), hit]);
                }
            }
            emit(&t, format, out)
        }
    }
}

fn common_of(c: &Command) -> &Common {
    match c {
        Command::TrainMarkov { common, .. }
        | Command::CalibrateMeter { common, .. }
        | Command::GenGhost { common, .. }
        | Command::EvalDefense { common, .. }
        | Command::EvalDetector { common, .. }
        | Command::BfParams { common, .. }
        | Command::Serve { common, .. }
        | Command::DumpLayout { common, .. }
        | Command::SimulateAttack { common, .. } => common,
    }
}

/// Runs one invocation. `args` includes the program name. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return e.exit_code() as u8;
        }
    };
    log::set_max_level(common_of(&cli.command).log_level);
    match execute(cli.command, stdin, out) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.message.replace(['\n', '\r'], " ");
            let _ = writeln!(err, "error: {}: {message}", e.kind);
            e.code
        }
    }
}
