//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use ghostkey_core::attack::{
    default_grid, evaluate_defense, evaluate_detector, published_detection, simulate_inference, LengthBand, NoiseConfig,
    PUBLISHED_ACCURACY_MEDIUM, SWEEP_R,
};
use ghostkey_core::bloom::{bf_params, BloomFilter};
use ghostkey_core::corpus::SyntheticCorpus;
use ghostkey_core::detector::{DetectorConfig, DetectorStore, LoginVerdict};
use ghostkey_core::generator::{
    extract_real, generate, is_subsequence, Action, Constraint, GeneratorConfig, GhostResult, Selection, Session,
};
use ghostkey_core::oracle::{GuessOracle, OracleConfig, OracleError};
use ghostkey_core::presets::Resources;
use ghostkey_core::rng::derive;
use ghostkey_service::{Server, ServiceConfig};
use ghostkey_validation::{Check, Suite};

fn resources() -> &'static Resources {
    static R: OnceLock<Resources> = OnceLock::new();
    R.get_or_init(Resources::default_trained)
}

fn oracle() -> &'static GuessOracle {
    static O: OnceLock<GuessOracle> = OnceLock::new();
    O.get_or_init(|| GuessOracle::new(resources().model.clone(), OracleConfig::default()).unwrap())
}

/// Every generator setting the suite exercises: r from 0.3 to 0.8, each
/// constraint variant, both selection modes.
fn full_grid() -> Vec<GeneratorConfig> {
    let constraints = [
        Constraint::None,
        Constraint::Soft { lambda: 0.2 },
        Constraint::Soft { lambda: 0.5 },
        Constraint::Hard { tau: 3.0 },
        Constraint::Hard { tau: 6.0 },
    ];
    let mut grid = Vec::new();
    for r in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
        for constraint in constraints {
            for selection in [Selection::Markov, Selection::Uniform] {
                grid.push(GeneratorConfig { r, constraint, selection, ..Default::default() });
            }
        }
    }
    grid
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn subsequence_and_inversion() -> Check {
    let res = resources();
    let grid = full_grid();
    let passwords = SyntheticCorpus::new(11).generate(10_000);
    let (mut subseq, mut inverse, mut wire) = (0, 0, 0);
    for (i, pw) in passwords.iter().enumerate() {
        let cfg = GeneratorConfig { rng_seed: derive(11, i as u64), ..grid[i % grid.len()].clone() };
        let r = generate(&cfg, pw, &res.model, &res.meter, &res.layout).unwrap();
        subseq += is_subsequence(pw, &r.ghost) as usize;
        inverse += (extract_real(&r).unwrap() == *pw) as usize;
        wire += (GhostResult::from_wire(&r.to_wire()).unwrap() == r) as usize;
    }
    let n = passwords.len();
    let mut c = Check::new();
    c.expect(subseq == n, format!("subsequence holds for {subseq}/{n}"))
        .expect(inverse == n, format!("extract_real inverts {inverse}/{n}"))
        .expect(wire == n, format!("wire round trip {wire}/{n}"))
        .note(format!("{n} results over {} configs: subsequence {subseq}/{n}, inversion {inverse}/{n}", grid.len()));
    c
}

fn drive_session(cfg: &GeneratorConfig, password: &str) -> GhostResult {
    let res = resources();
    let mut s = Session::new(cfg, &res.model, &res.meter, &res.layout).unwrap();
    let mut real = password.chars();
    let mut action = s.poll().unwrap();
    loop {
        match action {
            Action::Done => break,
            Action::RequireGhost(g) => {
                s.feed(g).unwrap();
                action = s.poll().unwrap();
            }
            Action::AwaitReal => match real.next() {
                Some(c) => {
                    s.feed(c).unwrap();
                    action = s.poll().unwrap();
                }
                None => action = s.finalize().unwrap(),
            },
        }
    }
    s.result().unwrap()
}

fn batch_session_equivalence() -> Check {
    let res = resources();
    let grid = full_grid();
    let passwords = SyntheticCorpus::new(12).generate(1000);
    let mut same = 0;
    for (i, pw) in passwords.iter().enumerate() {
        let cfg = GeneratorConfig { rng_seed: derive(12, i as u64), ..grid[i % grid.len()].clone() };
        let batch = generate(&cfg, pw, &res.model, &res.meter, &res.layout).unwrap();
        same += (drive_session(&cfg, pw).to_wire() == batch.to_wire()) as usize;
    }
    let mut c = Check::new();
    c.expect(same == passwords.len(), format!("{same}/{} sessions byte-identical to batch", passwords.len()))
        .note(format!("{same}/{} byte-identical", passwords.len()));
    c
}

const EVAL_SEED: u64 = 100;
const BUDGETS: [usize; 3] = [10, 100, 1000];

struct Evaluation {
    report: ghostkey_core::attack::DefenseReport,
    passwords: Vec<String>,
    noise: NoiseConfig,
}

fn evaluation() -> &'static Evaluation {
    static E: OnceLock<Evaluation> = OnceLock::new();
    E.get_or_init(|| {
        let passwords = SyntheticCorpus::new(EVAL_SEED).generate(1000);
        let noise = NoiseConfig { rng_seed: EVAL_SEED, ..Default::default() };
        let report = evaluate_defense(&passwords, &default_grid(EVAL_SEED), &noise, &BUDGETS, resources(), oracle()).unwrap();
        Evaluation { report, passwords, noise }
    })
}

fn tradeoff_trends() -> Check {
    let report = &evaluation().report;
    let overall = |i: usize| report.row(i, 1000, None, None).unwrap();
    let acc: Vec<f64> = (0..SWEEP_R.len()).map(|i| overall(i).accuracy).collect();
    let rel: Vec<f64> = (0..SWEEP_R.len()).map(|i| overall(i).mean_rel_overhead.unwrap()).collect();
    let mut c = Check::new();
    for i in 1..acc.len() {
        c.expect(
            acc[i] <= acc[i - 1] + 0.01,
            format!("accuracy rises from r={} to r={}: {} -> {}", SWEEP_R[i - 1], SWEEP_R[i], pct(acc[i - 1]), pct(acc[i])),
        );
        c.expect(
            rel[i] > rel[i - 1],
            format!("relative overhead not increasing from r={} to r={}", SWEEP_R[i - 1], SWEEP_R[i]),
        );
    }
    c.expect(acc[4] <= 0.01, format!("accuracy at r=0.7 is {}, above 1%", pct(acc[4])));

    // Grid order after the sweep: soft 0.2, soft 0.5, hard 3, hard 6; r = 0.4 is index 1.
    let o = |i: usize| overall(i).mean_rel_overhead.unwrap();
    let (none, soft2, soft5, hard3, hard6) = (o(1), o(5), o(6), o(7), o(8));
    c.expect(soft5 < soft2 && soft2 < none, format!("soft ordering broken: {soft5:.3} / {soft2:.3} / {none:.3}"));
    c.expect(hard3 < hard6 && hard6 < none, format!("hard ordering broken: {hard3:.3} / {hard6:.3} / {none:.3}"));

    for (i, r) in SWEEP_R.iter().enumerate() {
        let medium = report.row(i, 1000, None, Some(LengthBand::Medium)).map(|row| pct(row.accuracy)).unwrap_or_default();
        let too_long = report.trials[i].iter().filter(|t| t.too_long).count();
        c.note(format!(
            "r={r}: accuracy@1000 {} (medium {medium}, published medium {:.2}%), rel overhead {:.3}, abs {:.2}, observations over oracle cap {too_long}",
            pct(acc[i]),
            PUBLISHED_ACCURACY_MEDIUM[i],
            rel[i],
            overall(i).mean_abs_overhead
        ));
    }
    c.note(format!(
        "r=0.4 rel overhead: none {none:.3}, soft0.2 {soft2:.3}, soft0.5 {soft5:.3}, hard3 {hard3:.3}, hard6 {hard6:.3} (published distance 34.5% -> 24.2% -> 18.1% for soft)"
    ));
    c
}

fn budget_scaling() -> Check {
    let eval = evaluation();
    let report = &eval.report;
    let mut c = Check::new();
    let mut cells = 0;
    for (ci, config) in report.configs.iter().enumerate() {
        for row in report.rows.iter().filter(|r| r.budget == 10 && r.r == config.r && r.constraint == config.constraint.kind()) {
            if row.lambda_or_tau != config.constraint.parameter() {
                continue;
            }
            let acc = |b| report.row(ci, b, row.class_count, row.band).unwrap().accuracy;
            cells += 1;
            c.expect(
                acc(1000) >= acc(100) && acc(100) >= acc(10),
                format!("config {ci} cell {:?}/{:?}: {} {} {}", row.class_count, row.band, acc(10), acc(100), acc(1000)),
            );
        }
    }

    // Prefix property on real observations.
    let res = resources();
    let cfg = GeneratorConfig { rng_seed: EVAL_SEED, ..Default::default() };
    let (mut checked, mut prefix_ok) = (0, 0);
    for (i, pw) in eval.passwords.iter().take(200).enumerate() {
        let gen_cfg = GeneratorConfig { rng_seed: derive(cfg.rng_seed, i as u64), ..cfg.clone() };
        let ghost = generate(&gen_cfg, pw, &res.model, &res.meter, &res.layout).unwrap();
        let noise = NoiseConfig { rng_seed: derive(eval.noise.rng_seed, i as u64), ..eval.noise.clone() };
        let observed = simulate_inference(&res.layout, &ghost.ghost, &noise).unwrap();
        let full = match oracle().enumerate(&observed, 1000) {
            Ok(g) => g,
            Err(OracleError::TooLong { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        checked += 1;
        let ok = [10, 100].iter().all(|&b| {
            let small = oracle().enumerate(&observed, b).unwrap();
            small.len() == b.min(full.len()) && small[..] == full[..small.len()]
        });
        prefix_ok += ok as usize;
    }
    c.expect(prefix_ok == checked, format!("prefix property holds for {prefix_ok}/{checked} guess lists"));
    c.note(format!("{cells} (config, cell) pairs monotone in budget; prefix property {prefix_ok}/{checked} observations"));
    c
}

fn bloom_sizing() -> Check {
    let mut c = Check::new();
    let big = bf_params(1_000_000, 1e-30).unwrap();
    let m_err = (big.m as f64 / 1.438e8 - 1.0).abs();
    let mb_err = (big.storage_mb() / 17.55 - 1.0).abs();
    c.expect(m_err <= 0.05, format!("m = {} is {:.1}% from 1.438e8", big.m, 100.0 * m_err));
    c.expect(mb_err <= 0.05, format!("storage {:.2} MB is {:.1}% from 17.55 MB", big.storage_mb(), 100.0 * mb_err));
    c.note(format!(
        "(1e6, 1e-30): m = {} bits, h = {}, {:.2} MB ({:.2} MiB) vs published 17.55 MB",
        big.m,
        big.h,
        big.storage_mb(),
        big.storage_mib()
    ));

    let mut f = BloomFilter::new(bf_params(100_000, 1e-3).unwrap().with_seed(42));
    for i in 0..100_000u32 {
        f.insert(format!("member-{i}").as_bytes());
    }
    let false_neg = (0..100_000u32).filter(|i| !f.contains(format!("member-{i}").as_bytes())).count();
    let false_pos = (0..100_000u32).filter(|i| f.contains(format!("stranger-{i}").as_bytes())).count();
    let fpr = false_pos as f64 / 1e5;
    c.expect(false_neg == 0, format!("{false_neg} false negatives"));
    c.expect(fpr <= 1e-2, format!("empirical FPR {fpr:.2e} above 1e-2"));

    let keys: Vec<Vec<u8>> = (0..10_001u32).map(|i| format!("member-{}", i * 7).into_bytes()).collect();
    let mut times: Vec<Duration> = keys
        .iter()
        .map(|k| {
            let t = Instant::now();
            std::hint::black_box(f.contains(std::hint::black_box(k)));
            t.elapsed()
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2].as_secs_f64();
    c.expect(median <= 10.0 * 4.35e-6, format!("median lookup {:.2} us exceeds 43.5 us", median * 1e6));
    c.note(format!(
        "(1e5, 1e-3): empirical FPR {fpr:.2e} (analytic {:.2e}), false negatives {false_neg}, median lookup {:.2} us vs published 4.35 us",
        f.config().analytic_fpr(100_000),
        median * 1e6
    ));
    c
}

fn detector_soundness() -> Check {
    let res = resources();
    let passwords = SyntheticCorpus::new(13).generate(300);
    let bloom = bf_params(300 * 3 * 20, 1e-9).unwrap();
    let mut store = DetectorStore::in_memory(DetectorConfig { honeyword_count: 20, iterations: 1000, bloom }, 13);
    let (mut replays, mut alarmed, mut legit, mut legit_ok) = (0, 0, 0, 0);
    for (ri, r) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        for (i, pw) in passwords.iter().enumerate() {
            let user = format!("u{ri}-{i}");
            store.register(&user, pw).unwrap();
            let cfg = GeneratorConfig { r, rng_seed: derive(13, (ri * 1000 + i) as u64), ..Default::default() };
            let ghost = generate(&cfg, pw, &res.model, &res.meter, &res.layout).unwrap();
            legit += 1;
            legit_ok += (store.check_login_attempt(&user, pw, Some(&ghost.ghost), oracle()).unwrap() == LoginVerdict::Success) as usize;
            replays += 1;
            alarmed += (store.check_login_attempt(&user, &ghost.ghost, None, oracle()).unwrap() == LoginVerdict::FailAlarm) as usize;
            legit += 1;
            legit_ok += (store.check_login_attempt(&user, pw, None, oracle()).unwrap() == LoginVerdict::Success) as usize;
        }
    }
    let mut c = Check::new();
    c.expect(alarmed == replays, format!("exact-ghost replay alarmed {alarmed}/{replays}"));
    c.expect(legit_ok == legit, format!("legitimate logins accepted {legit_ok}/{legit}"));
    c.expect(store.alarms().len() == replays, format!("{} alarm events for {replays} replays", store.alarms().len()));
    c.note(format!("exact-ghost replays alarmed {alarmed}/{replays}; legitimate logins accepted {legit_ok}/{legit}"));

    let configs: Vec<GeneratorConfig> =
        [0.3, 0.5, 0.7].iter().map(|&r| GeneratorConfig { r, rng_seed: 14, ..Default::default() }).collect();
    let attempts: Vec<usize> = (1..=10).collect();
    let noise = NoiseConfig { rng_seed: 14, ..Default::default() };
    let eval = evaluate_detector(&passwords, &configs, 20, &attempts, &noise, res, oracle(), 1000).unwrap();
    for config in &configs {
        let rows: Vec<_> = eval.rows.iter().filter(|row| row.r == config.r).collect();
        c.expect(
            rows.windows(2).all(|w| w[1].detection_rate >= w[0].detection_rate),
            format!("detection not monotone in attempts at r={}", config.r),
        );
        for row in rows.iter().filter(|row| row.attempts == 1 || row.attempts == 10) {
            c.note(format!(
                "r={} attempts={}: detection {} (published {:.2}%), attacker success {}",
                row.r,
                row.attempts,
                pct(row.detection_rate),
                published_detection(row.r, row.attempts).unwrap_or(f64::NAN),
                pct(row.attacker_success_rate)
            ));
        }
    }
    c
}

fn cli(args: &[&str], stdin: &[u8]) -> (u8, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["ghostkey"];
    argv.extend_from_slice(args);
    let code = ghostkey_cli::run(argv, &mut &stdin[..], &mut out, &mut err);
    (code, out)
}

fn cli_golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/golden").join(name)
}

/// Request/response transcript of a scripted service conversation.
fn service_transcript(seed: u64) -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig::new("127.0.0.1:0", dir.path());
    config.seed = seed;
    config.detector.iterations = 10;
    config.detector.bloom = bf_params(10_000, 1e-9).unwrap();
    let server = Server::start_with(config, resources().clone()).unwrap();
    let addr = server.local_addr().unwrap();
    let handle = server.shutdown_handle();
    let runner = thread::spawn(move || server.run().unwrap());

    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut transcript = String::new();
    let mut call = |msg: serde_json::Value| -> serde_json::Value {
        writer.write_all(format!("{msg}\n").as_bytes()).unwrap();
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        transcript.push_str(&line);
        serde_json::from_str(&line).unwrap()
    };
    call(serde_json::json!({"op": "register", "request_id": "1", "user": "ana", "password": "password1"}));
    let r = call(serde_json::json!({"op": "session_start", "request_id": "2", "user": "ana"}));
    let session = r["session"].as_str().unwrap().to_string();
    let mut action = r;
    let mut real = "password1".chars();
    let mut typed = String::new();
    let mut id = 3;
    loop {
        id += 1;
        let key = match action["action"].as_str().unwrap() {
            "done" => break,
            "require_ghost" => action["ghost_char"].as_str().unwrap().chars().next().unwrap(),
            _ => match real.next() {
                Some(k) => k,
                None => {
                    action = call(serde_json::json!({"op": "session_finalize", "request_id": id.to_string(), "session": session}));
                    continue;
                }
            },
        };
        typed.push(key);
        action = call(serde_json::json!({"op": "session_key", "request_id": id.to_string(), "session": session, "char": key.to_string()}));
    }
    call(serde_json::json!({"op": "login", "request_id": "a", "user": "ana", "password": "password1", "session": session}));
    call(serde_json::json!({"op": "login", "request_id": "b", "user": "ana", "password": typed}));
    transcript.push_str(&typed);
    handle.shutdown();
    runner.join().unwrap();
    transcript
}

fn cli_determinism() -> Check {
    let mut c = Check::new();
    let dir = tempfile::tempdir().unwrap();
    let passwords = std::fs::read(cli_golden("passwords.txt")).unwrap();
    let wire = std::fs::read(cli_golden("gen_ghost_seed7.wire")).unwrap();

    let goldens: [(&str, Vec<&str>, &[u8]); 5] = [
        ("bf_params_1e6.txt", vec!["bf-params", "--n", "1000000", "--fpr", "1e-30"], b""),
        ("gen_ghost_seed7.wire", vec!["gen-ghost", "--seed", "7", "--format", "wire"], &passwords),
        ("gen_ghost_seed7_soft.jsonl", vec!["gen-ghost", "--seed", "7", "--format", "json-lines", "--lambda", "0.5"], &passwords),
        ("simulate_attack_seed3.csv", vec!["simulate-attack", "--seed", "3", "--budget", "5", "--format", "csv"], &wire),
        (
            "eval_defense_seed4.csv",
            vec!["eval-defense", "--seed", "4", "--synthetic", "40", "--grid", "sweep", "--budget", "10,100", "--format", "csv"],
            b"",
        ),
    ];
    for (name, args, input) in &goldens {
        let expected = std::fs::read(cli_golden(name)).unwrap();
        let (code, out) = cli(args, input);
        c.expect(code == 0 && out == expected, format!("{} differs from golden {name}", args[0]));
    }

    let model = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let (ma, mb, ka, kb) = (model("a.vrsm"), model("b.vrsm"), model("a.meter"), model("b.meter"));
    // (argv, stdin, output file pair substituted for {A})
    type Case = (Vec<String>, Vec<u8>, Option<(String, String)>);
    let mut twice: Vec<Case> = vec![
        (
            vec!["train-markov", "--seed", "9", "--synthetic", "500", "--out", "{A}"].into_iter().map(String::from).collect(),
            vec![],
            Some((ma.clone(), mb.clone())),
        ),
        (
            vec!["calibrate-meter", "--seed", "9", "--synthetic", "300", "--out", "{A}"].into_iter().map(String::from).collect(),
            vec![],
            Some((ka.clone(), kb.clone())),
        ),
        (vec!["eval-detector".into(), "--seed".into(), "5".into(), "--synthetic".into(), "15".into(), "--iterations".into(), "1".into()], vec![], None),
        (vec!["dump-layout".into(), "--format".into(), "json-lines".into()], vec![], None),
        (vec!["gen-ghost".into(), "--seed".into(), "2".into(), "--r".into(), "0.7".into(), "--tau".into(), "3".into()], passwords.clone(), None),
    ];
    for (args, input, files) in twice.drain(..) {
        let run_with = |target: Option<&String>| {
            let argv: Vec<&str> = args.iter().map(|a| if a == "{A}" { target.unwrap().as_str() } else { a.as_str() }).collect();
            cli(&argv, &input)
        };
        let (ca, oa) = run_with(files.as_ref().map(|f| &f.0));
        let (cb, ob) = run_with(files.as_ref().map(|f| &f.1));
        let mut same = ca == 0 && cb == 0 && oa == ob;
        if let Some((fa, fb)) = &files {
            same &= std::fs::read(fa).ok() == std::fs::read(fb).ok();
        }
        c.expect(same, format!("{} not reproducible", args[0]));
    }
    let (a, b) = (service_transcript(21), service_transcript(21));
    c.expect(a == b, "serve transcripts differ under a fixed seed");
    c.note("bf-params, gen-ghost, simulate-attack, eval-defense match golden files; train-markov, calibrate-meter, eval-detector, dump-layout, gen-ghost repeat byte-identically; serve transcript repeats byte-identically");
    c
}

fn main() -> ExitCode {
    let mut suite = Suite::new();
    let min = |m: u64| Duration::from_secs(60 * m);
    suite.criterion("subsequence-and-inversion", min(1), subsequence_and_inversion);
    suite.criterion("batch-interactive-equivalence", min(1), batch_session_equivalence);
    suite.criterion("tradeoff-trends", min(10), tradeoff_trends);
    suite.criterion("budget-scaling", min(10), budget_scaling);
    suite.criterion("bloom-sizing", min(2), bloom_sizing);
    suite.criterion("detector-soundness", min(5), detector_soundness);
    suite.criterion("cli-determinism", min(5), cli_determinism);
    suite.finish()
}
