//! Pass/fail bookkeeping for the acceptance suite.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Findings of one criterion: failed expectations plus informational notes.
#[derive(Debug, Default)]
pub struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a failure with `message` unless `ok`.
    pub fn expect(&mut self, ok: bool, message: impl Into<String>) -> &mut Self {
        if !ok {
            self.failures.push(message.into());
        }
        self
    }

    pub fn note(&mut self, message: impl Into<String>) -> &mut Self {
        self.notes.push(message.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub struct Suite {
    results: Vec<bool>,
}

impl Default for Suite {
    fn default() -> Self {
        Self::new()
    }
}

impl Suite {
    pub fn new() -> Self {
        Self { results: Vec::new() }
    }

    /// Runs one criterion and prints its verdict line followed by indented
    /// details. Exceeding `budget` or panicking fails the criterion.
    pub fn criterion(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let mut check = outcome.unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            let mut c = Check::new();
            c.expect(false, format!("panicked: {msg}"));
            c
        });
        check.expect(elapsed <= budget, format!("runtime {:.1} s exceeds {} s", elapsed.as_secs_f64(), budget.as_secs()));
        let verdict = if check.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} {name} ({:.1} s, budget {} s)", elapsed.as_secs_f64(), budget.as_secs());
        for f in &check.failures {
            println!("    fail: {f}");
        }
        for n in &check.notes {
            println!("    {n}");
        }
        self.results.push(check.passed());
    }

    pub fn finish(self) -> ExitCode {
        let failed = self.results.iter().filter(|&&p| !p).count();
        println!("acceptance: {} passed, {failed} failed", self.results.len() - failed);
        if failed == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}
