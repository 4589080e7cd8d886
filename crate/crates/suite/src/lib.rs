//! Pass/fail bookkeeping for the acceptance run in `tests/acceptance.rs`.

use std::time::Duration;

#[derive(Debug, Default)]
pub struct Ledger {
    rows: Vec<(u32, bool)>,
}

impl Ledger {
    /// Prints one line for criterion `id` and remembers the outcome.
    pub fn record(&mut self, id: u32, pass: bool, elapsed: Duration, detail: &str) {
        let word = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {word} ({:.2}s) {detail}", elapsed.as_secs_f64());
        self.rows.push((id, pass));
    }

    pub fn failed(&self) -> Vec<u32> {
        self.rows.iter().filter(|(_, pass)| !pass).map(|(id, _)| *id).collect()
    }
}
