//! Run manifests, verdict reports, and serialization helpers.
//!
//! Reports are JSON with a manifest block tying every number to the command,
//! parameters and seed that produced it. Data series go to CSV with floats at
//! 17 significant digits so re-parsing reproduces the exact doubles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Identity of one run: command, full parameter set, seed, input
/// fingerprints and tool version. Two runs with equal manifests produce
/// byte-identical reports; wall time is therefore reported on stderr, not
/// embedded in the report bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    /// FNV-1a hash of each input germ's canonical spec JSON, keyed by name
    pub germ_fingerprints: BTreeMap<String, String>,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            params: BTreeMap::new(),
            seed,
            germ_fingerprints: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn fingerprint(&mut self, name: &str, canonical_json: &str) -> &mut Self {
        self.germ_fingerprints
            .insert(name.to_string(), fnv1a_hex(canonical_json.as_bytes()));
        self
    }
}

/// How a verdict-producing command ended, mapped onto the exit-code
/// contract (0 / 2 / 3; errors exit 1 and usage problems 64).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

/// A lemma-tagged verdict: measured quantities, the thresholds they were
/// held against, and the outcome.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub lemma: String,
    pub manifest: RunManifest,
    pub measured: Value,
    pub thresholds: Value,
    pub outcome: Outcome,
    /// Betti-style equality is necessary, not sufficient, for the paper's
    /// homotopy statements
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub necessary_condition_only: bool,
}

impl VerdictReport {
    pub fn new(lemma: &str, manifest: RunManifest, outcome: Outcome) -> VerdictReport {
        VerdictReport {
            lemma: lemma.to_string(),
            manifest,
            measured: Value::Null,
            thresholds: Value::Null,
            outcome,
            necessary_condition_only: false,
        }
    }
}

/// 64-bit FNV-1a, hex-encoded; cheap content fingerprint for manifests.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Pretty JSON with a trailing newline; deterministic because every map in
/// the report types is a BTreeMap and serde_json preserves struct order.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing report")?;
    s.push('\n');
    Ok(s)
}

/// Write the report to `--out` or stdout.
pub fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV: header row plus data rows, floats at 17 significant digits.
pub fn csv_series(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| f17(x)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_fingerprint_is_stable() {
        assert_eq!(fnv1a_hex(b""), "cbf29ce484222325");
        assert_eq!(fnv1a_hex(b"a"), "af63dc4c8601ec8c");
        assert_eq!(fnv1a_hex(b"germ"), fnv1a_hex(b"germ"));
        assert_ne!(fnv1a_hex(b"germ"), fnv1a_hex(b"gern"));
    }

    #[test]
    fn csv_floats_round_trip_exactly() {
        let x = 0.1 + 0.2;
        let s = csv_series(&["v"], &[vec![x]]);
        let line = s.lines().nth(1).unwrap();
        assert_eq!(line.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(csv_series(&["r", "estimate", "stderr"], &[]), "r,estimate,stderr\n");
    }

    #[test]
    fn outcome_exit_codes_follow_the_contract() {
        assert_eq!(Outcome::Pass.exit_code(), 0);
        assert_eq!(Outcome::Fail.exit_code(), 2);
        assert_eq!(Outcome::Inconclusive.exit_code(), 3);
    }
}
