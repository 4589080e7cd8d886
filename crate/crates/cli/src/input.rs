//! Resolving set arguments: a file path, `-` for stdin, an inline JSON
//! document, or a generator such as `interval:5` or `behrend:3:3`.

use std::io::Read;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};
use sumfree::constructions::{parse_rational, GeneratorSpec};
use sumfree::io::{parse_set, set_to_value};
use sumfree::{Error, GroupSet, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("{what}: cannot parse {s:?}")))
}

/// Parses `family:arg:...`; random families draw their seed from `seed`.
pub fn generator(spec: &str, seed: u64) -> Result<GeneratorSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    let want = |n: usize| {
        if parts.len() == n + 1 {
            Ok(())
        } else {
            Err(bad(format!("generator {:?} takes {n} argument(s)", parts[0])))
        }
    };
    Ok(match parts[0] {
        "powers-of-two" => {
            want(1)?;
            GeneratorSpec::PowersOfTwo { n: num(parts[1], "N")? }
        }
        "interval" => {
            want(1)?;
            GeneratorSpec::Interval { n: num(parts[1], "N")? }
        }
        "ap" => {
            want(2)?;
            GeneratorSpec::Ap { length: num(parts[1], "length")?, step: num(parts[2], "step")? }
        }
        "behrend" => {
            want(2)?;
            GeneratorSpec::Behrend { d: num(parts[1], "d")?, n: num(parts[2], "n")? }
        }
        "random-dense" => {
            want(2)?;
            GeneratorSpec::RandomDense { n: num(parts[1], "N")?, alpha: parse_rational(parts[2])?, seed }
        }
        other => return Err(bad(format!("unknown generator family {other:?}"))),
    })
}

/// Loads a set argument. Existing paths win over generator syntax.
pub fn load_set(arg: &str, seed: u64) -> Result<GroupSet> {
    if arg == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(|e| bad(format!("stdin: {e}")))?;
        return parse_set(&text);
    }
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return parse_set(arg);
    }
    if trimmed.starts_with('[') {
        let values: Vec<i64> = serde_json::from_str(arg).map_err(|e| bad(format!("inline set: {e}")))?;
        return Ok(GroupSet::from_ints(values));
    }
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).map_err(|e| bad(format!("{arg}: {e}")))?;
        return parse_set(&text);
    }
    if arg.contains(':') {
        return generator(arg, seed)?.generate();
    }
    Err(bad(format!("{arg}: no such file and not a generator spec")))
}

/// Hex SHA-256 of the canonical JSON of the inputs and result-affecting
/// parameters.
pub fn digest(sets: &[&GroupSet], params: &Value) -> String {
    let canonical = serde_json::json!({
        "inputs": sets.iter().map(|s| set_to_value(s)).collect::<Vec<_>>(),
        "params": params,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}
