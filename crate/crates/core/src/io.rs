//! Reading and writing set files.
//!
//! JSON files look like `{"group": "Z", "elements": [1, 2, 3]}` or
//! `{"group": [3, 3], "elements": [[0, 1], [2, 2]]}`. Plain text files hold
//! one integer per line and are read as subsets of Z; blank lines and lines
//! starting with `#` are skipped.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Result};
use crate::group::{AmbientGroup, GroupElem};
use crate::sets::GroupSet;

#[derive(Serialize, Deserialize)]
struct SetFile {
    group: Value,
    elements: Vec<GroupElem>,
}

fn parse_group(v: &Value) -> Result<AmbientGroup> {
    match v {
        Value::String(s) if s == "Z" => Ok(AmbientGroup::Integers),
        Value::Array(items) => {
            let moduli = items
                .iter()
                .map(|x| x.as_u64().ok_or_else(|| invalid(format!("bad modulus {x}"))))
                .collect::<Result<Vec<_>>>()?;
            AmbientGroup::finite(moduli)
        }
        other => Err(invalid(format!("group must be \"Z\" or a list of moduli, got {other}"))),
    }
}

fn group_value(g: &AmbientGroup) -> Value {
    match g {
        AmbientGroup::Integers => Value::String("Z".into()),
        AmbientGroup::FiniteAbelian(m) => Value::Array(m.iter().map(|&n| Value::from(n)).collect()),
    }
}

pub fn parse_json(text: &str) -> Result<GroupSet> {
    let file: SetFile = serde_json::from_str(text).map_err(|e| invalid(format!("malformed set file: {e}")))?;
    let group = parse_group(&file.group)?;
    GroupSet::from_elems(group, &file.elements)
}

pub fn parse_plain(text: &str) -> Result<GroupSet> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: i64 = line
            .parse()
            .map_err(|_| invalid(format!("line {}: expected an integer, got {line:?}", lineno + 1)))?;
        values.push(v);
    }
    Ok(GroupSet::from_ints(values))
}

/// Detects the format from the first non-blank character.
pub fn parse_set(text: &str) -> Result<GroupSet> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_plain(text)
    }
}

pub fn set_to_value(set: &GroupSet) -> Value {
    serde_json::json!({
        "group": group_value(set.ambient()),
        "elements": set.decoded(),
    })
}

pub fn to_json(set: &GroupSet) -> String {
    set_to_value(set).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_integers() {
        let s = parse_json(r#"{"group":"Z","elements":[3,-1,0,3]}"#).unwrap();
        assert_eq!(s, GroupSet::from_ints([-1, 0, 3]));
        assert_eq!(parse_json(&to_json(&s)).unwrap(), s);
    }

    #[test]
    fn json_round_trip_finite() {
        let s = parse_json(r#"{"group":[3,4],"elements":[[2,3],[0,1]]}"#).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(parse_json(&to_json(&s)).unwrap(), s);
    }

    #[test]
    fn plain_text() {
        let s = parse_set("# header\n5\n\n-2\n5\n").unwrap();
        assert_eq!(s, GroupSet::from_ints([-2, 5]));
        assert!(parse_set("1\nx\n").is_err());
    }

    #[test]
    fn rejects_unreduced_residues() {
        assert!(parse_json(r#"{"group":[3],"elements":[[3]]}"#).is_err());
        assert!(parse_json(r#"{"group":"Q","elements":[]}"#).is_err());
    }
}
