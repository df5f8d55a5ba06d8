//! Line-delimited design files.
//!
//! Every line is one JSON object with a `design` token array. Generated
//! files add the generator `index`; labeled files add `hover_time_s`,
//! `label` and `failure_reason`; filter output adds `probability`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use skyforge_core::physics::FailureReason;
use skyforge_core::pipeline::{KeptDesign, Labeled};
use skyforge_core::TokenSequence;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::tokens;

#[derive(Serialize)]
struct LabeledOut<'a> {
    design: Value,
    hover_time_s: f64,
    label: u8,
    failure_reason: Option<&'a str>,
    index: u64,
}

#[derive(Serialize)]
struct DesignOut {
    index: u64,
    design: Value,
}

#[derive(Serialize)]
struct KeptOut {
    index: u64,
    probability: f64,
    design: Value,
}

#[derive(Deserialize)]
struct LineIn {
    design: Value,
    #[serde(default)]
    index: Option<u64>,
    #[serde(default)]
    hover_time_s: Option<f64>,
    #[serde(default)]
    label: Option<u8>,
    #[serde(default)]
    failure_reason: Option<String>,
    #[serde(default)]
    probability: Option<f64>,
}

/// One parsed line of any design file.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignLine {
    /// 1-based line number in the source file.
    pub line: usize,
    pub index: Option<u64>,
    pub tokens: TokenSequence,
    pub hover_time_s: Option<f64>,
    pub label: Option<u8>,
    pub failure_reason: Option<FailureReason>,
    pub probability: Option<f64>,
}

impl DesignLine {
    /// The labeled form, if the line carries a label. Lines without an
    /// index get their 0-based position in the file.
    pub fn labeled(&self, position: usize) -> Option<Labeled> {
        Some(Labeled {
            index: self.index.unwrap_or(position as u64),
            tokens: self.tokens.clone(),
            label: self.label?,
            hover_time_s: self.hover_time_s.unwrap_or(0.0),
            failure_reason: self.failure_reason,
        })
    }
}

pub fn design_line(index: u64, seq: &TokenSequence) -> String {
    serde_json::to_string(&DesignOut {
        index,
        design: tokens::sequence_to_json(seq),
    })
    .expect("serializable")
}

pub fn labeled_line(l: &Labeled) -> String {
    serde_json::to_string(&LabeledOut {
        design: tokens::sequence_to_json(&l.tokens),
        hover_time_s: l.hover_time_s,
        label: l.label,
        failure_reason: l.failure_reason.map(FailureReason::name),
        index: l.index,
    })
    .expect("serializable")
}

pub fn kept_line(k: &KeptDesign) -> Result<String> {
    let seq = skyforge_core::codec::flatten(&k.design)?;
    Ok(serde_json::to_string(&KeptOut {
        index: k.index,
        probability: k.probability,
        design: tokens::sequence_to_json(&seq),
    })
    .expect("serializable"))
}

pub fn parse_line(text: &str, line: usize, path: &Path) -> Result<DesignLine> {
    let err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let raw: LineIn = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let tokens = tokens::sequence_from_json(&raw.design).map_err(|e| err(e.to_string()))?;
    let failure_reason = match raw.failure_reason.as_deref() {
        None => None,
        Some(name) => Some(FailureReason::from_name(name).ok_or_else(|| err(format!("unknown failure_reason `{name}`")))?),
    };
    if let Some(y) = raw.label {
        if y > 1 {
            return Err(err(format!("label must be 0 or 1, got {y}")));
        }
    }
    Ok(DesignLine {
        line,
        index: raw.index,
        tokens,
        hover_time_s: raw.hover_time_s,
        label: raw.label,
        failure_reason,
        probability: raw.probability,
    })
}

/// Parses every non-blank line of `path`.
pub fn read(path: &Path) -> Result<Vec<DesignLine>> {
    let text = fsutil::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1, path))
        .collect()
}

/// Reads a labeled file; every line must carry a label.
pub fn read_labeled(path: &Path) -> Result<Vec<Labeled>> {
    read(path)?
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.labeled(i).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: d.line,
                message: "missing `label`".into(),
            })
        })
        .collect()
}

/// Writes lines atomically, each followed by `\n`.
pub fn write_lines<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> Result<usize> {
    let mut w = fsutil::AtomicWriter::create(path)?;
    let mut n = 0;
    for l in lines {
        w.write_all(l.as_bytes()).and_then(|_| w.write_all(b"\n")).map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.commit()?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use skyforge_core::codec::Token;
    use skyforge_core::{NodeKind, ParamKey, ParamValue};

    fn seq() -> TokenSequence {
        TokenSequence(vec![
            Token::Node(NodeKind::Fuselage),
            Token::Param(ParamKey::BatteryType, ParamValue::Categorical("b".into())),
        ])
    }

    #[test]
    fn labeled_line_format() {
        let l = Labeled {
            index: 3,
            tokens: seq(),
            label: 0,
            hover_time_s: 0.0,
            failure_reason: Some(FailureReason::NoPropellers),
        };
        let text = labeled_line(&l);
        assert_eq!(
            text,
            r#"{"design":[{"node_type":"Fuselage"},{"batteryType":"b"}],"hover_time_s":0.0,"label":0,"failure_reason":"no_propellers","index":3}"#
        );
        let back = parse_line(&text, 1, Path::new("x")).unwrap();
        assert_eq!(back.labeled(0).unwrap(), l);
    }

    #[test]
    fn bad_lines_are_reported() {
        let p = Path::new("f");
        assert!(parse_line("{", 7, p).is_err());
        match parse_line(r#"{"design":[{"nope":1}]}"#, 9, p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }
        assert!(parse_line(r#"{"design":[],"label":2}"#, 1, p).is_err());
        assert!(parse_line(r#"{"design":[],"failure_reason":"tired"}"#, 1, p).is_err());
    }
}
