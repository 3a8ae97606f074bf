//! Confusion-matrix text files.
//!
//! ```text
//! # rows: measured y, columns: prepared x
//! qubits 1
//! shots 100000
//! 0.987 0.03
//! 0.013 0.97
//! ```
//!
//! `shots` is optional. Entries are `P(y | x)`; each column must sum to one.

use std::fmt::Write as _;
use std::path::Path;

use qtrans_core::ConfusionMatrix;

use crate::problem::ParseError;

pub fn parse_confusion(text: &str) -> Result<ConfusionMatrix, ParseError> {
    let mut n: Option<usize> = None;
    let mut shots: Option<u64> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last = 1;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let err = |m: String| ParseError { line, message: m };
        match toks[0] {
            "qubits" if n.is_none() && rows.is_empty() && toks.len() == 2 => {
                n = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(format!("invalid qubit count '{}'", toks[1])))?,
                );
            }
            "shots" if shots.is_none() && rows.is_empty() && toks.len() == 2 => {
                shots = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(format!("invalid shot count '{}'", toks[1])))?,
                );
            }
            _ => {
                let n = n.ok_or_else(|| err("expected 'qubits N' before matrix rows".into()))?;
                let row = toks
                    .iter()
                    .map(|t| {
                        t.replace('\u{2212}', "-")
                            .parse::<f64>()
                            .map_err(|_| err(format!("invalid entry '{t}'")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() != 1 << n {
                    return Err(err(format!(
                        "expected {} entries, got {}",
                        1 << n,
                        row.len()
                    )));
                }
                rows.push(row);
            }
        }
    }
    let n = n.ok_or(ParseError {
        line: last,
        message: "missing 'qubits N'".into(),
    })?;
    if rows.len() != 1 << n {
        return Err(ParseError {
            line: last,
            message: format!("expected {} rows, got {}", 1 << n, rows.len()),
        });
    }
    ConfusionMatrix::new(n, rows.concat(), shots).map_err(|e| ParseError {
        line: last,
        message: e.to_string(),
    })
}

pub fn format_confusion(cm: &ConfusionMatrix) -> String {
    let mut s = String::from("# rows: measured y, columns: prepared x\n");
    let _ = writeln!(s, "qubits {}", cm.n());
    if let Some(shots) = cm.calibration_shots() {
        let _ = writeln!(s, "shots {shots}");
    }
    for y in 0..cm.dim() {
        let row: Vec<String> = (0..cm.dim()).map(|x| cm.get(y, x).to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn read_confusion(path: &Path) -> Result<ConfusionMatrix, crate::Error> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    parse_confusion(&text).map_err(|e| crate::Error::Parse {
        path: path.display().to_string(),
        source: e,
    })
}
