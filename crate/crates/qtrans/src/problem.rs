//! Operator problem files.
//!
//! ```text
//! # comment (also allowed after a term)
//! [hamiltonian]
//! -0.81 II
//! 0.17 ZI
//! [dipole_z]
//! 0.3 ZI
//! [penalty_sz2_alpha]
//! 4
//! ```
//!
//! Operator sections hold `coefficient pauli-string` lines, penalty sections a
//! single number. Lines before the first header belong to `hamiltonian`.
//! Coefficients accept the Unicode minus sign `−` as well as `-`.

use std::fmt::{self, Write as _};
use std::path::Path;

use qtrans_core::fermion::{build_s_squared, build_sz_squared};
use qtrans_core::{Observable, Pauli, PauliString};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at line {line}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Hamiltonian,
    Dipole(usize),
    Alpha,
    Beta,
}

impl Section {
    const ALL: [(&'static str, Section); 6] = [
        ("hamiltonian", Section::Hamiltonian),
        ("dipole_x", Section::Dipole(0)),
        ("dipole_y", Section::Dipole(1)),
        ("dipole_z", Section::Dipole(2)),
        ("penalty_sz2_alpha", Section::Alpha),
        ("penalty_s2_beta", Section::Beta),
    ];

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, sec)| *sec)
    }
}

pub const DIPOLE_NAMES: [&str; 3] = ["dipole_x", "dipole_y", "dipole_z"];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub hamiltonian: Observable,
    pub dipoles: [Option<Observable>; 3],
    pub penalty_sz2_alpha: Option<f64>,
    pub penalty_s2_beta: Option<f64>,
}

impl ProblemFile {
    pub fn new(hamiltonian: Observable) -> Self {
        Self {
            hamiltonian,
            dipoles: [None, None, None],
            penalty_sz2_alpha: None,
            penalty_s2_beta: None,
        }
    }

    pub fn n(&self) -> usize {
        self.hamiltonian.n()
    }

    pub fn has_dipoles(&self) -> bool {
        self.dipoles.iter().any(Option::is_some)
    }

    /// Dipole operators with absent axes as the zero operator.
    pub fn dipole_operators(&self) -> [Observable; 3] {
        let n = self.n();
        self.dipoles
            .clone()
            .map(|d| d.unwrap_or_else(|| Observable::zero(n)))
    }

    /// `H + α·Sz² + β·S²`, the operator the eigensolvers minimize.
    pub fn penalized_hamiltonian(&self) -> qtrans_core::Result<Observable> {
        let mut h = self.hamiltonian.clone();
        if self.penalty_sz2_alpha.is_none() && self.penalty_s2_beta.is_none() {
            return Ok(h);
        }
        if !self.n().is_multiple_of(2) {
            return Err(qtrans_core::Error::InvalidConfig(format!(
                "spin penalties need an even number of spin orbitals, got {}",
                self.n()
            )));
        }
        let spatial = self.n() / 2;
        if let Some(a) = self.penalty_sz2_alpha {
            h = build_sz_squared(spatial)?.scale_add(a, &h)?;
        }
        if let Some(b) = self.penalty_s2_beta {
            h = build_s_squared(spatial)?.scale_add(b, &h)?;
        }
        Ok(h)
    }

    pub fn read(path: &Path) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        parse_problem(&text).map_err(|e| crate::Error::Parse {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), crate::Error> {
        std::fs::write(path, self.to_string()).map_err(|e| crate::Error::io(path, e))
    }
}

fn parse_coefficient(tok: &str, line: usize) -> Result<f64, ParseError> {
    let normalized = tok.replace('\u{2212}', "-");
    match normalized.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(ParseError::new(
            line,
            format!("non-finite coefficient '{tok}'"),
        )),
        Err(_) => Err(ParseError::new(
            line,
            format!("invalid coefficient '{tok}'"),
        )),
    }
}

fn parse_pauli(tok: &str, line: usize) -> Result<PauliString, ParseError> {
    let ops = tok
        .chars()
        .map(|c| match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(ParseError::new(
                line,
                format!("invalid Pauli character '{other}'"),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    PauliString::new(ops).map_err(|e| ParseError::new(line, e.to_string()))
}

#[derive(Default)]
struct Collected {
    terms: Vec<(f64, PauliString)>,
    value: Option<f64>,
    seen: bool,
}

/// Parses the problem-file grammar. Every error carries a 1-based line number.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut sections: Vec<(Section, Collected)> = Section::ALL
        .iter()
        .map(|(_, s)| (*s, Collected::default()))
        .collect();
    let mut current = Section::Hamiltonian;
    let mut n: Option<usize> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    ParseError::new(line, format!("malformed section header '{content}'"))
                })?
                .trim();
            let sec = Section::from_name(name)
                .ok_or_else(|| ParseError::new(line, format!("unknown section '{name}'")))?;
            let slot = &mut sections
                .iter_mut()
                .find(|(s, _)| *s == sec)
                .expect("all sections listed")
                .1;
            if slot.seen {
                return Err(ParseError::new(line, format!("duplicate section '{name}'")));
            }
            slot.seen = true;
            current = sec;
            continue;
        }
        let slot = &mut sections
            .iter_mut()
            .find(|(s, _)| *s == current)
            .expect("all sections listed")
            .1;
        slot.seen = true;
        let toks: Vec<&str> = content.split_whitespace().collect();
        match current {
            Section::Alpha | Section::Beta => {
                if toks.len() != 1 || slot.value.is_some() {
                    return Err(ParseError::new(
                        line,
                        "penalty sections hold exactly one number",
                    ));
                }
                slot.value = Some(parse_coefficient(toks[0], line)?);
            }
            Section::Hamiltonian | Section::Dipole(_) => {
                if toks.len() != 2 {
                    return Err(ParseError::new(line, "expected 'coefficient pauli-string'"));
                }
                let c = parse_coefficient(toks[0], line)?;
                let p = parse_pauli(toks[1], line)?;
                match n {
                    None => n = Some(p.n()),
                    Some(m) if m != p.n() => {
                        return Err(ParseError::new(
                            line,
                            format!("inconsistent qubit count: expected {m}, got {}", p.n()),
                        ))
                    }
                    _ => {}
                }
                slot.terms.push((c, p));
            }
        }
    }
    let mut take =
        |sec: Section| std::mem::take(&mut sections.iter_mut().find(|(s, _)| *s == sec).unwrap().1);
    let h = take(Section::Hamiltonian);
    if h.terms.is_empty() {
        return Err(ParseError::new(
            last_line.max(1),
            "missing hamiltonian terms",
        ));
    }
    let n = n.expect("hamiltonian has terms");
    let build = |c: Collected| -> Result<Observable, ParseError> {
        Observable::from_terms(n, c.terms).map_err(|e| ParseError::new(last_line, e.to_string()))
    };
    let hamiltonian = build(h)?;
    let mut dipoles = [None, None, None];
    for (axis, d) in dipoles.iter_mut().enumerate() {
        let c = take(Section::Dipole(axis));
        if c.seen {
            *d = Some(build(c)?);
        }
    }
    let alpha = take(Section::Alpha);
    let beta = take(Section::Beta);
    for (c, name) in [(&alpha, "penalty_sz2_alpha"), (&beta, "penalty_s2_beta")] {
        if c.seen && c.value.is_none() {
            return Err(ParseError::new(
                last_line,
                format!("section '{name}' has no value"),
            ));
        }
    }
    Ok(ProblemFile {
        hamiltonian,
        dipoles,
        penalty_sz2_alpha: alpha.value,
        penalty_s2_beta: beta.value,
    })
}

fn write_operator(out: &mut String, name: &str, o: &Observable) {
    let _ = writeln!(out, "[{name}]");
    for (c, p) in o.terms() {
        let _ = writeln!(out, "{c} {p}");
    }
}

/// Canonical form: sections in fixed order, one blank line between them,
/// coefficients in shortest round-trip notation.
impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut blocks = Vec::new();
        let mut s = String::new();
        write_operator(&mut s, "hamiltonian", &self.hamiltonian);
        blocks.push(s);
        for (d, name) in self.dipoles.iter().zip(DIPOLE_NAMES) {
            if let Some(d) = d {
                let mut s = String::new();
                write_operator(&mut s, name, d);
                blocks.push(s);
            }
        }
        for (v, name) in [
            (self.penalty_sz2_alpha, "penalty_sz2_alpha"),
            (self.penalty_s2_beta, "penalty_s2_beta"),
        ] {
            if let Some(v) = v {
                blocks.push(format!("[{name}]\n{v}\n"));
            }
        }
        f.write_str(&blocks.join("\n"))
    }
}
