//! Problem files: TOML documents with dense data and 1-based atom coordinates.
//!
//! ```toml
//! n = 1
//! m = 1
//! A = [[1.0]]
//! c = [1.0]
//!
//! [[atoms]]
//! type = "box"
//! coords = [1]
//! bounds = [0.0, 1.0]
//! ```

use std::fmt;
use std::ops::Range;
use std::path::Path;

use ddsolve_core::{AtomKind, BarrierAtom, Problem, SolverConstants, StartData};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

/// A malformed problem file, located by line and field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    n: Spanned<usize>,
    m: Spanned<usize>,
    #[serde(rename = "A")]
    a: Spanned<Vec<Vec<f64>>>,
    c: Spanned<Vec<f64>>,
    atoms: Vec<Spanned<RawAtom>>,
    z0: Option<Spanned<Vec<f64>>>,
    constants: Option<Spanned<RawConstants>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    #[serde(rename = "type")]
    kind: String,
    coords: Vec<i64>,
    offset: Option<Vec<f64>>,
    bounds: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    xi: Option<f64>,
    kappa: Option<f64>,
}

/// A validated problem with its starting data.
#[derive(Clone, Debug)]
pub struct ParsedProblem {
    pub problem: Problem,
    pub start: StartData,
}

struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn error(&self, span: Range<usize>, field: impl Into<String>, message: impl Into<String>) -> CliError {
        CliError::Parse(ParseError {
            line: Some(self.line(span)),
            field: field.into(),
            message: message.into(),
        })
    }
}

fn parse_kind(kind: &str, bounds: Option<&[f64]>) -> Result<AtomKind, String> {
    let need = |len: usize| match bounds {
        Some(b) if b.len() == len => Ok(b),
        Some(b) => Err(format!("`{kind}` needs {len} bound(s), got {}", b.len())),
        None => Err(format!("`{kind}` needs `bounds`")),
    };
    match kind {
        "halfline_lower" => Ok(AtomKind::HalflineLower { lower: need(1)?[0] }),
        "halfline_upper" => Ok(AtomKind::HalflineUpper { upper: need(1)?[0] }),
        "box" => {
            let b = need(2)?;
            Ok(AtomKind::Box {
                lower: b[0],
                upper: b[1],
            })
        }
        "soc" => match bounds {
            None => Ok(AtomKind::Soc),
            Some(_) => Err("`soc` takes no bounds".into()),
        },
        other => Err(format!(
            "unknown atom type `{other}` (expected halfline_lower, halfline_upper, box or soc)"
        )),
    }
}

/// Parses and validates problem text.
pub fn parse_problem_str(text: &str) -> Result<ParsedProblem, CliError> {
    let loc = Locator { text };
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| loc.line(s));
        CliError::Parse(ParseError {
            line,
            field: "document".into(),
            message: e.message().to_string(),
        })
    })?;

    let (n, m) = (*raw.n.get_ref(), *raw.m.get_ref());
    if n == 0 {
        return Err(loc.error(raw.n.span(), "n", "must be positive"));
    }
    if m == 0 {
        return Err(loc.error(raw.m.span(), "m", "must be positive"));
    }
    let rows = raw.a.get_ref();
    if rows.len() != m {
        return Err(loc.error(
            raw.a.span(),
            "A",
            format!("expected {m} rows, got {}", rows.len()),
        ));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(loc.error(
            raw.a.span(),
            "A",
            format!("row {} has {} entries, expected {n}", i + 1, row.len()),
        ));
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    if raw.c.get_ref().len() != n {
        return Err(loc.error(
            raw.c.span(),
            "c",
            format!("expected {n} entries, got {}", raw.c.get_ref().len()),
        ));
    }
    let c = DVector::from_column_slice(raw.c.get_ref());

    let mut atoms = Vec::with_capacity(raw.atoms.len());
    for (k, spanned) in raw.atoms.iter().enumerate() {
        let field = format!("atoms[{}]", k + 1);
        let atom = spanned.get_ref();
        let kind = parse_kind(&atom.kind, atom.bounds.as_deref())
            .map_err(|msg| loc.error(spanned.span(), field.as_str(), msg))?;
        let coords = atom
            .coords
            .iter()
            .map(|&i| {
                if i >= 1 && (i as usize) <= m {
                    Ok(i as usize - 1)
                } else {
                    Err(loc.error(
                        spanned.span(),
                        format!("{field}.coords"),
                        format!("coordinate {i} outside 1..={m}"),
                    ))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let built = BarrierAtom::new(kind, coords, atom.offset.clone())
            .map_err(|e| loc.error(spanned.span(), field.as_str(), e.to_string()))?;
        atoms.push(built);
    }

    let mut constants = SolverConstants::default();
    if let Some(raw_constants) = &raw.constants {
        let rc = raw_constants.get_ref();
        constants.xi = rc.xi.unwrap_or(constants.xi);
        constants.kappa = rc.kappa.unwrap_or(constants.kappa);
    }

    let problem = Problem::new(a, c, atoms, constants).map_err(CliError::Model)?;
    let start = match &raw.z0 {
        Some(z0) => {
            let v = DVector::from_column_slice(z0.get_ref());
            StartData::from_z0(&problem, v).map_err(|e| loc.error(z0.span(), "z0", e.to_string()))?
        }
        None => StartData::default_for(&problem),
    };
    Ok(ParsedProblem { problem, start })
}

pub fn parse_problem_file(path: &Path) -> Result<ParsedProblem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_problem_str(&text)
}
