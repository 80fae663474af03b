//! Index-set syntax for `--k`, `--l` and `--nu`.
//!
//! A set is `all` or a comma-separated list of parts, where each part is a
//! single index `a`, an inclusive range `a..b`, or a strided range
//! `a..b:s`. The resolved set is sorted and free of duplicates.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexSetError {
    #[error("empty index set")]
    Empty,
    #[error("bad index set part {0:?}")]
    BadPart(String),
    #[error("range {start}..{end} runs backwards")]
    Backwards { start: usize, end: usize },
    #[error("stride must be positive")]
    ZeroStride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Single(usize),
    Range { start: usize, end: usize, step: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexSet {
    All,
    Parts(Vec<Part>),
}

impl IndexSet {
    /// Concrete indices; `all` expands to `full`.
    pub fn resolve(&self, full: Range<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = match self {
            IndexSet::All => full.collect(),
            IndexSet::Parts(parts) => parts
                .iter()
                .flat_map(|p| match *p {
                    Part::Single(i) => (i..=i).step_by(1),
                    Part::Range { start, end, step } => (start..=end).step_by(step),
                })
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn parse_index(s: &str) -> Result<usize, IndexSetError> {
    s.trim().parse().map_err(|_| IndexSetError::BadPart(s.to_string()))
}

impl FromStr for Part {
    type Err = IndexSetError;

    fn from_str(s: &str) -> Result<Self, IndexSetError> {
        let (body, step) = match s.split_once(':') {
            Some((body, step)) => (body, Some(parse_index(step)?)),
            None => (s, None),
        };
        match body.split_once("..") {
            Some((a, b)) => {
                let (start, end) = (parse_index(a)?, parse_index(b)?);
                if end < start {
                    return Err(IndexSetError::Backwards { start, end });
                }
                let step = step.unwrap_or(1);
                if step == 0 {
                    return Err(IndexSetError::ZeroStride);
                }
                Ok(Part::Range { start, end, step })
            }
            None if step.is_none() => Ok(Part::Single(parse_index(body)?)),
            None => Err(IndexSetError::BadPart(s.to_string())),
        }
    }
}

impl FromStr for IndexSet {
    type Err = IndexSetError;

    fn from_str(s: &str) -> Result<Self, IndexSetError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(IndexSetError::Empty);
        }
        if s.eq_ignore_ascii_case("all") {
            return Ok(IndexSet::All);
        }
        s.split(',').map(str::parse).collect::<Result<_, _>>().map(IndexSet::Parts)
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Part::Single(i) => write!(f, "{i}"),
            Part::Range { start, end, step: 1 } => write!(f, "{start}..{end}"),
            Part::Range { start, end, step } => write!(f, "{start}..{end}:{step}"),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::All => f.write_str("all"),
            IndexSet::Parts(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// The `--l` set: `diag` pairs every `k` with `l = k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceSet {
    Diag,
    Set(IndexSet),
}

impl ReferenceSet {
    pub fn for_delay(&self, k: usize, full: Range<usize>) -> Vec<usize> {
        match self {
            ReferenceSet::Diag => vec![k],
            ReferenceSet::Set(s) => s.resolve(full),
        }
    }
}

impl FromStr for ReferenceSet {
    type Err = IndexSetError;

    fn from_str(s: &str) -> Result<Self, IndexSetError> {
        if s.trim().eq_ignore_ascii_case("diag") {
            Ok(ReferenceSet::Diag)
        } else {
            s.parse().map(ReferenceSet::Set)
        }
    }
}

impl fmt::Display for ReferenceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceSet::Diag => f.write_str("diag"),
            ReferenceSet::Set(s) => write!(f, "{s}"),
        }
    }
}
