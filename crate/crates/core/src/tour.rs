//! Tour specifications: which expected product is being asked for.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Visits `n + 1` distinct points; expectation `mu(d, n)`.
    Open,
    /// Visits `n` points and returns to the first; expectation `nu(d, n)`.
    Closed,
}

/// Dimension, step count and topology of a tour over independent standard
/// Gaussian points.
///
/// A closed tour needs at least two steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TourSpec {
    pub d: usize,
    pub n: usize,
    pub topology: Topology,
}

impl TourSpec {
    pub fn new(d: usize, n: usize, topology: Topology) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidSpec(format!("dimension must be >= 1, got {d}")));
        }
        if n < 1 {
            return Err(Error::InvalidSpec(format!("step count must be >= 1, got {n}")));
        }
        if topology == Topology::Closed && n < 2 {
            return Err(Error::InvalidSpec(
                "a closed tour needs at least 2 steps".to_string(),
            ));
        }
        Ok(TourSpec { d, n, topology })
    }

    pub fn open(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, Topology::Open)
    }

    pub fn closed(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, Topology::Closed)
    }

    /// Number of distinct points visited.
    pub fn points(&self) -> usize {
        match self.topology {
            Topology::Open => self.n + 1,
            Topology::Closed => self.n,
        }
    }

    /// `mu(d,n)` or `nu(d,n)`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TourSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.topology {
            Topology::Open => "mu",
            Topology::Closed => "nu",
        };
        write!(f, "{sym}({},{})", self.d, self.n)
    }
}

/// Accepts `mu:D,N`, `nu:D,N`, `mu(D,N)`, `nu(D,N)` and `D,N,open|closed`.
impl FromStr for TourSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSpec(format!("cannot parse tour spec {s:?}"));
        let parse_usize = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());

        let lower = s.to_ascii_lowercase();
        for (prefix, topology) in [("mu", Topology::Open), ("nu", Topology::Closed)] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                let rest = rest
                    .trim_start_matches(':')
                    .trim_start_matches('(')
                    .trim_end_matches(')');
                let mut parts = rest.split(',');
                let d = parse_usize(parts.next().ok_or_else(bad)?)?;
                let n = parse_usize(parts.next().ok_or_else(bad)?)?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                return TourSpec::new(d, n, topology);
            }
        }

        let parts: Vec<&str> = lower.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let topology = match parts[2] {
            "open" | "o" => Topology::Open,
            "closed" | "c" => Topology::Closed,
            _ => return Err(bad()),
        };
        TourSpec::new(parse_usize(parts[0])?, parse_usize(parts[1])?, topology)
    }
}
