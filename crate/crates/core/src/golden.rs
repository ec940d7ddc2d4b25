//! Embedded reference tables of extremal character vectors.

use std::sync::OnceLock;

use rug::{Integer, Rational};
use serde::Deserialize;
use thiserror::Error;

use crate::catalog::lookup;
use crate::numeric::parse_rational;

pub const GOLDEN_TOML: &str = include_str!("../data/golden.toml");

/// Largest document accepted by [`parse_golden`].
pub const MAX_DOCUMENT_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoldenError {
    #[error("document exceeds {MAX_DOCUMENT_LEN} bytes")]
    TooLarge,
    #[error("malformed document: {0}")]
    Syntax(String),
    #[error("unsupported document version {0}")]
    Version(u32),
    #[error("{table}: {message}")]
    Invalid { table: String, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    version: u32,
    #[serde(default)]
    coverage: Vec<RawCoverage>,
    #[serde(default)]
    row: Vec<RawRow>,
    #[serde(default)]
    omitted: Vec<RawOmitted>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoverage {
    scope: String,
    cmax: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    table: String,
    family: String,
    c: String,
    h: Vec<String>,
    ell: Option<i64>,
    dim_v1: Option<i64>,
    realization: Option<String>,
    components: Vec<Vec<u64>>,
    printed_from: Option<RawPrintedFrom>,
    #[serde(default)]
    misprints: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrintedFrom {
    h: Vec<String>,
    components: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOmitted {
    table: String,
    family: String,
    c: String,
    h: Vec<String>,
    realization: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Rank2,
    Rank3,
    All,
}

impl Scope {
    pub fn parse(s: &str) -> Option<Scope> {
        match s {
            "rank2" => Some(Scope::Rank2),
            "rank3" => Some(Scope::Rank3),
            "all" => Some(Scope::All),
            _ => None,
        }
    }

    pub fn includes_rank(self, rank: usize) -> bool {
        match self {
            Scope::Rank2 => rank == 2,
            Scope::Rank3 => rank == 3,
            Scope::All => true,
        }
    }
}

/// Range of central charges over which the tables claim completeness.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub rank: usize,
    pub cmax: Rational,
}

/// Components of a row that were printed from a different candidate in the same genus.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedFrom {
    pub h: Vec<Rational>,
    pub components: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub table: String,
    pub family: String,
    pub c: Rational,
    /// Unfolded minimal energies.
    pub h: Vec<Rational>,
    pub ell: Option<i64>,
    pub dim_v1: Option<i64>,
    pub realization: Option<String>,
    pub components: Vec<Vec<Integer>>,
    pub printed_from: Option<PrintedFrom>,
    /// `(component, index)` of printed coefficients declared to be misprints.
    pub misprints: Vec<(usize, usize)>,
}

impl GoldenRow {
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn key(&self) -> String {
        format!("{} c={} h=({})", self.family, self.c, join(&self.h))
    }
}

/// A row the tables mention by name only.
#[derive(Debug, Clone, PartialEq)]
pub struct OmittedRow {
    pub table: String,
    pub family: String,
    pub c: Rational,
    pub h: Vec<Rational>,
    pub realization: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Golden {
    pub coverage: Vec<Coverage>,
    pub rows: Vec<GoldenRow>,
    pub omitted: Vec<OmittedRow>,
}

impl Golden {
    pub fn coverage_for(&self, rank: usize) -> Option<&Rational> {
        self.coverage.iter().find(|c| c.rank == rank).map(|c| &c.cmax)
    }

    /// Realization note for a computed row, if the tables name one.
    pub fn realization(&self, family: &str, c: &Rational, h: &[Rational]) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.family == family && &r.c == c && r.h == h && r.realization.is_some())
            .and_then(|r| r.realization.as_deref())
            .or_else(|| self.omitted.iter().find(|r| r.family == family && &r.c == c && r.h == h).and_then(|r| r.realization.as_deref()))
    }
}

pub(crate) fn join(xs: &[Rational]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn invalid(table: &str, message: impl Into<String>) -> GoldenError {
    GoldenError::Invalid { table: table.to_string(), message: message.into() }
}

fn rational(table: &str, s: &str) -> Result<Rational, GoldenError> {
    parse_rational(s).map_err(|e| invalid(table, e.to_string()))
}

fn rationals(table: &str, xs: &[String]) -> Result<Vec<Rational>, GoldenError> {
    xs.iter().map(|s| rational(table, s)).collect()
}

fn check_family(table: &str, family: &str, c: &Rational, h: &[Rational]) -> Result<usize, GoldenError> {
    let datum = lookup(family).map_err(|e| invalid(table, e.to_string()))?;
    if !datum.is_admissible(c) {
        return Err(invalid(table, format!("c = {c} is not admissible for {family}")));
    }
    if h.len() + 1 != datum.rank {
        return Err(invalid(table, format!("expected {} minimal energies, got {}", datum.rank - 1, h.len())));
    }
    for (x, t) in h.iter().zip(&datum.twists[1..]) {
        if x.cmp0().is_le() || !Rational::from(x - t).is_integer() {
            return Err(invalid(table, format!("h = {x} does not lift twist {t}")));
        }
    }
    Ok(datum.rank)
}

/// Parses and validates a golden document.
pub fn parse_golden(text: &str) -> Result<Golden, GoldenError> {
    if text.len() > MAX_DOCUMENT_LEN {
        return Err(GoldenError::TooLarge);
    }
    let raw: RawDoc = toml::from_str(text).map_err(|e| GoldenError::Syntax(e.message().to_string()))?;
    if raw.version != 1 {
        return Err(GoldenError::Version(raw.version));
    }
    let mut coverage = Vec::new();
    for cov in &raw.coverage {
        let rank = match cov.scope.as_str() {
            "rank2" => 2,
            "rank3" => 3,
            other => return Err(invalid("coverage", format!("unknown scope {other}"))),
        };
        let cmax = rational("coverage", &cov.cmax)?;
        if cmax.cmp0().is_le() {
            return Err(invalid("coverage", "cmax must be positive"));
        }
        coverage.push(Coverage { rank, cmax });
    }
    let mut rows = Vec::with_capacity(raw.row.len());
    for r in raw.row {
        let t = &r.table;
        let c = rational(t, &r.c)?;
        let h = rationals(t, &r.h)?;
        let rank = check_family(t, &r.family, &c, &h)?;
        if r.components.len() != rank {
            return Err(invalid(t, format!("expected {rank} components, got {}", r.components.len())));
        }
        if r.components.iter().any(|c| c.is_empty()) {
            return Err(invalid(t, "empty component"));
        }
        let printed_from = match r.printed_from {
            None => None,
            Some(p) => {
                let ph = rationals(t, &p.h)?;
                check_family(t, &r.family, &c, &ph)?;
                if p.components.is_empty() || p.components.iter().any(|&i| i == 0 || i >= rank) {
                    return Err(invalid(t, "printed_from names an invalid component"));
                }
                Some(PrintedFrom { h: ph, components: p.components })
            }
        };
        for &[i, k] in &r.misprints {
            if i >= rank || k >= r.components[i].len() {
                return Err(invalid(t, format!("misprint ({i}, {k}) is outside the printed data")));
            }
        }
        rows.push(GoldenRow {
            table: r.table,
            family: r.family,
            c,
            h,
            ell: r.ell,
            dim_v1: r.dim_v1,
            realization: r.realization,
            components: r.components.iter().map(|c| c.iter().map(|&x| Integer::from(x)).collect()).collect(),
            printed_from,
            misprints: r.misprints.iter().map(|&[i, k]| (i, k)).collect(),
        });
    }
    let mut omitted = Vec::with_capacity(raw.omitted.len());
    for r in raw.omitted {
        let c = rational(&r.table, &r.c)?;
        let h = rationals(&r.table, &r.h)?;
        check_family(&r.table, &r.family, &c, &h)?;
        omitted.push(OmittedRow { table: r.table, family: r.family, c, h, realization: r.realization });
    }
    Ok(Golden { coverage, rows, omitted })
}

/// The embedded tables.
pub fn golden() -> &'static Golden {
    static GOLDEN: OnceLock<Golden> = OnceLock::new();
    GOLDEN.get_or_init(|| parse_golden(GOLDEN_TOML).expect("embedded golden document is valid"))
}
