//! Serialization of scan rows: JSON (round-trippable), CSV and markdown.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::lookup;
use crate::numeric::parse_rational;
use crate::scan::{ScanRow, SCHEMA_VERSION};

/// Largest JSON document accepted by [`decode_json`].
pub const MAX_JSON_LEN: usize = 64 << 20;

const STATUSES: [&str; 4] = ["integral_nonneg", "non_integral", "negative_coefficient", "solver_failure"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanReport {
    pub schema: u32,
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("document exceeds {MAX_JSON_LEN} bytes")]
    TooLarge,
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("unsupported schema {0}")]
    Schema(u32),
    #[error("row {row}: {message}")]
    Invalid { row: usize, message: String },
}

pub fn encode_json(rows: &[ScanRow]) -> String {
    let report = ScanReport { schema: SCHEMA_VERSION, rows: rows.to_vec() };
    let mut out = serde_json::to_string_pretty(&report).expect("rows serialize");
    out.push('\n');
    out
}

fn check_rational(row: usize, field: &str, s: &str) -> Result<(), DecodeError> {
    parse_rational(s).map(|_| ()).map_err(|e| DecodeError::Invalid { row, message: format!("{field}: {e}") })
}

fn check_row(i: usize, r: &ScanRow) -> Result<(), DecodeError> {
    let bad = |message: String| DecodeError::Invalid { row: i, message };
    let datum = lookup(&r.family).map_err(|e| bad(e.to_string()))?;
    check_rational(i, "c", &r.c)?;
    check_rational(i, "ell", &r.ell)?;
    for x in &r.h {
        check_rational(i, "h", x)?;
    }
    if r.h.len() + 1 != datum.rank {
        return Err(bad(format!("expected {} minimal energies", datum.rank - 1)));
    }
    if !STATUSES.contains(&r.status.as_str()) {
        return Err(bad(format!("unknown status {}", r.status)));
    }
    if (r.status == "solver_failure") != r.failure.is_some() {
        return Err(bad("failure reason must accompany solver_failure only".into()));
    }
    if let Some(d) = &r.dim_v1 {
        check_rational(i, "dim_v1", d)?;
    }
    if !r.components.is_empty() && r.components.len() != datum.rank {
        return Err(bad(format!("expected {} components", datum.rank)));
    }
    for c in &r.components {
        check_rational(i, "leading_exponent", &c.leading_exponent)?;
        for x in &c.coefficients {
            check_rational(i, "coefficient", x)?;
        }
    }
    let square = |m: &Vec<Vec<String>>| m.iter().all(|row| row.len() == m.len());
    if let Some(m) = &r.chi_hat {
        if !square(m) {
            return Err(bad("chi_hat is not square".into()));
        }
        for x in m.iter().flatten() {
            check_rational(i, "chi_hat", x)?;
        }
    }
    if let Some(conn) = &r.connection {
        for m in [&conn.a, &conn.b, &conn.chi] {
            if !square(m) {
                return Err(bad("connection matrix is not square".into()));
            }
            for x in m.iter().flatten() {
                check_rational(i, "connection", x)?;
            }
        }
        for x in &conn.gauge_ratios {
            check_rational(i, "gauge_ratios", x)?;
        }
    }
    Ok(())
}

/// Parses a document written by [`encode_json`], validating every field.
pub fn decode_json(text: &str) -> Result<ScanReport, DecodeError> {
    if text.len() > MAX_JSON_LEN {
        return Err(DecodeError::TooLarge);
    }
    let report: ScanReport = serde_json::from_str(text).map_err(|e| DecodeError::Syntax(e.to_string()))?;
    if report.schema != SCHEMA_VERSION {
        return Err(DecodeError::Schema(report.schema));
    }
    for (i, r) in report.rows.iter().enumerate() {
        check_row(i, r)?;
    }
    Ok(report)
}

const CSV_COMPONENTS: usize = 3;

/// One line per row, with up to three coefficients of up to three components.
pub fn encode_csv(rows: &[ScanRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["family", "c", "h", "ell", "p", "status", "dim_v1", "realization", "covariance_residual"].iter().map(|s| s.to_string()).collect();
    for i in 0..CSV_COMPONENTS {
        header.push(format!("x{i}_exponent"));
        for k in 0..CSV_COMPONENTS {
            header.push(format!("x{i}_a{k}"));
        }
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.family.clone(),
            r.c.clone(),
            r.h.join(" "),
            r.ell.clone(),
            r.p.to_string(),
            r.status.clone(),
            r.dim_v1.clone().unwrap_or_default(),
            r.realization.clone().unwrap_or_default(),
            r.residuals.covariance.clone().unwrap_or_default(),
        ];
        for i in 0..CSV_COMPONENTS {
            let comp = r.components.get(i);
            rec.push(comp.map(|c| c.leading_exponent.clone()).unwrap_or_default());
            for k in 0..CSV_COMPONENTS {
                rec.push(comp.and_then(|c| c.coefficients.get(k)).cloned().unwrap_or_default());
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn series(coefficients: &[String]) -> String {
    let mut parts: Vec<String> = coefficients
        .iter()
        .enumerate()
        .map(|(n, a)| match n {
            0 => a.clone(),
            1 => format!("{a}q"),
            _ => format!("{a}q^{n}"),
        })
        .collect();
    parts.push("…".into());
    parts.join(" + ")
}

/// Table in the usual layout: `c | h | ell | dim V1 | realization | character vector`.
pub fn encode_markdown(rows: &[ScanRow]) -> String {
    let mut out = String::from("| family | c | h | ℓ | dim V₁ | status | realization | character vector |\n|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let vector = r
            .components
            .iter()
            .map(|c| format!("q^({}) ({})", c.leading_exponent, series(&c.coefficients)))
            .collect::<Vec<_>>()
            .join("<br>");
        let status = match &r.failure {
            Some(f) => format!("{} ({})", r.status, f.replace('|', "/")),
            None => r.status.clone(),
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.family,
            r.c,
            r.h.join(", "),
            r.ell,
            r.dim_v1.as_deref().unwrap_or("-"),
            status,
            r.realization.as_deref().unwrap_or("?"),
            vector
        ));
    }
    out
}
