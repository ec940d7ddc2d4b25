//! Genus scans, single-candidate drill-down and verification against the reference tables.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{catalog, lookup, CatalogError, GenusSpec, Generator};
use crate::engine::{
    coefficient_position, confirmation_points, covariance_residual, gauge_fixed, run_candidate, screen_first_column, CharacterCandidate, KernelSeries, PipelineConfig, Status,
    DEFAULT_MAX_DENOMINATOR, J_SHIFT,
};
use crate::extremal::{enumerate_extremal, ExponentCandidate, ExtremalError};
use crate::golden::{golden, join, Golden, GoldenRow, Scope};
use crate::numeric::{parse_rational, pow10, Precision, RatMatrix};

/// Coefficients per component kept in scan rows.
pub const SCAN_KEEP: usize = 3;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub terms: usize,
    pub precision: Precision,
    pub max_denominator: Integer,
    /// Worker threads; 0 means the available parallelism.
    pub jobs: usize,
    /// Coefficients kept per component in the emitted rows.
    pub keep: usize,
    pub dump_connection: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { terms: 100, precision: Precision::DEFAULT, max_denominator: Integer::from(DEFAULT_MAX_DENOMINATOR), jobs: 0, keep: SCAN_KEEP, dump_connection: false }
    }
}

impl ScanConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { terms: self.terms, precision: self.precision, max_denominator: self.max_denominator.clone() }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint { precision_bits: self.precision.bits(), terms: self.terms, max_denominator: self.max_denominator.to_string(), j_shift: J_SHIFT, kept: self.keep.min(self.terms) }
    }
}

/// Everything that influences row contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    pub precision_bits: u32,
    pub terms: usize,
    pub max_denominator: String,
    pub j_shift: i64,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentRow {
    pub leading_exponent: String,
    pub coefficients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residuals {
    pub covariance: Option<String>,
    pub gauge: Option<String>,
    pub trace: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionDump {
    pub rank_a: usize,
    pub gauge: String,
    pub degenerate: bool,
    pub b_multiplicities: [usize; 3],
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
    pub chi: Vec<Vec<String>>,
    pub gauge_ratios: Vec<String>,
}

/// One candidate's outcome, with rationals as `p/q` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRow {
    pub family: String,
    pub c: String,
    pub h: Vec<String>,
    pub ell: String,
    pub p: usize,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub dim_v1: Option<String>,
    pub components: Vec<ComponentRow>,
    pub chi_hat: Option<Vec<Vec<String>>>,
    pub residuals: Residuals,
    pub realization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionDump>,
    pub config: Fingerprint,
    /// Wall-clock time; never serialized so that outputs stay reproducible.
    #[serde(skip)]
    pub elapsed_ms: Option<u128>,
}

impl PartialEq for ScanRow {
    fn eq(&self, other: &Self) -> bool {
        let strip = |r: &ScanRow| ScanRow { elapsed_ms: None, ..r.clone() };
        serde_json::to_value(strip(self)).ok() == serde_json::to_value(strip(other)).ok()
    }
}

impl Eq for ScanRow {}

impl ScanRow {
    pub fn is_accepted(&self) -> bool {
        self.status == Status::IntegralNonneg.label()
    }

    pub fn is_failure(&self) -> bool {
        self.status == "solver_failure"
    }

    fn sort_key(&self) -> (String, Rational, Vec<Rational>) {
        let r = |s: &str| parse_rational(s).unwrap_or_default();
        (self.family.clone(), r(&self.c), self.h.iter().map(|x| r(x)).collect())
    }

    pub fn matches(&self, family: &str, c: &Rational, h: &[Rational]) -> bool {
        let (f, rc, rh) = self.sort_key();
        f == family && &rc == c && rh == h
    }
}

fn matrix_strings(m: &RatMatrix) -> Vec<Vec<String>> {
    m.rows().iter().map(|row| row.iter().map(|x| x.to_string()).collect()).collect()
}

fn float_string(x: &Float) -> String {
    x.to_string_radix(10, Some(6))
}

pub fn row_from_candidate(cand: &CharacterCandidate, cfg: &ScanConfig, golden: &Golden) -> ScanRow {
    let keep = cfg.keep.min(cfg.terms);
    let connection = match (&cand.connection, cfg.dump_connection) {
        (Some(sol), true) => Some(ConnectionDump {
            rank_a: sol.rank_a,
            gauge: serde_json::to_value(sol.gauge).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            degenerate: sol.degenerate,
            b_multiplicities: sol.b_multiplicities,
            a: matrix_strings(&sol.a),
            b: matrix_strings(&sol.b),
            chi: matrix_strings(&sol.chi),
            gauge_ratios: cand.gauge_ratios.iter().map(|x| x.to_string()).collect(),
        }),
        _ => None,
    };
    ScanRow {
        family: cand.family.clone(),
        c: cand.c.to_string(),
        h: cand.h.iter().map(|x| x.to_string()).collect(),
        ell: cand.ell.to_string(),
        p: cand.p,
        status: cand.status.label().to_string(),
        failure: cand.status.reason().map(String::from),
        dim_v1: cand.dim_v1.as_ref().map(|x| x.to_string()),
        components: cand
            .components
            .iter()
            .map(|c| ComponentRow { leading_exponent: c.leading_exponent.to_string(), coefficients: c.coefficients.iter().take(keep).map(|x| x.to_string()).collect() })
            .collect(),
        chi_hat: cand.chi_hat.as_ref().map(matrix_strings),
        residuals: Residuals {
            covariance: cand.covariance_residual.as_ref().map(float_string),
            gauge: cand.gauge_residual.as_ref().map(float_string),
            trace: cand.trace_deviation.as_ref().map(float_string),
        },
        realization: golden.realization(&cand.family, &cand.c, &cand.h).map(String::from),
        connection,
        config: cfg.fingerprint(),
        elapsed_ms: None,
    }
}

fn families(family: &str) -> Result<Vec<&'static str>, ScanError> {
    if family == "all" {
        Ok(catalog().iter().map(|d| d.label.as_str()).collect())
    } else {
        Ok(vec![lookup(family)?.label.as_str()])
    }
}

/// Extremal candidates of one family with admissible `c <= cmax`.
pub fn candidates(family: &str, cmax: &Rational) -> Result<Vec<ExponentCandidate>, ScanError> {
    let eff = lookup(family)?.effective();
    let mut out = Vec::new();
    for c in eff.admissible_charges(cmax) {
        let spec = GenusSpec::new(eff.clone(), c)?;
        out.extend(enumerate_extremal(&spec)?);
    }
    Ok(out)
}

fn run_all(cands: Vec<ExponentCandidate>, cfg: &ScanConfig) -> Vec<ScanRow> {
    let pipeline = cfg.pipeline();
    let kernel = pipeline.kernel();
    let g = golden();
    let work = || {
        cands
            .par_iter()
            .flat_map_iter(|cand| {
                let start = std::time::Instant::now();
                let found = run_candidate(cand, &kernel, &pipeline);
                let ms = start.elapsed().as_millis();
                found.into_iter().map(move |c| ScanRow { elapsed_ms: Some(ms), ..row_from_candidate(&c, cfg, g) })
            })
            .collect::<Vec<_>>()
    };
    let mut rows = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    rows.sort_by_cached_key(|r| r.sort_key());
    rows
}

/// Runs every extremal candidate of `family` (or `"all"`) with `c <= cmax`.
///
/// Per-candidate failures become rows; only invalid arguments are errors.
pub fn scan(family: &str, cmax: &Rational, cfg: &ScanConfig) -> Result<Vec<ScanRow>, ScanError> {
    if cmax.cmp0().is_le() {
        return Err(ScanError::InvalidInput("cmax must be positive".into()));
    }
    let mut cands = Vec::new();
    for f in families(family)? {
        cands.extend(candidates(f, cmax)?);
    }
    Ok(run_all(cands, cfg))
}

/// Runs one candidate. `h` may be given folded or unfolded for folded families.
pub fn compute(family: &str, c: &Rational, h: &[Rational], cfg: &ScanConfig) -> Result<Vec<ScanRow>, ScanError> {
    let datum = lookup(family)?;
    let eff = datum.effective();
    let want = eff.rank - 1;
    let h: Vec<Rational> = if h.len() == want {
        h.to_vec()
    } else if h.len() + 1 == datum.rank && h[want - 1..].iter().all(|x| x == &h[want - 1]) {
        h[..want].to_vec()
    } else {
        return Err(ScanError::InvalidInput(format!("{family} needs {want} minimal energies")));
    };
    let spec = GenusSpec::new(eff, c.clone())?;
    let cand = ExponentCandidate::new(spec, h);
    if !cand.is_well_formed() {
        return Err(ScanError::InvalidInput(format!("h = ({}) does not lift the twists of {family}", join(&cand.h))));
    }
    Ok(run_all(vec![cand], cfg))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass(Option<String>),
    Mismatch(String),
    Missing,
    Unexpected,
    Informational(String),
    /// A declared misprint, confirmed because the printed value breaks S-covariance.
    Erratum(String),
}

impl Outcome {
    pub fn is_failure(&self) -> bool {
        matches!(self, Outcome::Mismatch(_) | Outcome::Missing | Outcome::Unexpected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyLine {
    pub source: String,
    pub subject: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub lines: Vec<VerifyLine>,
    pub rows: Vec<ScanRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.lines.iter().any(|l| l.outcome.is_failure())
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyLine> {
        self.lines.iter().filter(|l| l.outcome.is_failure())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let (tag, detail) = match &l.outcome {
                Outcome::Pass(None) => ("PASS", String::new()),
                Outcome::Pass(Some(n)) => ("PASS", format!(" ({n})")),
                Outcome::Mismatch(m) => ("MISMATCH", format!(": {m}")),
                Outcome::Missing => ("MISSING", ": no accepted candidate".to_string()),
                Outcome::Unexpected => ("UNEXPECTED", ": accepted candidate absent from the tables".to_string()),
                Outcome::Informational(m) => ("INFO", format!(": {m}")),
                Outcome::Erratum(m) => ("ERRATUM", format!(": {m}")),
            };
            out.push_str(&format!("[{tag}] {} {}{detail}\n", l.source, l.subject));
        }
        let bad = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.lines.len(), bad));
        out
    }
}

struct Comparison {
    problems: Vec<String>,
    /// Printed coefficients that differ, as `(component, index)`.
    differing: Vec<(usize, usize)>,
    note: Option<String>,
}

fn compare_row(g: &GoldenRow, rows: &[ScanRow]) -> Result<Comparison, Outcome> {
    let here: Vec<&ScanRow> = rows.iter().filter(|r| r.matches(&g.family, &g.c, &g.h)).collect();
    let Some(row) = here.iter().find(|r| r.is_accepted()) else {
        return Err(match here.first() {
            Some(r) => Outcome::Mismatch(format!("status {}", r.status)),
            None => Outcome::Missing,
        });
    };
    let mut problems = Vec::new();
    let mut differing = Vec::new();
    if let Some(ell) = g.ell {
        if row.ell != ell.to_string() {
            problems.push(format!("ell {} != {ell}", row.ell));
        }
    }
    if let Some(d) = g.dim_v1 {
        if row.dim_v1.as_deref() != Some(d.to_string().as_str()) {
            problems.push(format!("dim V1 {:?} != {d}", row.dim_v1));
        }
    }
    let mut note = None;
    let foreign: Vec<usize> = g.printed_from.as_ref().map(|p| p.components.clone()).unwrap_or_default();
    let other = g.printed_from.as_ref().and_then(|p| rows.iter().find(|r| r.matches(&g.family, &g.c, &p.h)));
    if let Some(p) = &g.printed_from {
        let idx = p.components.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
        note = Some(format!("components {idx} as printed belong to h = ({})", join(&p.h)));
        if other.is_none() {
            problems.push(format!("no candidate at h = ({})", join(&p.h)));
        }
    }
    for (i, printed) in g.components.iter().enumerate() {
        let source = if foreign.contains(&i) { other } else { Some(*row) };
        let Some(source) = source else { continue };
        let Some(comp) = source.components.get(i) else {
            problems.push(format!("component {i} missing"));
            continue;
        };
        for (k, want) in printed.iter().enumerate() {
            match comp.coefficients.get(k) {
                Some(got) if got == &want.to_string() => {}
                got => {
                    differing.push((i, k));
                    problems.push(format!("component {i} coefficient {k}: computed {} printed {want}", got.map(String::as_str).unwrap_or("none")));
                }
            }
        }
    }
    Ok(Comparison { problems, differing, note })
}

/// Substitutes each declared misprint into the gauge-fixed expansion and measures S-covariance.
fn confirm_misprints(g: &GoldenRow, cfg: &ScanConfig, kernel: &KernelSeries) -> Result<String, String> {
    let eff = lookup(&g.family).map_err(|e| e.to_string())?.effective();
    let folded = g.h[..eff.rank - 1].to_vec();
    let spec = GenusSpec::new(eff, g.c.clone()).map_err(|e| e.to_string())?;
    let cand = ExponentCandidate::new(spec, folded);
    let pipeline = cfg.pipeline();
    let prec = pipeline.precision;
    let rho_s = cand.spec.rho(Generator::S, prec);
    let points = confirmation_points();
    let (fixed, _) = gauge_fixed(&cand, kernel, &pipeline).map_err(|e| e.to_string())?;
    let fs = fixed
        .iter()
        .find(|fs| screen_first_column(&fs.gauge.expansion, &cand, pipeline.terms).status == Status::IntegralNonneg)
        .ok_or("no accepted solution")?;
    let exp = &fs.gauge.expansion;
    let base = covariance_residual(exp, &rho_s, &points, prec).map_err(|e| e.to_string())?;
    if base >= pow10(prec, -20) {
        return Err(format!("computed expansion has residual {}", float_string(&base)));
    }
    let mut notes = Vec::new();
    for &(i, k) in &g.misprints {
        let (n, row, orbit) = coefficient_position(&cand, i, k);
        let printed = Rational::from(&g.components[i][k]) / orbit;
        let current = exp.coefficient(n)[(row, 0)].clone();
        let bumped = exp.perturbed(n, row, 0, &Rational::from(&printed - &current));
        let res = covariance_residual(&bumped, &rho_s, &points, prec).map_err(|e| e.to_string())?;
        if res <= 1e-6 {
            return Err(format!("printed value at ({i}, {k}) is not excluded (residual {})", float_string(&res)));
        }
        notes.push(format!("printed {} at component {i} index {k} gives S-covariance residual {}; computed {} gives {}", g.components[i][k], float_string(&res), Rational::from(&current * orbit), float_string(&base)));
    }
    Ok(notes.join("; "))
}

fn judge_row(g: &GoldenRow, rows: &[ScanRow], cfg: &ScanConfig, kernel: &KernelSeries) -> Outcome {
    let cmp = match compare_row(g, rows) {
        Ok(cmp) => cmp,
        Err(outcome) => return outcome,
    };
    if cmp.problems.is_empty() {
        return Outcome::Pass(cmp.note);
    }
    let declared = cmp.problems.len() == cmp.differing.len() && cmp.differing.iter().all(|p| g.misprints.contains(p)) && cmp.differing.len() == g.misprints.len();
    if !declared {
        return Outcome::Mismatch(cmp.problems.join("; "));
    }
    match confirm_misprints(g, cfg, kernel) {
        Ok(detail) => Outcome::Erratum(detail),
        Err(why) => Outcome::Mismatch(format!("{}; misprint not confirmed: {why}", cmp.problems.join("; "))),
    }
}

/// Recomputes every table row in scope and checks that nothing else passes the screen.
pub fn verify(scope: Scope, cfg: &ScanConfig) -> Result<VerifyReport, ScanError> {
    let g = golden();
    let mut cands = Vec::new();
    let mut covered = Vec::new();
    for datum in catalog() {
        if !scope.includes_rank(datum.rank) {
            continue;
        }
        let cmax = g.coverage_for(datum.rank).ok_or_else(|| ScanError::InvalidInput(format!("no coverage for rank {}", datum.rank)))?;
        cands.extend(candidates(&datum.label, cmax)?);
        covered.push((datum.label.as_str(), datum.rank, cmax.clone()));
    }
    let rows = run_all(cands, cfg);
    let kernel = cfg.pipeline().kernel();
    let mut lines = Vec::new();
    for gr in g.rows.iter().filter(|r| scope.includes_rank(r.rank())) {
        lines.push(VerifyLine { source: gr.table.clone(), subject: gr.key(), outcome: judge_row(gr, &rows, cfg, &kernel) });
    }
    for om in g.omitted.iter().filter(|r| scope.includes_rank(lookup(&r.family).map(|d| d.rank).unwrap_or(0))) {
        let ok = rows.iter().any(|r| r.is_accepted() && r.matches(&om.family, &om.c, &om.h));
        let subject = format!("{} c={} h=({}) omitted {}", om.family, om.c, join(&om.h), om.realization.as_deref().unwrap_or(""));
        lines.push(VerifyLine { source: om.table.clone(), subject, outcome: if ok { Outcome::Pass(None) } else { Outcome::Missing } });
    }
    for (family, rank, cmax) in covered {
        let table = format!("rank{rank}.{family}");
        let omitted_c: BTreeSet<String> = g.omitted.iter().filter(|o| o.family == family).map(|o| o.c.to_string()).collect();
        let mut clean = true;
        for r in rows.iter().filter(|r| r.family == family) {
            let (_, c, h) = r.sort_key();
            let listed = g.rows.iter().any(|gr| gr.table != "sample" && gr.family == family && gr.c == c && gr.h == h) || g.omitted.iter().any(|o| o.family == family && o.c == c && o.h == h);
            let subject = format!("{family} c={c} h=({})", join(&h));
            if r.is_failure() {
                lines.push(VerifyLine { source: table.clone(), subject, outcome: Outcome::Informational(format!("solver failure: {}", r.failure.as_deref().unwrap_or(""))) });
            } else if r.is_accepted() && !listed {
                clean = false;
                let outcome = if omitted_c.contains(&r.c) { Outcome::Informational("accepted at an omitted central charge".into()) } else { Outcome::Unexpected };
                lines.push(VerifyLine { source: table.clone(), subject, outcome });
            }
        }
        if clean {
            lines.push(VerifyLine { source: table, subject: format!("{family} absence up to c = {cmax}"), outcome: Outcome::Pass(None) });
        }
    }
    Ok(VerifyReport { lines, rows })
}
