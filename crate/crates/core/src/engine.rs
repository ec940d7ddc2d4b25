//! q-expansion of the fundamental matrix, gauge fixing and character screening.
//!
//! The fundamental matrix `Xi = q^(Lambda - 1) (I + Xi[0] q + Xi[1] q^2 + ...)`
//! solves `q dXi/dq = Xi D` with
//!
//! ```text
//! D = (Delta/E10) ((J - 240)(Lambda - I) + chi + [Lambda, chi])
//! ```
//!
//! Matching powers of `q` gives
//! `Xi[n]_ij (n + 1 + Lambda_ii - Lambda_jj) = sum_{m=1}^{n+1} (Xi[n-m] D[m])_ij`.

use rug::{Complex, Float, Integer, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{frac, GenusSpec, Generator};
use crate::connection::{solve_connection, twisted_chi, ConnectionError, ConnectionSolution};
use crate::extremal::{check_trace, ExponentCandidate, ExtremalError, TraceCheck};
use crate::numeric::{abs, nullspace, pow10, rational_reconstruct, CMatrix, NumericError, Precision, RatMatrix};
use crate::qseries::{delta, eisenstein, jay, QSeries, QSeriesError, Tau};

/// Constant subtracted from `J` in the connection matrix `D`.
pub const J_SHIFT: i64 = 240;

/// Smallest recurrence order used for numerical evaluation, whatever the reported length.
pub const MIN_EVAL_ORDER: usize = 100;

/// Default bound on denominators of reconstructed gauge ratios.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("resonant step at n = {n}, entry ({i}, {j})")]
    ResonantStep { n: usize, i: usize, j: usize },
    #[error("recurrence inconsistent: {0}")]
    ConsistencyFailure(String),
    #[error("kernel series has {have} terms, need {need}")]
    KernelTooShort { have: usize, need: usize },
    #[error("gauge ambiguity unresolved (kernel dimension {0})")]
    AmbiguityUnresolved(usize),
    #[error("gauge ratio reconstruction failed: {0}")]
    ReconstructionUncertain(String),
    #[error("S-covariance residual {0} after gauge fixing")]
    CovarianceMismatch(String),
    #[error("trace condition fails (deviation {0})")]
    TraceCondition(String),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
    #[error(transparent)]
    Series(#[from] QSeriesError),
}

impl From<NumericError> for EngineError {
    fn from(e: NumericError) -> Self {
        EngineError::ReconstructionUncertain(e.to_string())
    }
}

/// The scalar series `(Delta/E10)(J - 240)` and `Delta/(q E10)`, both starting at `q^0`.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    pub s1: Vec<Rational>,
    pub s2: Vec<Rational>,
}

impl KernelSeries {
    pub fn new(nterms: usize) -> Self {
        let n = nterms.max(2);
        let e10 = eisenstein(10, n).expect("weight 10 is supported");
        let ratio = delta(n).mul(&e10.invert().expect("E10 is a unit"));
        let shifted = jay(n).add_monomial(&Rational::new(), &Rational::from(-J_SHIFT)).expect("integral offsets");
        let s1 = ratio.mul(&shifted);
        debug_assert_eq!(s1.leading_exponent(), &Rational::new());
        KernelSeries { s1: s1.coefficients().to_vec(), s2: ratio.coefficients().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.s1.len().min(self.s2.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `D[m]` for the given exponent and characteristic matrix.
    pub fn d_coefficient(&self, m: usize, lambda: &RatMatrix, k: &RatMatrix) -> RatMatrix {
        let lm = lambda - &RatMatrix::identity(lambda.dim());
        let mut out = lm.scale(&self.s1[m]);
        if m >= 1 {
            out = &out + &k.scale(&self.s2[m - 1]);
        }
        out
    }
}

/// `Xi[n]` for `n = -1 ..= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalExpansion {
    pub lambda: RatMatrix,
    coefficients: Vec<RatMatrix>,
}

impl FundamentalExpansion {
    /// Highest computed index `N`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 2
    }

    /// `Xi[n]` for `n >= -1`.
    pub fn coefficient(&self, n: isize) -> &RatMatrix {
        &self.coefficients[(n + 1) as usize]
    }

    pub fn chi(&self) -> &RatMatrix {
        self.coefficient(0)
    }

    /// Conjugates every coefficient by `diag(r)`.
    pub fn rescaled(&self, r: &[Rational]) -> FundamentalExpansion {
        FundamentalExpansion { lambda: self.lambda.clone(), coefficients: self.coefficients.iter().map(|m| m.diagonal_conjugate(r)).collect() }
    }

    /// Adds `delta` to `Xi[n]_ij`; used to probe the covariance test.
    pub fn perturbed(&self, n: isize, i: usize, j: usize, delta: &Rational) -> FundamentalExpansion {
        let mut out = self.clone();
        out.coefficients[(n + 1) as usize][(i, j)] += delta;
        out
    }

    /// Entry `(i, j)` as a q-series starting at `q^(Lambda_ii - 1)`.
    pub fn entry(&self, i: usize, j: usize) -> QSeries {
        let lead = Rational::from(&self.lambda[(i, i)] - 1u32);
        QSeries::new(lead, self.coefficients.iter().map(|m| m[(i, j)].clone()).collect())
    }

    /// Numerical value at `tau`, failing if any truncation tail exceeds 1e-20.
    pub fn evaluate(&self, tau: &Tau, prec: Precision) -> Result<CMatrix, EngineError> {
        let d = self.lambda.dim();
        let mut out = CMatrix::zeros(d, d, prec);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self.entry(i, j).evaluate(tau, prec)?.value;
            }
        }
        Ok(out)
    }
}

/// Solves the recurrence up to `Xi[order]`.
pub fn recurrence(lambda: &RatMatrix, chi: &RatMatrix, order: usize, kernel: &KernelSeries) -> Result<FundamentalExpansion, EngineError> {
    let d = lambda.dim();
    if kernel.len() < order + 2 {
        return Err(EngineError::KernelTooShort { have: kernel.len(), need: order + 2 });
    }
    let id = RatMatrix::identity(d);
    let lm = lambda - &id;
    let k = twisted_chi(lambda, chi);
    if kernel.d_coefficient(0, lambda, &k) != lm {
        return Err(EngineError::ConsistencyFailure("D[0] differs from Lambda - I".into()));
    }
    if kernel.d_coefficient(1, lambda, &k) != k {
        return Err(EngineError::ConsistencyFailure("D[1] differs from chi + [Lambda, chi]".into()));
    }

    // Xi[n-m] D[m] = s1[m] Xi[n-m](Lambda - I) + s2[m-1] Xi[n-m] K
    let mut xi: Vec<RatMatrix> = vec![id];
    let mut xl: Vec<RatMatrix> = Vec::with_capacity(order + 2);
    let mut xk: Vec<RatMatrix> = Vec::with_capacity(order + 2);
    for n in 0..=order {
        let last = &xi[n];
        xl.push(last * &lm);
        xk.push(last * &k);
        let mut rhs = RatMatrix::zeros(d);
        for m in 1..=n + 1 {
            let idx = n + 1 - m;
            let (a, b) = (&kernel.s1[m], &kernel.s2[m - 1]);
            for i in 0..d {
                for j in 0..d {
                    let mut t = Rational::from(a * &xl[idx][(i, j)]);
                    t += Rational::from(b * &xk[idx][(i, j)]);
                    rhs[(i, j)] += t;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let denom = Rational::from(&lambda[(i, i)] - &lambda[(j, j)]) + (n as u64 + 1);
                if denom.cmp0().is_eq() {
                    return Err(EngineError::ResonantStep { n, i, j });
                }
                rhs[(i, j)] /= denom;
            }
        }
        xi.push(rhs);
    }
    let exp = FundamentalExpansion { lambda: lambda.clone(), coefficients: xi };
    if exp.chi() != chi {
        return Err(EngineError::ConsistencyFailure("Xi[0] differs from chi".into()));
    }
    Ok(exp)
}

/// Outcome of fixing the diagonal gauge.
#[derive(Debug, Clone)]
pub struct GaugeFix {
    /// Rescaling ratios with `r_0 = 1`.
    pub ratios: Vec<Rational>,
    pub expansion: FundamentalExpansion,
    /// `|Xi(i) - S Xi(i)|` after the rescaling.
    pub residual: Float,
    /// Number of evaluation points needed to make the kernel one-dimensional.
    pub points_used: usize,
}

pub fn confirmation_points() -> Vec<Tau> {
    vec![Tau::i(), Tau::new(Rational::new(), Rational::from(2)).expect("upper half-plane"), Tau::new(Rational::from((1, 2)), Rational::from(1)).expect("upper half-plane")]
}

/// Rows of `r_i Y'_ij = sum_k S_ik r_k Y_kj`, with `Y = Xi(tau)` and `Y' = Xi(-1/tau)`.
fn gauge_rows(rho_s: &CMatrix, y: &CMatrix, y_img: &CMatrix, prec: Precision) -> Vec<Vec<Complex>> {
    let d = y.rows();
    let mut rows = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let row = (0..d)
                .map(|k| {
                    let mut v = Complex::with_val(prec.bits(), &rho_s[(i, k)] * &y[(k, j)]);
                    if i == k {
                        v -= &y_img[(i, j)];
                    }
                    v
                })
                .collect();
            rows.push(row);
        }
    }
    rows
}

fn covariance_gap(exp: &FundamentalExpansion, rho_s: &CMatrix, tau: &Tau, prec: Precision) -> Result<Float, EngineError> {
    let y = exp.evaluate(tau, prec)?;
    let y_img = exp.evaluate(&tau.s_image(), prec)?;
    Ok((&y_img - &(rho_s * &y)).max_abs())
}

/// Finds `r` with `diag(r) Xi diag(r)^-1` S-covariant, using `tau = i` and,
/// if the kernel is degenerate, the other confirmation points.
pub fn resolve_gauge(expansion: &FundamentalExpansion, rho_s: &CMatrix, prec: Precision, max_denominator: &Integer) -> Result<GaugeFix, EngineError> {
    let d = expansion.lambda.dim();
    let points = confirmation_points();
    let mut rows: Vec<Vec<Complex>> = Vec::new();
    let mut kernel = Vec::new();
    let mut used = 0;
    for tau in &points {
        let y = expansion.evaluate(tau, prec)?;
        let y_img = if used == 0 { y.clone() } else { expansion.evaluate(&tau.s_image(), prec)? };
        rows.extend(gauge_rows(rho_s, &y, &y_img, prec));
        used += 1;
        let m = CMatrix::from_fn(rows.len(), d, |r, c| rows[r][c].clone());
        kernel = nullspace(&m, prec);
        if kernel.len() <= 1 {
            break;
        }
    }
    if kernel.len() != 1 {
        return Err(EngineError::AmbiguityUnresolved(kernel.len()));
    }
    let v = &kernel[0];
    let v0 = v[0].clone();
    if abs(&v0) < pow10(prec, -20) {
        return Err(EngineError::AmbiguityUnresolved(1));
    }
    let mut ratios = Vec::with_capacity(d);
    for z in v {
        let ratio = Complex::with_val(prec.bits(), z / &v0);
        let scale = Float::with_val(prec.bits(), abs(&ratio)).max(&Float::with_val(prec.bits(), 1));
        if Float::with_val(prec.bits(), ratio.imag().abs_ref()) > scale * pow10(prec, -15) {
            return Err(EngineError::ReconstructionUncertain("gauge ratio is not real".into()));
        }
        let rec = rational_reconstruct(ratio.real(), max_denominator)?;
        if rec.value.cmp0().is_eq() {
            return Err(EngineError::AmbiguityUnresolved(1));
        }
        ratios.push(rec.value);
    }
    let fixed = expansion.rescaled(&ratios);
    let residual = covariance_gap(&fixed, rho_s, &Tau::i(), prec)?;
    if residual >= pow10(prec, -20) {
        return Err(EngineError::CovarianceMismatch(residual.to_string_radix(10, Some(6))));
    }
    Ok(GaugeFix { ratios, expansion: fixed, residual, points_used: used })
}

/// `max_tau |Xi(-1/tau) - rho(S) Xi(tau)|`.
pub fn covariance_residual(expansion: &FundamentalExpansion, rho_s: &CMatrix, taus: &[Tau], prec: Precision) -> Result<Float, EngineError> {
    let mut worst = Float::new(prec.bits());
    for tau in taus {
        let gap = covariance_gap(expansion, rho_s, tau, prec)?;
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

/// `exp(2 pi i Lambda_ii) = rho(T)_ii`, compared exactly as rational exponents mod 1.
pub fn t_covariant(lambda: &RatMatrix, spec: &GenusSpec) -> bool {
    (0..lambda.dim()).all(|i| frac(&lambda[(i, i)]) == spec.datum.t_exponent(&spec.c, i))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    IntegralNonneg,
    NonIntegral,
    NegativeCoefficient,
    SolverFailure(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::IntegralNonneg => "integral_nonneg",
            Status::NonIntegral => "non_integral",
            Status::NegativeCoefficient => "negative_coefficient",
            Status::SolverFailure(_) => "solver_failure",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Status::SolverFailure(r) => Some(r),
            _ => None,
        }
    }
}

/// One character component `q^leading_exponent * sum coefficients[n] q^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub leading_exponent: Rational,
    pub coefficients: Vec<Rational>,
}

#[derive(Debug, Clone)]
pub struct CharacterCandidate {
    pub family: String,
    pub c: Rational,
    /// Minimal energies of every non-vacuum module (unfolded).
    pub h: Vec<Rational>,
    pub ell: Integer,
    pub p: usize,
    pub status: Status,
    pub dim_v1: Option<Rational>,
    pub components: Vec<Component>,
    pub connection: Option<ConnectionSolution>,
    pub gauge_ratios: Vec<Rational>,
    pub chi_hat: Option<RatMatrix>,
    pub gauge_residual: Option<Float>,
    pub covariance_residual: Option<Float>,
    pub trace_deviation: Option<Float>,
}

impl CharacterCandidate {
    fn failure(cand: &ExponentCandidate, reason: String) -> Self {
        CharacterCandidate {
            family: cand.spec.datum.label.clone(),
            c: cand.spec.c.clone(),
            h: unfold_h(cand),
            ell: cand.ell.clone(),
            p: cand.p,
            status: Status::SolverFailure(reason),
            dim_v1: None,
            components: Vec::new(),
            connection: None,
            gauge_ratios: Vec::new(),
            chi_hat: None,
            gauge_residual: None,
            covariance_residual: None,
            trace_deviation: None,
        }
    }
}

fn unfold_h(cand: &ExponentCandidate) -> Vec<Rational> {
    let mut h = cand.h.clone();
    if let Some(rank) = cand.spec.datum.unfolded_rank {
        while h.len() + 1 < rank {
            h.push(h[h.len() - 1].clone());
        }
    }
    h
}

/// Reads off the first column, classifies it and unfolds folded genera.
///
/// A folded component is the sum over its orbit of conjugate modules.
pub fn screen_first_column(expansion: &FundamentalExpansion, cand: &ExponentCandidate, terms: usize) -> CharacterCandidate {
    let d = expansion.lambda.dim();
    let mut components = Vec::with_capacity(d);
    for i in 0..d {
        let start: isize = if i == 0 { -1 } else { 0 };
        let coefficients: Vec<Rational> = (start..).take(terms).map(|n| expansion.coefficient(n)[(i, 0)].clone()).collect();
        let lead = Rational::from(&expansion.lambda[(i, i)] - 1u32) + (start + 1) as i64;
        components.push(Component { leading_exponent: lead, coefficients });
    }
    let all = components.iter().flat_map(|c| c.coefficients.iter());
    let status = if all.clone().any(|x| !x.is_integer()) {
        Status::NonIntegral
    } else if all.clone().any(|x| x.cmp0().is_lt()) {
        Status::NegativeCoefficient
    } else {
        Status::IntegralNonneg
    };
    // folded rows are reported as the orbit sum, repeated once per orbit member
    if let Some(rank) = cand.spec.datum.unfolded_rank {
        let orbit = (rank + 1 - d) as u32;
        let last = components.last_mut().expect("rank >= 1");
        for x in &mut last.coefficients {
            *x *= orbit;
        }
        while components.len() < rank {
            components.push(components[components.len() - 1].clone());
        }
    }
    let dim_v1 = components[0].coefficients.get(1).cloned();
    CharacterCandidate {
        family: cand.spec.datum.label.clone(),
        c: cand.spec.c.clone(),
        h: unfold_h(cand),
        ell: cand.ell.clone(),
        p: cand.p,
        status,
        dim_v1,
        components,
        connection: None,
        gauge_ratios: Vec::new(),
        chi_hat: Some(expansion.chi().clone()),
        gauge_residual: None,
        covariance_residual: None,
        trace_deviation: None,
    }
}

/// Knobs shared by every candidate in a run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Coefficients reported per component; the recurrence runs to `terms - 1`.
    pub terms: usize,
    pub precision: Precision,
    pub max_denominator: Integer,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { terms: 100, precision: Precision::DEFAULT, max_denominator: Integer::from(DEFAULT_MAX_DENOMINATOR) }
    }
}

impl PipelineConfig {
    /// Recurrence order: enough for the requested terms and for evaluation near the real axis.
    pub fn order(&self) -> usize {
        self.terms.saturating_sub(1).max(MIN_EVAL_ORDER)
    }

    pub fn kernel(&self) -> KernelSeries {
        KernelSeries::new(self.order() + 2)
    }
}

/// Trace check, connection, recurrence, gauge fixing and screening for one candidate.
///
/// Every connection that survives gauge fixing yields one entry; if none
/// does, the single entry carries a `SolverFailure` status.
pub fn run_candidate(cand: &ExponentCandidate, kernel: &KernelSeries, cfg: &PipelineConfig) -> Vec<CharacterCandidate> {
    match run_inner(cand, kernel, cfg) {
        Ok(found) => found,
        Err(e) => vec![CharacterCandidate::failure(cand, e.to_string())],
    }
}

/// A connection whose expansion survived gauge fixing.
#[derive(Debug, Clone)]
pub struct FixedSolution {
    pub connection: ConnectionSolution,
    pub gauge: GaugeFix,
}

/// Gauge-fixed expansions for every admissible connection of the candidate.
pub fn gauge_fixed(cand: &ExponentCandidate, kernel: &KernelSeries, cfg: &PipelineConfig) -> Result<(Vec<FixedSolution>, TraceCheck), EngineError> {
    let prec = cfg.precision;
    let trace = check_trace(cand, prec)?;
    if !trace.holds {
        return Err(EngineError::TraceCondition(trace.deviation.to_string_radix(10, Some(6))));
    }
    let lambda = cand.lambda_matrix();
    if !t_covariant(&lambda, &cand.spec) {
        return Err(EngineError::ConsistencyFailure("exponent does not match rho(T)".into()));
    }
    let rho_s = cand.spec.rho(Generator::S, prec);
    let mut found = Vec::new();
    let mut failures = Vec::new();
    for sol in solve_connection(&lambda)? {
        match recurrence(&lambda, &sol.chi, cfg.order(), kernel).and_then(|exp| resolve_gauge(&exp, &rho_s, prec, &cfg.max_denominator)) {
            Ok(gauge) => found.push(FixedSolution { connection: sol, gauge }),
            Err(e) => failures.push(format!("rank A = {}: {e}", sol.rank_a)),
        }
    }
    if found.is_empty() {
        return Err(if failures.is_empty() {
            EngineError::AmbiguityUnresolved(0)
        } else {
            EngineError::ConsistencyFailure(format!("no connection survives gauge fixing: {}", failures.join("; ")))
        });
    }
    Ok((found, trace))
}

fn run_inner(cand: &ExponentCandidate, kernel: &KernelSeries, cfg: &PipelineConfig) -> Result<Vec<CharacterCandidate>, EngineError> {
    let prec = cfg.precision;
    let rho_s = cand.spec.rho(Generator::S, prec);
    let (fixed, trace) = gauge_fixed(cand, kernel, cfg)?;
    let mut out = Vec::with_capacity(fixed.len());
    for FixedSolution { connection, gauge } in fixed {
        let mut row = screen_first_column(&gauge.expansion, cand, cfg.terms);
        row.covariance_residual = Some(covariance_residual(&gauge.expansion, &rho_s, &confirmation_points(), prec)?);
        row.gauge_residual = Some(gauge.residual);
        row.gauge_ratios = gauge.ratios;
        row.trace_deviation = Some(trace.deviation.clone());
        row.connection = Some(connection);
        out.push(row);
    }
    Ok(out)
}

/// Position of printed coefficient `index` of unfolded component `component` in the expansion,
/// together with the orbit size the printed value carries.
pub fn coefficient_position(cand: &ExponentCandidate, component: usize, index: usize) -> (isize, usize, u32) {
    let d = cand.spec.rank();
    let row = component.min(d - 1);
    let n = if component == 0 { index as isize - 1 } else { index as isize };
    let orbit = match cand.spec.datum.unfolded_rank {
        Some(rank) if row == d - 1 && row > 0 => (rank + 1 - d) as u32,
        _ => 1,
    };
    (n, row, orbit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::lookup;
    use crate::extremal::enumerate_extremal;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn ints(c: &Component, n: usize) -> Vec<i64> {
        c.coefficients.iter().take(n).map(|x| x.numer().to_i64().unwrap()).collect()
    }

    #[test]
    fn kernel_series_leading_terms() {
        let k = KernelSeries::new(4);
        assert_eq!(k.s1[..3], [q(1, 1), q(0, 1), q(338328, 1)]);
        assert_eq!(k.s2[..3], [q(1, 1), q(240, 1), q(199044, 1)]);
    }

    #[test]
    fn constant_solution() {
        let k = KernelSeries::new(13);
        let lambda = RatMatrix::diagonal(&[q(1, 1)]);
        let exp = recurrence(&lambda, &RatMatrix::zeros(1), 10, &k).unwrap();
        assert_eq!(exp.order(), 10);
        assert!((0..=10).all(|n| exp.coefficient(n).is_zero()));
    }

    #[test]
    fn e6_over_eta12_oracle() {
        let k = KernelSeries::new(6);
        let lambda = RatMatrix::diagonal(&[q(1, 2)]);
        let exp = recurrence(&lambda, &RatMatrix::diagonal(&[q(-492, 1)]), 2, &k).unwrap();
        assert_eq!(exp.coefficient(1)[(0, 0)], -22590);
    }

    #[test]
    fn resonance_and_consistency() {
        let k = KernelSeries::new(6);
        let lambda = RatMatrix::diagonal(&[q(1, 1), q(3, 1)]);
        assert_eq!(recurrence(&lambda, &RatMatrix::zeros(2), 3, &k), Err(EngineError::ResonantStep { n: 1, i: 0, j: 1 }));
        assert!(matches!(recurrence(&lambda, &RatMatrix::zeros(2), 10, &k), Err(EngineError::KernelTooShort { .. })));
    }

    #[test]
    fn recurrence_is_causal() {
        let k = KernelSeries::new(30);
        let lambda = RatMatrix::diagonal(&[q(23, 24), q(5, 24)]);
        let chi = solve_connection(&lambda).unwrap().into_iter().find(|s| s.rank_a == 1).unwrap().chi;
        let short = recurrence(&lambda, &chi, 10, &k).unwrap();
        let long = recurrence(&lambda, &chi, 25, &k).unwrap();
        assert!((-1..=10).all(|n| short.coefficient(n) == long.coefficient(n)));
    }

    fn candidate(label: &str, c: Rational, h: &[Rational]) -> ExponentCandidate {
        let spec = GenusSpec::new(lookup(label).unwrap().effective(), c).unwrap();
        ExponentCandidate::new(spec, h.to_vec())
    }

    #[test]
    fn su2_1_c1_gauge() {
        let cand = candidate("su2_1", q(1, 1), &[q(1, 4)]);
        let lambda = cand.lambda_matrix();
        let sol = solve_connection(&lambda).unwrap().into_iter().find(|s| s.rank_a == 1).unwrap();
        let k = KernelSeries::new(62);
        let exp = recurrence(&lambda, &sol.chi, 60, &k).unwrap();
        let prec = Precision::DEFAULT;
        let rho_s = cand.spec.rho(Generator::S, prec);
        let fix = resolve_gauge(&exp, &rho_s, prec, &Integer::from(1000)).unwrap();
        assert_eq!(fix.ratios, vec![q(1, 1), q(-1, 56)]);
        assert_eq!(fix.points_used, 1);
        let chi_hat = fix.expansion.chi();
        assert_eq!(chi_hat[(1, 0)], 2);
        assert_eq!(chi_hat[(0, 1)], 26752);
        assert_eq!(fix.expansion.coefficient(1)[(0, 0)], 4);
        assert_eq!(fix.expansion.coefficient(2)[(1, 0)], 6);

        let res = covariance_residual(&fix.expansion, &rho_s, &confirmation_points(), prec).unwrap();
        assert!(res < pow10(prec, -20));
        let bumped = fix.expansion.perturbed(1, 1, 0, &q(1, 1));
        assert!(covariance_residual(&bumped, &rho_s, &confirmation_points(), prec).unwrap() > 1e-6);
        assert!(t_covariant(&lambda, &cand.spec));

        // an already covariant expansion needs no rescaling
        let again = resolve_gauge(&fix.expansion, &rho_s, prec, &Integer::from(1000)).unwrap();
        assert_eq!(again.ratios, vec![q(1, 1), q(1, 1)]);
    }

    #[test]
    fn perturbed_chi_is_rejected() {
        let cand = candidate("su2_1", q(1, 1), &[q(1, 4)]);
        let lambda = cand.lambda_matrix();
        let mut chi = solve_connection(&lambda).unwrap().into_iter().find(|s| s.rank_a == 1).unwrap().chi;
        chi[(0, 0)] += 1u32;
        let exp = recurrence(&lambda, &chi, 60, &KernelSeries::new(62)).unwrap();
        let prec = Precision::DEFAULT;
        match resolve_gauge(&exp, &cand.spec.rho(Generator::S, prec), prec, &Integer::from(DEFAULT_MAX_DENOMINATOR)) {
            Err(_) => {}
            Ok(fix) => assert!(fix.residual >= 1e-3),
        }
    }

    #[test]
    fn end_to_end_su2_1() {
        let cfg = PipelineConfig { terms: 20, ..PipelineConfig::default() };
        let kernel = cfg.kernel();
        let cand = candidate("su2_1", q(1, 1), &[q(1, 4)]);
        let found = run_candidate(&cand, &kernel, &cfg);
        assert_eq!(found.len(), 1);
        let r = &found[0];
        assert_eq!(r.status, Status::IntegralNonneg);
        assert_eq!(r.dim_v1, Some(q(3, 1)));
        assert_eq!(ints(&r.components[0], 3), vec![1, 3, 4]);
        assert_eq!(ints(&r.components[1], 3), vec![2, 2, 6]);
        assert_eq!(r.components[0].leading_exponent, q(-1, 24));
        assert_eq!(r.components[1].leading_exponent, q(5, 24));
        assert_eq!(r.components[0].coefficients.len(), 20);

        let c25 = candidate("su2_1", q(25, 1), &[q(9, 4)]);
        let found = run_candidate(&c25, &kernel, &cfg);
        assert!(found.iter().all(|r| r.status != Status::IntegralNonneg));
    }

    #[test]
    fn folded_su3_unfolds() {
        let cfg = PipelineConfig { terms: 10, ..PipelineConfig::default() };
        let spec = GenusSpec::new(lookup("su3_1").unwrap().effective(), q(2, 1)).unwrap();
        let cand = enumerate_extremal(&spec).unwrap().remove(0);
        let r = run_candidate(&cand, &cfg.kernel(), &cfg).remove(0);
        assert_eq!(r.status, Status::IntegralNonneg);
        assert_eq!(r.components.len(), 3);
        assert_eq!(r.h, vec![q(1, 3), q(1, 3)]);
        assert_eq!(ints(&r.components[0], 3), vec![1, 8, 17]);
        assert_eq!(ints(&r.components[1], 3), vec![6, 18, 54]);
        assert_eq!(r.components[1], r.components[2]);
    }

    #[test]
    fn ising_minimal_model() {
        let cfg = PipelineConfig { terms: 12, ..PipelineConfig::default() };
        let cand = candidate("ising", q(1, 2), &[q(1, 16), q(1, 2)]);
        let r = run_candidate(&cand, &cfg.kernel(), &cfg).remove(0);
        assert_eq!(r.status, Status::IntegralNonneg);
        assert_eq!(ints(&r.components[0], 3), vec![1, 0, 1]);
        assert_eq!(ints(&r.components[1], 3), vec![1, 1, 1]);
        assert_eq!(ints(&r.components[2], 3), vec![1, 1, 1]);
    }
}
