//! Extremal exponent candidates and the trace condition for bijectivity.

use rug::{Complex, Float, Integer, Rational};
use thiserror::Error;

use crate::catalog::{GenusSpec, Generator};
use crate::numeric::{abs, binomial2, pow10, root_of_unity, CMatrix, Precision, RatMatrix};

/// Bits needed to resolve the 1e-20 trace tolerance with some margin.
const TRACE_MIN_BITS: u32 = 96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtremalError {
    #[error("no integer ell exists for {family} at c = {c} (residue {residue})")]
    NonIntegralResidue { family: String, c: String, residue: String },
    #[error("working precision of {0} bits cannot resolve the trace condition")]
    PrecisionLoss(u32),
}

#[derive(Debug, Clone)]
pub struct ExponentCandidate {
    pub spec: GenusSpec,
    /// Minimal energies of the non-vacuum modules of the effective datum.
    pub h: Vec<Rational>,
    pub ell: Integer,
    pub p: usize,
}

impl ExponentCandidate {
    pub fn new(spec: GenusSpec, h: Vec<Rational>) -> Self {
        let p = spec.datum.basis_size();
        let ell = ell(&spec.c, &h, p);
        let ell = if ell.is_integer() { ell.numer().clone() } else { Integer::from(-1) };
        ExponentCandidate { spec, h, ell, p }
    }

    /// Diagonal of the exponent matrix: `delta_{i0} + h_i - c/24`.
    pub fn lambda(&self) -> Vec<Rational> {
        let shift = Rational::from(&self.spec.c / 24u32);
        std::iter::once(Rational::from(1u32 - &shift)).chain(self.h.iter().map(|h| Rational::from(h - &shift))).collect()
    }

    pub fn lambda_matrix(&self) -> RatMatrix {
        RatMatrix::diagonal(&self.lambda())
    }

    /// Checks `h_i > 0` and `h_i = t_i mod 1`.
    pub fn is_well_formed(&self) -> bool {
        self.h.len() + 1 == self.spec.rank()
            && self.h.iter().zip(&self.spec.datum.twists[1..]).all(|(h, t)| h.cmp0().is_gt() && Rational::from(h - t).is_integer())
    }
}

/// `(p choose 2) + p c/4 - 6 sum h`.
pub fn ell(c: &Rational, h: &[Rational], p: usize) -> Rational {
    let sum: Rational = h.iter().fold(Rational::new(), |acc, x| acc + x);
    binomial2(p) + Rational::from(c * p as u64) / 4u32 - sum * 6u32
}

pub fn is_extremal(candidate: &ExponentCandidate) -> bool {
    candidate.ell >= 0 && candidate.ell < 6
}

/// All extremal liftings `h_i = t_i + k_i` for the genus, sorted lexicographically.
pub fn enumerate_extremal(spec: &GenusSpec) -> Result<Vec<ExponentCandidate>, ExtremalError> {
    let datum = &spec.datum;
    let p = datum.basis_size();
    let twists = &datum.twists[1..];
    let base = ell(&spec.c, twists, p);
    if !base.is_integer() {
        return Err(ExtremalError::NonIntegralResidue { family: datum.label.clone(), c: spec.c.to_string(), residue: base.to_string() });
    }
    let base = base.numer().clone();
    let ell_star = Integer::from(base.mod_u(6));
    let total = Integer::from(&base - &ell_star) / 6u32;
    if total < 0 {
        return Ok(Vec::new());
    }
    let total = total.to_usize().expect("small shift");
    let mut out = Vec::new();
    let mut k = vec![0usize; twists.len()];
    compositions(total, 0, &mut k, &mut |k| {
        let h = k.iter().zip(twists).map(|(&k, t)| Rational::from(t + k as u64)).collect();
        out.push(ExponentCandidate::new(spec.clone(), h));
    });
    out.sort_by(|a, b| a.h.cmp(&b.h));
    Ok(out)
}

fn compositions(remaining: usize, idx: usize, k: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if idx + 1 == k.len() {
        k[idx] = remaining;
        emit(k);
        return;
    }
    if k.is_empty() {
        if remaining == 0 {
            emit(k);
        }
        return;
    }
    for first in 0..=remaining {
        k[idx] = first;
        compositions(remaining - first, idx + 1, k, emit);
    }
}

/// Result of comparing `Tr Lambda` with the representation-theoretic value.
#[derive(Debug, Clone)]
pub struct TraceCheck {
    pub holds: bool,
    pub lhs: Rational,
    pub rhs: Float,
    pub deviation: Float,
}

/// `5d/12 + Tr(S)/4 + (2/(3 sqrt 3)) Re(exp(-i pi/6) Tr(S T^-1))`.
pub fn trace_rhs(rho_s: &CMatrix, rho_st_inv: &CMatrix, prec: Precision) -> Float {
    let bits = prec.bits();
    let d = rho_s.rows() as u32;
    let mut rhs = Float::with_val(bits, 5 * d) / 12u32;
    rhs += Float::with_val(bits, rho_s.trace().real()) / 4u32;
    let rot = root_of_unity(&Rational::from((-1, 12)), prec);
    let term = Complex::with_val(bits, &rot * &rho_st_inv.trace());
    let coeff = Float::with_val(bits, 2u32) / (Float::with_val(bits, 3u32).sqrt() * 3u32);
    rhs += coeff * term.real();
    rhs
}

/// Compares the exact trace of the diagonal exponent `lambda` with [`trace_rhs`].
pub fn trace_condition(lambda: &[Rational], rho_s: &CMatrix, rho_st_inv: &CMatrix, prec: Precision) -> Result<TraceCheck, ExtremalError> {
    if prec.bits() < TRACE_MIN_BITS {
        return Err(ExtremalError::PrecisionLoss(prec.bits()));
    }
    let lhs = lambda.iter().fold(Rational::new(), |acc, x| acc + x);
    let rhs = trace_rhs(rho_s, rho_st_inv, prec);
    let deviation = Float::with_val(prec.bits(), &rhs - &lhs).abs();
    let holds = deviation < pow10(prec, -20);
    Ok(TraceCheck { holds, lhs, rhs, deviation })
}

/// Builds `rho(S)` and `rho(S) rho(T)^-1` for the candidate's genus and runs the check.
pub fn check_trace(candidate: &ExponentCandidate, prec: Precision) -> Result<TraceCheck, ExtremalError> {
    let s = candidate.spec.rho(Generator::S, prec);
    let t = candidate.spec.rho(Generator::T, prec);
    let t_inv = CMatrix::from_fn(t.rows(), t.cols(), |i, j| {
        if i == j {
            let z = &t[(i, i)];
            Complex::with_val(prec.bits(), z.conj_ref()) / Complex::with_val(prec.bits(), abs(z).square())
        } else {
            prec.complex(0)
        }
    });
    trace_condition(&candidate.lambda(), &s, &(&s * &t_inv), prec)
}
