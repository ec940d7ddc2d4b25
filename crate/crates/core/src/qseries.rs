//! Truncated q-expansions with a single rational offset.
//!
//! A [`QSeries`] stores `q^e * (c_0 + c_1 q + ... + c_{n-1} q^{n-1})` with
//! exact rational coefficients. Arithmetic keeps only the orders that are
//! determined by both operands.

use std::fmt;

use rug::ops::Pow;
use rug::{Complex, Float, Rational};
use thiserror::Error;

use crate::numeric::{pow10, rational_to_complex, Precision};
#[cfg(test)]
use crate::numeric::abs;

/// Coefficients produced by default: 100 screened terms plus headroom.
pub const DEFAULT_NTERMS: usize = 105;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QSeriesError {
    #[error("unsupported Eisenstein weight {0} (expected 4, 6 or 10)")]
    UnsupportedWeight(u32),
    #[error("series has a zero leading coefficient and cannot be inverted")]
    NonUnitSeries,
    #[error("series offsets {0} and {1} do not differ by an integer")]
    IncompatibleExponents(String, String),
    #[error("tau must lie in the upper half-plane")]
    NotInUpperHalfPlane,
    #[error("truncation tail bound {0} exceeds 1e-20")]
    PrecisionLoss(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    leading_exponent: Rational,
    coefficients: Vec<Rational>,
}

/// A point of the upper half-plane with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tau {
    pub re: Rational,
    pub im: Rational,
}

impl Tau {
    pub fn new(re: Rational, im: Rational) -> Result<Self, QSeriesError> {
        if im.cmp0().is_le() {
            return Err(QSeriesError::NotInUpperHalfPlane);
        }
        Ok(Tau { re, im })
    }

    pub fn i() -> Self {
        Tau { re: Rational::new(), im: Rational::from(1) }
    }

    /// `-1/tau`, computed exactly.
    pub fn s_image(&self) -> Tau {
        let norm = Rational::from(self.re.square_ref()) + Rational::from(self.im.square_ref());
        Tau { re: Rational::from(-&self.re) / &norm, im: Rational::from(&self.im / &norm) }
    }

    pub fn to_complex(&self, prec: Precision) -> Complex {
        Complex::with_val(prec.bits(), (Float::with_val(prec.bits(), &self.re), Float::with_val(prec.bits(), &self.im)))
    }

    /// `q^s = exp(2 pi i tau s)` for rational `s`.
    pub fn q_power(&self, s: &Rational, prec: Precision) -> Complex {
        let mut arg = self.to_complex(prec) * (prec.pi() * 2u32);
        arg *= Complex::with_val(prec.bits(), (0, 1));
        arg *= Float::with_val(prec.bits(), s);
        arg.exp()
    }

    /// `|q| = exp(-2 pi Im tau)`.
    pub fn q_modulus(&self, prec: Precision) -> Float {
        let x = prec.pi() * 2u32 * Float::with_val(prec.bits(), &self.im);
        (-x).exp()
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", self.re, self.im)
    }
}

/// Value of a truncated series together with an a-posteriori tail estimate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: Complex,
    pub tail_bound: Float,
}

impl QSeries {
    pub fn new(leading_exponent: Rational, coefficients: Vec<Rational>) -> Self {
        QSeries { leading_exponent, coefficients }
    }

    pub fn from_integers(leading_exponent: i64, coefficients: &[i64]) -> Self {
        QSeries::new(Rational::from(leading_exponent), coefficients.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn one(nterms: usize) -> Self {
        let mut c = vec![Rational::new(); nterms];
        if let Some(first) = c.first_mut() {
            *first = Rational::from(1);
        }
        QSeries::new(Rational::new(), c)
    }

    pub fn leading_exponent(&self) -> &Rational {
        &self.leading_exponent
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn truncation_order(&self) -> usize {
        self.coefficients.len()
    }

    /// Coefficient of `q^exponent`, or `None` outside the stored window.
    pub fn coefficient(&self, exponent: &Rational) -> Option<&Rational> {
        let offset = Rational::from(exponent - &self.leading_exponent);
        if !offset.is_integer() || offset.cmp0().is_lt() {
            return None;
        }
        let idx = offset.numer().to_usize()?;
        self.coefficients.get(idx)
    }

    pub fn truncate(&self, nterms: usize) -> Self {
        QSeries::new(self.leading_exponent.clone(), self.coefficients.iter().take(nterms).cloned().collect())
    }

    pub fn scale(&self, k: &Rational) -> Self {
        QSeries::new(self.leading_exponent.clone(), self.coefficients.iter().map(|c| Rational::from(c * k)).collect())
    }

    /// Multiplies by `q^shift`.
    pub fn shift(&self, shift: &Rational) -> Self {
        QSeries::new(Rational::from(&self.leading_exponent + shift), self.coefficients.clone())
    }

    /// Adds `k q^exponent`. Exponents past the truncation order are dropped.
    pub fn add_monomial(&self, exponent: &Rational, k: &Rational) -> Result<Self, QSeriesError> {
        let offset = Rational::from(exponent - &self.leading_exponent);
        if !offset.is_integer() {
            return Err(QSeriesError::IncompatibleExponents(self.leading_exponent.to_string(), exponent.to_string()));
        }
        let offset = offset.numer().to_i64().unwrap_or(i64::MAX);
        let mut out = self.clone();
        if offset < 0 {
            let pad = offset.unsigned_abs() as usize;
            let mut coeffs = vec![Rational::new(); pad];
            coeffs.extend(out.coefficients);
            coeffs[0] += k;
            out = QSeries::new(exponent.clone(), coeffs);
        } else if let Some(c) = out.coefficients.get_mut(offset as usize) {
            *c += k;
        }
        Ok(out)
    }

    pub fn add(&self, other: &QSeries) -> Result<Self, QSeriesError> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &QSeries) -> Result<Self, QSeriesError> {
        self.combine(other, true)
    }

    fn combine(&self, other: &QSeries, negate: bool) -> Result<Self, QSeriesError> {
        let delta = Rational::from(&other.leading_exponent - &self.leading_exponent);
        if !delta.is_integer() {
            return Err(QSeriesError::IncompatibleExponents(self.leading_exponent.to_string(), other.leading_exponent.to_string()));
        }
        let delta = delta.numer().to_i64().unwrap_or(i64::MAX);
        let start = self.leading_exponent.clone().min(other.leading_exponent.clone());
        // both operands are known strictly below these exponents (relative to start)
        let (s_off, o_off) = if delta >= 0 { (0i64, delta) } else { (-delta, 0i64) };
        let end = (s_off + self.coefficients.len() as i64).min(o_off + other.coefficients.len() as i64);
        let len = end.max(0) as usize;
        let mut out = vec![Rational::new(); len];
        for (k, slot) in out.iter_mut().enumerate() {
            let k = k as i64;
            if let Some(c) = k.checked_sub(s_off).filter(|&i| i >= 0).and_then(|i| self.coefficients.get(i as usize)) {
                *slot += c;
            }
            if let Some(c) = k.checked_sub(o_off).filter(|&i| i >= 0).and_then(|i| other.coefficients.get(i as usize)) {
                if negate {
                    *slot -= c;
                } else {
                    *slot += c;
                }
            }
        }
        Ok(QSeries::new(start, out))
    }

    /// Cauchy product; the result keeps `min(len_a, len_b)` coefficients.
    pub fn mul(&self, other: &QSeries) -> QSeries {
        let n = self.coefficients.len().min(other.coefficients.len());
        let mut out = vec![Rational::new(); n];
        for (i, a) in self.coefficients.iter().take(n).enumerate() {
            if a.cmp0().is_eq() {
                continue;
            }
            for (j, b) in other.coefficients.iter().take(n - i).enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        QSeries::new(Rational::from(&self.leading_exponent + &other.leading_exponent), out)
    }

    pub fn pow(&self, k: u32) -> QSeries {
        let mut acc = QSeries::one(self.coefficients.len());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Reciprocal to the same truncation order.
    pub fn invert(&self) -> Result<QSeries, QSeriesError> {
        let lead = self.coefficients.first().filter(|c| c.cmp0().is_ne()).ok_or(QSeriesError::NonUnitSeries)?;
        let n = self.coefficients.len();
        let inv_lead = Rational::from(lead.recip_ref());
        let mut out: Vec<Rational> = Vec::with_capacity(n);
        out.push(inv_lead.clone());
        for k in 1..n {
            let mut acc = Rational::new();
            for i in 1..=k {
                acc += Rational::from(&self.coefficients[i] * &out[k - i]);
            }
            out.push(-acc * &inv_lead);
        }
        Ok(QSeries::new(Rational::from(-&self.leading_exponent), out))
    }

    /// `q d/dq`, i.e. `(1/2 pi i) d/d tau`.
    pub fn q_derivative(&self) -> QSeries {
        let coeffs = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| Rational::from(&self.leading_exponent + k as u64) * c)
            .collect();
        QSeries::new(self.leading_exponent.clone(), coeffs)
    }

    /// Numerical value at `tau`, with `q = exp(2 pi i tau)`.
    ///
    /// The tail estimate is `max|c_k| * |q|^(e + n) / (1 - |q|^(1/2))`, a
    /// heuristic that allows for moderate coefficient growth.
    pub fn evaluate(&self, tau: &Tau, prec: Precision) -> Result<Evaluation, QSeriesError> {
        let evaluation = self.evaluate_unchecked(tau, prec);
        if evaluation.tail_bound > pow10(prec, -20) {
            return Err(QSeriesError::PrecisionLoss(evaluation.tail_bound.to_string_radix(10, Some(6))));
        }
        Ok(evaluation)
    }

    pub fn evaluate_unchecked(&self, tau: &Tau, prec: Precision) -> Evaluation {
        let bits = prec.bits();
        let q = tau.q_power(&Rational::from(1), prec);
        let mut term = tau.q_power(&self.leading_exponent, prec);
        let mut value = Complex::new(bits);
        let mut max_coeff = Float::new(bits);
        for c in &self.coefficients {
            if c.cmp0().is_ne() {
                value += Complex::with_val(bits, &term * &rational_to_complex(c, prec));
                let a = Float::with_val(bits, c).abs();
                if a > max_coeff {
                    max_coeff = a;
                }
            }
            term *= &q;
        }
        let modulus = tau.q_modulus(prec);
        let tail_exp = Rational::from(&self.leading_exponent + self.coefficients.len() as u64);
        let q_tail = Float::with_val(bits, modulus.ln_ref()) * Float::with_val(bits, &tail_exp);
        let denom = Float::with_val(bits, 1u32) - Float::with_val(bits, modulus.sqrt_ref());
        let tail_bound = max_coeff * q_tail.exp() / denom;
        Evaluation { value, tail_bound }
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q^({}) * [", self.leading_exponent)?;
        for (i, c) in self.coefficients.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

fn divisor_power_sum(k: u32, n: u64) -> rug::Integer {
    let mut acc = rug::Integer::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            acc += rug::Integer::from(d).pow(k);
            let e = n / d;
            if e != d {
                acc += rug::Integer::from(e).pow(k);
            }
        }
        d += 1;
    }
    acc
}

/// Normalized Eisenstein series `E_4`, `E_6` and `E_10 = E_4 E_6`.
pub fn eisenstein(weight: u32, nterms: usize) -> Result<QSeries, QSeriesError> {
    let series = |k: u32, factor: i64| {
        let mut c = Vec::with_capacity(nterms);
        for n in 0..nterms {
            if n == 0 {
                c.push(Rational::from(1));
            } else {
                c.push(Rational::from(divisor_power_sum(k, n as u64) * factor));
            }
        }
        QSeries::new(Rational::new(), c)
    };
    match weight {
        4 => Ok(series(3, 240)),
        6 => Ok(series(5, -504)),
        10 => Ok(series(3, 240).mul(&series(5, -504))),
        w => Err(QSeriesError::UnsupportedWeight(w)),
    }
}

/// The discriminant `(E_4^3 - E_6^2) / 1728 = q - 24 q^2 + ...`.
pub fn delta(nterms: usize) -> QSeries {
    // E4^3 - E6^2 vanishes at q^0, so one extra term keeps `nterms` after the shift.
    let e4 = eisenstein(4, nterms + 1).expect("weight 4 is supported");
    let e6 = eisenstein(6, nterms + 1).expect("weight 6 is supported");
    let diff = e4.pow(3).sub(&e6.pow(2)).expect("integral offsets");
    let coeffs = diff.coefficients[1..].iter().map(|c| Rational::from(c / 1728u32)).collect();
    QSeries::new(Rational::from(1), coeffs)
}

/// `J = E_4^3 / Delta - 744 = q^-1 + 196884 q + ...`.
pub fn jay(nterms: usize) -> QSeries {
    let e4 = eisenstein(4, nterms).expect("weight 4 is supported");
    let inv = delta(nterms).invert().expect("delta has leading coefficient 1");
    let j = e4.pow(3).mul(&inv);
    j.add_monomial(&Rational::new(), &Rational::from(-744)).expect("integral offsets")
}

/// The affine Hauptmodul `(984 - J) / 1728`.
pub fn jfrak(nterms: usize) -> QSeries {
    jay(nterms).scale(&Rational::from(-1)).add_monomial(&Rational::new(), &Rational::from(984)).expect("integral offsets").scale(&Rational::from((1, 1728)))
}
