//! Exact rationals, working-precision complex numbers, rational
//! reconstruction and the small dense linear algebra used everywhere else.
//!
//! Rationals are GMP-backed [`rug::Rational`] values (always canonical:
//! reduced with a positive denominator). Floating values carry their own
//! precision; every constructor in this crate goes through [`Precision`] so
//! that nothing is evaluated below 64 bits.

mod linalg;

pub use linalg::{nullspace, solve_complex, solve_rational, CMatrix, RatMatrix};

use std::fmt;
use std::str::FromStr;

use rug::float::Constant;
use rug::ops::{DivRounding, Pow};
use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type BigRational = Rational;
pub type BigComplex = Complex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("rational reconstruction uncertain: residual {residual} exceeds tolerance {tolerance}")]
    ReconstructionUncertain { residual: String, tolerance: String },
    #[error("singular matrix (no usable pivot in column {pivot})")]
    SingularMatrix { pivot: usize },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("precision of {0} bits is below the 64-bit minimum")]
    PrecisionTooLow(u32),
    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),
}

/// Working precision in bits. Never below 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl Precision {
    pub const MIN_BITS: u32 = 64;
    pub const DEFAULT: Precision = Precision(256);

    pub fn new(bits: u32) -> Result<Self, NumericError> {
        if bits < Self::MIN_BITS {
            return Err(NumericError::PrecisionTooLow(bits));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Relative tolerance `10^-(bits/8)` used to decide numerical rank.
    pub fn kernel_tolerance(self) -> Float {
        pow10(self, -((self.0 / 8) as i32))
    }

    pub fn float<T>(self, value: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.0, value)
    }

    pub fn complex<T>(self, value: T) -> Complex
    where
        Complex: rug::Assign<T>,
    {
        Complex::with_val(self.0, value)
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.0, Constant::Pi)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<u32> for Precision {
    type Error = NumericError;
    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        Precision::new(bits)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `10^exp` at the given precision.
pub fn pow10(prec: Precision, exp: i32) -> Float {
    Float::with_val(prec.bits(), 10u32).pow(exp)
}

/// `e^{2 pi i t}` for a rational `t`.
pub fn root_of_unity(t: &Rational, prec: Precision) -> Complex {
    let mut angle = prec.pi() * 2u32;
    angle *= t;
    let (sin, cos) = angle.sin_cos(Float::new(prec.bits()));
    Complex::with_val(prec.bits(), (cos, sin))
}

pub fn rational_to_complex(r: &Rational, prec: Precision) -> Complex {
    Complex::with_val(prec.bits(), (Float::with_val(prec.bits(), r), 0))
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// Result of [`rational_reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub value: Rational,
    pub residual: Float,
}

/// Best rational approximation `p/q` with `q <= max_denominator`.
///
/// Uses the continued-fraction expansion of the exact binary value of `x`
/// and compares the last admissible convergent against the best
/// semiconvergent. Fails when `|x - p/q| > 1e-15 * max(1, |x|)`.
pub fn rational_reconstruct(x: &Float, max_denominator: &Integer) -> Result<Reconstruction, NumericError> {
    assert!(*max_denominator >= 1, "max_denominator must be at least 1");
    let exact = x
        .to_rational()
        .ok_or_else(|| NumericError::ReconstructionUncertain {
            residual: "non-finite input".into(),
            tolerance: "1e-15".into(),
        })?;
    let value = limit_denominator(&exact, max_denominator);

    let prec = x.prec().max(Precision::MIN_BITS);
    let residual = Float::with_val(prec, Rational::from(&exact - &value)).abs();
    let scale = Float::with_val(prec, x.abs_ref()).max(&Float::with_val(prec, 1));
    let tolerance = scale * Float::with_val(prec, 10u32).pow(-15i32);
    if residual > tolerance {
        return Err(NumericError::ReconstructionUncertain {
            residual: residual.to_string_radix(10, Some(6)),
            tolerance: tolerance.to_string_radix(10, Some(6)),
        });
    }
    Ok(Reconstruction { value, residual })
}

fn limit_denominator(x: &Rational, max_den: &Integer) -> Rational {
    if x.denom() <= max_den {
        return x.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (Integer::from(0), Integer::from(1), Integer::from(1), Integer::from(0));
    let mut n = x.numer().clone();
    let mut d = x.denom().clone();
    loop {
        let a = n.clone().div_floor(&d);
        let q2 = Integer::from(&q0 + &a * &q1);
        if q2 > *max_den {
            break;
        }
        let p2 = Integer::from(&p0 + &a * &p1);
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = Integer::from(&n - &a * &d);
        n = std::mem::replace(&mut d, r);
        if d == 0 {
            break;
        }
    }
    let k = Integer::from(max_den - &q0).div_floor(&q1);
    let semi = Rational::from((Integer::from(&p0 + &k * &p1), Integer::from(&q0 + &k * &q1)));
    let conv = Rational::from((p1, q1));
    let d_semi = Rational::from(&semi - x).abs();
    let d_conv = Rational::from(&conv - x).abs();
    if d_semi < d_conv {
        semi
    } else {
        conv
    }
}

/// Parses `p`, `-p`, `p/q` (q nonzero) into a canonical rational.
pub fn parse_rational(text: &str) -> Result<Rational, NumericError> {
    let err = || NumericError::InvalidRational(text.chars().take(64).collect());
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let numer = parse_integer(num).ok_or_else(err)?;
    let denom = match den {
        Some(d) => {
            let v = parse_integer(d).ok_or_else(err)?;
            if v.cmp0().is_le() || d.starts_with('+') {
                return Err(err());
            }
            v
        }
        None => Integer::from(1),
    };
    Ok(Rational::from((numer, denom)))
}

fn parse_integer(s: &str) -> Option<Integer> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || digits.len() > 4096 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Integer::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

/// Parses a comma-separated list of rationals, e.g. `1/16,1/2`.
pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>, NumericError> {
    if text.trim().is_empty() {
        return Err(NumericError::InvalidRational(String::new()));
    }
    text.split(',').map(parse_rational).collect()
}

pub fn binomial2(p: usize) -> Rational {
    Rational::from(p * p.saturating_sub(1) / 2)
}
