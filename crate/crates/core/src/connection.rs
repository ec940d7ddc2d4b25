//! Residue matrices of the hypergeometric connection attached to an exponent.
//!
//! In the Hauptmodul coordinate the fundamental matrix satisfies
//! `dXi/dj = Xi (A/(2j) + B/(3(j - 1)))`. The local monodromies at the two
//! elliptic points have order 2 and 3, so `A` is idempotent and `B` has
//! spectrum in `{0, 1, 2}`. Together with `A/2 + B/3 = I - Lambda` this
//! reduces the search to small linear systems, and every solution is then
//! checked against the cubic constraint on `A`.

use rug::Rational;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{solve_rational, NumericError, RatMatrix};

pub const MAX_RANK: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectionError {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("1 + Lambda_{i}{i} - Lambda_{j}{j} vanishes")]
    ResonantExponents { i: usize, j: usize },
    #[error("no multiplicity datum yields a connection: {}", .attempts.join("; "))]
    NoSolution { attempts: Vec<String> },
}

/// How the residual diagonal freedom in `A` was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `A` is `0` or `I`; nothing to fix.
    Scalar,
    /// Every row of `A` equals the same vector `x`.
    RowVector,
    /// `A = I - 1 x^T`.
    CorankRowVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSolution {
    pub lambda: RatMatrix,
    pub a: RatMatrix,
    pub b: RatMatrix,
    pub chi: RatMatrix,
    pub rank_a: usize,
    /// Multiplicities of the eigenvalues 0, 1, 2 of `B`.
    pub b_multiplicities: [usize; 3],
    pub gauge: Gauge,
    /// Some component of the gauge vector vanishes, so an off-diagonal
    /// column of `chi` is zero and carries no gauge information.
    pub degenerate: bool,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// Polynomial in `mu`, lowest degree first.
fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

/// `prod_k (roots_k - mu)`.
fn from_roots<'a>(roots: impl IntoIterator<Item = &'a Rational>) -> Vec<Rational> {
    roots.into_iter().fold(vec![Rational::from(1)], |acc, r| poly_mul(&acc, &[r.clone(), Rational::from(-1)]))
}

fn check_exponent(lambda: &RatMatrix) -> Result<Vec<Rational>, ConnectionError> {
    let d = lambda.dim();
    if d == 0 || d > MAX_RANK {
        return Err(ConnectionError::InvalidExponent(format!("dimension {d} is outside 1..={MAX_RANK}")));
    }
    if !lambda.is_diagonal() {
        return Err(ConnectionError::InvalidExponent("exponent matrix is not diagonal".into()));
    }
    let diag = lambda.diag_entries();
    for i in 0..d {
        for j in i + 1..d {
            if diag[i] == diag[j] {
                return Err(ConnectionError::InvalidExponent(format!("repeated diagonal entry {}", diag[i])));
            }
        }
    }
    Ok(diag)
}

/// `chi_ij = 864 (31/36 (1 - Lambda) - A)_ij / (1 + Lambda_ii - Lambda_jj)`.
pub fn chi_from_a(lambda: &RatMatrix, a: &RatMatrix) -> Result<RatMatrix, ConnectionError> {
    let d = lambda.dim();
    let mut chi = RatMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let denom = Rational::from(1u32 + &lambda[(i, i)]) - &lambda[(j, j)];
            if denom.cmp0().is_eq() {
                return Err(ConnectionError::ResonantExponents { i, j });
            }
            let mut num = Rational::from(-&a[(i, j)]);
            if i == j {
                num += q(31, 36) * Rational::from(1u32 - &lambda[(i, i)]);
            }
            chi[(i, j)] = num * 864u32 / denom;
        }
    }
    Ok(chi)
}

/// `chi + [Lambda, chi]`.
pub fn twisted_chi(lambda: &RatMatrix, chi: &RatMatrix) -> RatMatrix {
    chi + &lambda.commutator(chi)
}

/// Left side minus right side of the cubic constraint on `A`.
pub fn verify_cubic(lambda: &RatMatrix, a: &RatMatrix) -> RatMatrix {
    let d = lambda.dim();
    let id = RatMatrix::identity(d);
    let l2 = lambda * lambda;
    let l3 = &l2 * lambda;
    let lhs = &(a * lambda) * a;
    let quad = &(&(a * &l2) + &(&(lambda * a) * lambda)) + &(&l2 * a);
    let lin = &(a * lambda) + &(lambda * a);
    let mut rhs = a.scale(&q(-17, 18));
    rhs = &rhs - &quad.scale(&q(2, 1));
    rhs = &rhs + &lin.scale(&q(3, 1));
    rhs = &rhs - &l3.scale(&q(4, 1));
    rhs = &rhs + &l2.scale(&q(8, 1));
    rhs = &rhs - &lambda.scale(&q(44, 9));
    rhs = &rhs + &id.scale(&q(8, 9));
    &lhs - &rhs
}

/// Exact checks every returned solution must pass. Returns the first failure.
pub fn check_solution(sol: &ConnectionSolution) -> Result<(), String> {
    let d = sol.lambda.dim();
    let id = RatMatrix::identity(d);
    let (a, b, lambda) = (&sol.a, &sol.b, &sol.lambda);
    if &(a * a) != a {
        return Err("A is not idempotent".into());
    }
    let b1 = b - &id;
    let b2 = b - &id.scale(&q(2, 1));
    if !(&(b * &b1) * &b2).is_zero() {
        return Err("B(B - I)(B - 2I) is nonzero".into());
    }
    if &(&a.scale(&q(1, 2)) + &b.scale(&q(1, 3))) != &(&id - lambda) {
        return Err("A/2 + B/3 differs from I - Lambda".into());
    }
    let k = twisted_chi(lambda, &sol.chi);
    let one_minus = &id - lambda;
    if &(&one_minus.scale(&q(31, 36)) - &k.scale(&q(1, 864))) != a {
        return Err("A does not match chi".into());
    }
    if &(&one_minus.scale(&q(41, 24)) + &k.scale(&q(1, 576))) != b {
        return Err("B does not match chi".into());
    }
    if !verify_cubic(lambda, a).is_zero() {
        return Err("cubic residual is nonzero".into());
    }
    Ok(())
}

/// Every connection compatible with the exponent, up to diagonal conjugation.
pub fn solve_connection(lambda: &RatMatrix) -> Result<Vec<ConnectionSolution>, ConnectionError> {
    let diag = check_exponent(lambda)?;
    let d = diag.len();
    let id = RatMatrix::identity(d);
    let target_trace = Rational::from(d as u64) - lambda.trace();
    let beta: Vec<Rational> = diag.iter().map(|l| Rational::from(1u32 - l) * 3u32).collect();

    let mut attempts = Vec::new();
    let mut out: Vec<ConnectionSolution> = Vec::new();
    for rank_a in 0..=d {
        for b0 in 0..=d {
            for b1 in 0..=d - b0 {
                let b2 = d - b0 - b1;
                let mult = [b0, b1, b2];
                if q(rank_a as i64, 2) + q((b1 + 2 * b2) as i64, 3) != target_trace {
                    continue;
                }
                let tag = format!("rank A = {rank_a}, B multiplicities {mult:?}");
                let built = match build_a(&diag, &beta, rank_a, mult) {
                    Ok(v) => v,
                    Err(reason) => {
                        attempts.push(format!("{tag}: {reason}"));
                        continue;
                    }
                };
                let (a, gauge, degenerate) = built;
                let b = &id.scale(&q(3, 1)) - &(&lambda.scale(&q(3, 1)) + &a.scale(&q(3, 2)));
                let chi = chi_from_a(lambda, &a)?;
                let sol = ConnectionSolution { lambda: lambda.clone(), a, b, chi, rank_a, b_multiplicities: mult, gauge, degenerate };
                if let Err(reason) = check_solution(&sol) {
                    attempts.push(format!("{tag}: {reason}"));
                    continue;
                }
                if let Err(reason) = check_spectrum(&sol) {
                    attempts.push(format!("{tag}: {reason}"));
                    continue;
                }
                if !out.iter().any(|s| s.a == sol.a) {
                    out.push(sol);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ConnectionError::NoSolution { attempts });
    }
    Ok(out)
}

fn check_spectrum(sol: &ConnectionSolution) -> Result<(), String> {
    let d = sol.lambda.dim();
    if sol.a.trace() != sol.rank_a as u64 || sol.a.rank() != sol.rank_a {
        return Err("rank of A differs from the requested rank".into());
    }
    let id = RatMatrix::identity(d);
    for (nu, &m) in sol.b_multiplicities.iter().enumerate() {
        // B is diagonalizable here, so geometric multiplicity is the full one
        let shifted = &sol.b - &id.scale(&Rational::from(nu as u64));
        if d - shifted.rank() != m {
            return Err(format!("eigenvalue {nu} of B has the wrong multiplicity"));
        }
    }
    Ok(())
}

fn build_a(diag: &[Rational], beta: &[Rational], rank_a: usize, mult: [usize; 3]) -> Result<(RatMatrix, Gauge, bool), String> {
    let d = diag.len();
    if rank_a == 0 {
        return Ok((RatMatrix::zeros(d), Gauge::Scalar, false));
    }
    if rank_a == d {
        return Ok((RatMatrix::identity(d), Gauge::Scalar, false));
    }
    let (gauge, sign, roots): (Gauge, i64, Vec<Rational>) = if rank_a == 1 {
        (Gauge::RowVector, 1, beta.to_vec())
    } else if rank_a + 1 == d {
        (Gauge::CorankRowVector, -1, beta.iter().map(|b| Rational::from(b - q(3, 2))).collect())
    } else {
        return Err("idempotents of this rank are not parametrized".into());
    };

    // det(B - mu) = prod(r_k - mu) - sign * 3/2 * sum_j x_j prod_{k != j}(r_k - mu)
    let target = (0..3).fold(vec![Rational::from(1)], |acc, nu| {
        (0..mult[nu]).fold(acc, |p, _| poly_mul(&p, &[Rational::from(nu as u64), Rational::from(-1)]))
    });
    let base = from_roots(&roots);
    let partials: Vec<Vec<Rational>> = (0..d).map(|j| from_roots(roots.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, r)| r))).collect();
    let coeff = q(-3 * sign, 2);
    let system = RatMatrix::from_fn(d, |e, j| Rational::from(&coeff * &partials[j][e]));
    let rhs: Vec<Rational> = (0..d).map(|e| Rational::from(&target[e] - &base[e])).collect();
    let x = match solve_rational(&system, &rhs) {
        Ok(x) => x,
        Err(NumericError::SingularMatrix { pivot }) => return Err(format!("singular coefficient system at pivot {pivot}")),
        Err(e) => return Err(e.to_string()),
    };
    let degenerate = x.iter().any(|v| v.cmp0().is_eq());
    let a = match gauge {
        Gauge::RowVector => RatMatrix::from_fn(d, |_, j| x[j].clone()),
        _ => RatMatrix::from_fn(d, |i, j| Rational::from(u32::from(i == j)) - &x[j]),
    };
    Ok((a, gauge, degenerate))
}
