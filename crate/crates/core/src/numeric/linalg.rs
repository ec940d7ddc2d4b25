use std::fmt;
use std::ops::{Add, Mul, Sub};

use rug::ops::Pow;
use rug::{Complex, Float, Rational};

use super::{abs, rational_to_complex, NumericError, Precision};

/// Square matrix of exact rationals, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    dim: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(dim: usize) -> Self {
        RatMatrix { dim, data: vec![Rational::new(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![Rational::from(1); dim])
    }

    pub fn diagonal(entries: &[Rational]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, NumericError> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(NumericError::Shape(format!("expected {dim} columns in every row")));
        }
        Ok(RatMatrix { dim, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let data = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        RatMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact rank by row reduction.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows();
        let mut rank = 0;
        for col in 0..self.dim {
            let Some(p) = (rank..self.dim).find(|&r| rows[r][col].cmp0().is_ne()) else { continue };
            rows.swap(rank, p);
            for r in 0..self.dim {
                if r != rank && rows[r][col].cmp0().is_ne() {
                    let f = Rational::from(&rows[r][col] / &rows[rank][col]);
                    for c in col..self.dim {
                        let t = Rational::from(&f * &rows[rank][c]);
                        rows[r][c] -= t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).take(self.dim).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.cmp0().is_eq())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)].cmp0().is_eq()))
    }

    pub fn trace(&self) -> Rational {
        (0..self.dim).fold(Rational::new(), |acc, i| acc + &self[(i, i)])
    }

    pub fn diag_entries(&self) -> Vec<Rational> {
        (0..self.dim).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        RatMatrix { dim: self.dim, data: self.data.iter().map(|x| Rational::from(x * k)).collect() }
    }

    /// `[self, other] = self * other - other * self`.
    pub fn commutator(&self, other: &RatMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    /// Conjugation by `diag(r)`: entry `(i, j)` becomes `r_i / r_j * m_ij`.
    pub fn diagonal_conjugate(&self, r: &[Rational]) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    let ratio = Rational::from(&r[i] / &r[j]);
                    out[(i, j)] *= ratio;
                }
            }
        }
        out
    }

    pub fn to_complex(&self, prec: Precision) -> CMatrix {
        CMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.iter().map(|x| rational_to_complex(x, prec)).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &RatMatrix {
    type Output = RatMatrix;
    fn mul(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = RatMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = &self[(i, k)];
                if a.cmp0().is_eq() {
                    continue;
                }
                for j in 0..d {
                    let t = Rational::from(a * &rhs[(k, j)]);
                    out[(i, j)] += t;
                }
            }
        }
        out
    }
}

impl Add for &RatMatrix {
    type Output = RatMatrix;
    fn add(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        RatMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| Rational::from(a + b)).collect(),
        }
    }
}

impl Sub for &RatMatrix {
    type Output = RatMatrix;
    fn sub(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        RatMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| Rational::from(a - b)).collect(),
        }
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>())).finish()
    }
}

/// Dense complex matrix at a fixed working precision.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: Precision) -> Self {
        CMatrix { rows, cols, data: vec![Complex::new(prec.bits()); rows * cols] }
    }

    pub fn identity(dim: usize, prec: Precision) -> Self {
        let mut m = Self::zeros(dim, dim, prec);
        for i in 0..dim {
            m[(i, i)] = prec.complex(1);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn prec(&self) -> u32 {
        self.data.first().map_or(Precision::MIN_BITS, |z| z.prec().0)
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> Float {
        let mut best = Float::new(self.prec());
        for z in &self.data {
            let a = abs(z);
            if a > best {
                best = a;
            }
        }
        best
    }

    pub fn scale(&self, k: &Complex) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| Complex::with_val(z.prec(), z * k)).collect() }
    }

    pub fn pow(&self, mut n: u32) -> CMatrix {
        assert_eq!(self.rows, self.cols);
        let prec = Precision::new(self.prec()).unwrap_or_default();
        let mut acc = CMatrix::identity(self.rows, prec);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn trace(&self) -> Complex {
        let mut t = Complex::new(self.prec());
        for i in 0..self.rows.min(self.cols) {
            t += &self[(i, i)];
        }
        t
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone().conj())
    }

    /// Inverse of a small square matrix by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<CMatrix, NumericError> {
        assert_eq!(self.rows, self.cols);
        let prec = Precision::new(self.prec()).unwrap_or_default();
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let e: Vec<Complex> = (0..n).map(|i| prec.complex(u32::from(i == j))).collect();
            cols.push(solve_complex(self, &e, prec)?);
        }
        Ok(CMatrix::from_fn(n, n, |i, j| cols[j][i].clone()))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let prec = self.prec().max(rhs.prec());
        CMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Complex::new(prec);
            for k in 0..self.cols {
                acc += &self[(i, k)] * &rhs[(k, j)];
            }
            acc
        })
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "dimension mismatch");
        let prec = self.prec().max(rhs.prec());
        CMatrix::from_fn(self.rows, self.cols, |i, j| Complex::with_val(prec, &self[(i, j)] - &rhs[(i, j)]))
    }
}

fn check_square(rows: usize, cols: usize, b_len: usize) -> Result<(), NumericError> {
    if rows != cols || b_len != rows {
        return Err(NumericError::Shape(format!("{rows}x{cols} system with right-hand side of length {b_len}")));
    }
    if rows > 4 {
        return Err(NumericError::Shape(format!("dimension {rows} exceeds the supported maximum of 4")));
    }
    Ok(())
}

/// Exact Gaussian elimination over the rationals.
pub fn solve_rational(m: &RatMatrix, b: &[Rational]) -> Result<Vec<Rational>, NumericError> {
    let n = m.dim();
    check_square(n, n, b.len())?;
    let mut a: Vec<Vec<Rational>> = m.rows();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col].cmp0().is_ne()).ok_or(NumericError::SingularMatrix { pivot: col })?;
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r == col || a[r][col].cmp0().is_eq() {
                continue;
            }
            let factor = Rational::from(&a[r][col] / &a[col][col]);
            for c in col..n {
                let t = Rational::from(&factor * &a[col][c]);
                a[r][c] -= t;
            }
            let t = Rational::from(&factor * &rhs[col]);
            rhs[r] -= t;
        }
    }
    Ok((0..n).map(|i| Rational::from(&rhs[i] / &a[i][i])).collect())
}

/// Gaussian elimination with partial pivoting at working precision. A pivot
/// smaller than `kernel_tolerance * max|m|` counts as singular.
pub fn solve_complex(m: &CMatrix, b: &[Complex], prec: Precision) -> Result<Vec<Complex>, NumericError> {
    let n = m.rows();
    check_square(n, m.cols(), b.len())?;
    let threshold = prec.kernel_tolerance() * m.max_abs();
    let mut a: Vec<Vec<Complex>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| abs(&a[x][col]).partial_cmp(&abs(&a[y][col])).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if abs(&a[pivot][col]) <= threshold {
            return Err(NumericError::SingularMatrix { pivot: col });
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let factor = Complex::with_val(prec.bits(), &a[r][col] / &a[col][col]);
            for c in col..n {
                let t = Complex::with_val(prec.bits(), &factor * &a[col][c]);
                a[r][c] -= t;
            }
            let t = Complex::with_val(prec.bits(), &factor * &rhs[col]);
            rhs[r] -= t;
        }
    }
    let mut x = vec![Complex::new(prec.bits()); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i].clone();
        for j in i + 1..n {
            acc -= &a[i][j] * &x[j];
        }
        x[i] = Complex::with_val(prec.bits(), &acc / &a[i][i]);
    }
    Ok(x)
}

/// Orthonormal basis of the numerical kernel of `m`.
///
/// One-sided (Hestenes) Jacobi: columns of `m` are rotated until mutually
/// orthogonal, the same rotations are accumulated into a unitary `V`. The
/// column norms are then the singular values, and the columns of `V`
/// belonging to singular values at most `kernel_tolerance * sigma_max` span
/// the kernel.
pub fn nullspace(m: &CMatrix, prec: Precision) -> Vec<Vec<Complex>> {
    let (rows, n) = (m.rows(), m.cols());
    let bits = prec.bits();
    let mut a: Vec<Vec<Complex>> = (0..n).map(|j| (0..rows).map(|i| Complex::with_val(bits, &m[(i, j)])).collect()).collect();
    let mut v: Vec<Vec<Complex>> = (0..n).map(|j| (0..n).map(|i| prec.complex(u32::from(i == j))).collect()).collect();
    let eps = Float::with_val(bits, 2u32).pow(-(bits as i32) + 8);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm_sq(&a[p], bits);
                let beta = norm_sq(&a[q], bits);
                let gamma = inner(&a[p], &a[q], bits);
                let g = abs(&gamma);
                let scale = Float::with_val(bits, &alpha * &beta).sqrt();
                if g.is_zero() || g <= Float::with_val(bits, &eps * &scale) {
                    continue;
                }
                rotated = true;
                // Rotate a_q by the phase of gamma so the 2x2 Gram block is real.
                let phase = Complex::with_val(bits, &gamma / &g).conj();
                let zeta = Float::with_val(bits, &beta - &alpha) / (Float::with_val(bits, &g) * 2u32);
                let root = (Float::with_val(bits, zeta.square_ref()) + 1u32).sqrt();
                let mut t = Float::with_val(bits, 1u32) / (Float::with_val(bits, zeta.abs_ref()) + root);
                if zeta.is_sign_negative() {
                    t = -t;
                }
                let c = Float::with_val(bits, 1u32) / (Float::with_val(bits, t.square_ref()) + 1u32).sqrt();
                let s = Float::with_val(bits, &c * &t);
                rotate(&mut a, p, q, &phase, &c, &s, bits);
                rotate(&mut v, p, q, &phase, &c, &s, bits);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigmas: Vec<Float> = a.iter().map(|col| norm_sq(col, bits).sqrt()).collect();
    let sigma_max = sigmas.iter().fold(Float::new(bits), |acc, s| if *s > acc { s.clone() } else { acc });
    let threshold = prec.kernel_tolerance() * sigma_max;
    let mut basis: Vec<Vec<Complex>> = Vec::new();
    for (j, s) in sigmas.iter().enumerate() {
        if *s <= threshold {
            basis.push(v[j].clone());
        }
    }
    basis
}

fn norm_sq(x: &[Complex], bits: u32) -> Float {
    x.iter().fold(Float::new(bits), |acc, z| acc + Float::with_val(bits, z.norm_ref()))
}

/// `x^H y`.
fn inner(x: &[Complex], y: &[Complex], bits: u32) -> Complex {
    let mut acc = Complex::new(bits);
    for (a, b) in x.iter().zip(y) {
        acc += Complex::with_val(bits, a.conj_ref()) * b;
    }
    acc
}

fn rotate(cols: &mut [Vec<Complex>], p: usize, q: usize, phase: &Complex, c: &Float, s: &Float, bits: u32) {
    // a_p' = c a_p - s (phase a_q),  a_q' = s a_p + c (phase a_q)
    for k in 0..cols[p].len() {
        let ap = cols[p][k].clone();
        let aq = Complex::with_val(bits, &cols[q][k] * phase);
        cols[p][k] = Complex::with_val(bits, &ap * c) - Complex::with_val(bits, &aq * s);
        cols[q][k] = Complex::with_val(bits, &ap * s) + Complex::with_val(bits, &aq * c);
    }
}
