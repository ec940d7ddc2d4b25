//! Modular data of the rank-2 and rank-3 unitary fusion families.

use std::sync::OnceLock;

use rug::{Float, Integer, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{rational_reconstruct, root_of_unity, CMatrix, NumericError, Precision};
use crate::symbolic::Expr;

/// Precision of the numeric S rendering exported with the catalog.
pub const CATALOG_BITS: u32 = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("family {0} has no pair of conjugate objects with equal twists")]
    NotFoldable(String),
    #[error("central charge {c} is not positive and congruent to {c0} mod 8")]
    InadmissibleCharge { c: String, c0: String },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone)]
pub struct ModularDatum {
    pub label: String,
    /// Human-readable name of the representation category.
    pub name: String,
    pub rank: usize,
    s_text: Vec<String>,
    s_expr: Vec<Expr>,
    pub twists: Vec<Rational>,
    pub base_charge: Rational,
    pub self_dual: bool,
    pub fold_pair: Option<(usize, usize)>,
    /// Rank before folding, for data produced by [`ModularDatum::fold`].
    pub unfolded_rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    S,
    T,
}

impl ModularDatum {
    fn new(label: &str, name: &str, s: &[&[&str]], twists: &[(i64, i64)], c0: (i64, i64), fold_pair: Option<(usize, usize)>) -> Self {
        let rank = s.len();
        let s_text: Vec<String> = s.iter().flat_map(|row| row.iter().map(|e| e.to_string())).collect();
        let s_expr = s_text.iter().map(|t| Expr::parse(t).expect("catalog S entries parse")).collect();
        ModularDatum {
            label: label.into(),
            name: name.into(),
            rank,
            s_text,
            s_expr,
            twists: twists.iter().map(|&t| Rational::from(t)).collect(),
            base_charge: Rational::from(c0),
            self_dual: fold_pair.is_none(),
            fold_pair,
            unfolded_rank: None,
        }
    }

    /// Symbolic S entry `(i, j)` as written in the catalog.
    pub fn s_symbolic(&self, i: usize, j: usize) -> &str {
        &self.s_text[i * self.rank + j]
    }

    pub fn s_matrix(&self, prec: Precision) -> CMatrix {
        CMatrix::from_fn(self.rank, self.rank, |i, j| self.s_expr[i * self.rank + j].eval(prec))
    }

    /// Number of linearly independent characters (the basis size in the ell formula).
    pub fn basis_size(&self) -> usize {
        self.rank
    }

    pub fn is_folded(&self) -> bool {
        self.unfolded_rank.is_some()
    }

    /// Restricts a Z/3 datum to the span of `e_0` and `e_1 + e_2`.
    pub fn fold(&self) -> Result<ModularDatum, CatalogError> {
        let (a, b) = self.fold_pair.ok_or_else(|| CatalogError::NotFoldable(self.label.clone()))?;
        if self.twists[a] != self.twists[b] || self.rank != 3 {
            return Err(CatalogError::NotFoldable(self.label.clone()));
        }
        let s = |i: usize, j: usize| self.s_symbolic(i, j).to_string();
        let entries = [s(0, 0), format!("2*({})", s(0, a)), s(a, 0), format!("({}) + ({})", s(a, a), s(a, b))];
        let s_expr = entries.iter().map(|t| Expr::parse(t).expect("folded S entries parse")).collect();
        Ok(ModularDatum {
            label: self.label.clone(),
            name: self.name.clone(),
            rank: 2,
            s_text: entries.to_vec(),
            s_expr,
            twists: vec![self.twists[0].clone(), self.twists[a].clone()],
            base_charge: self.base_charge.clone(),
            self_dual: true,
            fold_pair: None,
            unfolded_rank: Some(self.rank),
        })
    }

    /// The datum actually fed to the pipeline: folded for Z/3 families.
    pub fn effective(&self) -> ModularDatum {
        if self.fold_pair.is_some() {
            self.fold().expect("catalog fold pairs have equal twists")
        } else {
            self.clone()
        }
    }

    pub fn admissible_charges(&self, cmax: &Rational) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut c = self.base_charge.clone();
        while c <= *cmax {
            out.push(c.clone());
            c += 8u32;
        }
        out
    }

    pub fn is_admissible(&self, c: &Rational) -> bool {
        let diff = Rational::from(c - &self.base_charge) / 8u32;
        c.cmp0().is_gt() && diff.is_integer()
    }

    /// The charge `c' in (0, 8]` with `exp(i pi c'/4) = G/|G|`, `G = sum d_i^2 theta_i`.
    pub fn gauss_sum_charge(&self) -> Result<Rational, CatalogError> {
        let prec = Precision::new(CATALOG_BITS)?;
        let s = self.s_matrix(prec);
        let mut g = prec.complex(0);
        for (i, t) in self.twists.iter().enumerate() {
            let d = rug::Complex::with_val(prec.bits(), &s[(0, i)] / &s[(0, 0)]);
            g += d.square() * root_of_unity(t, prec);
        }
        let arg = Float::with_val(prec.bits(), g.imag().atan2_ref(g.real()));
        let mut x = arg * 4u32 / prec.pi();
        if x.cmp0() != Some(std::cmp::Ordering::Greater) {
            x += 8u32;
        }
        let lcm = self.twists.iter().fold(Integer::from(1), |acc, t| acc.lcm(t.denom()));
        let charge = rational_reconstruct(&x, &Integer::from(lcm * 2u32))?;
        Ok(charge.value)
    }

    /// Exponent `s` with `rho(T)_{ii} = exp(2 pi i s)`, reduced into `[0, 1)`.
    pub fn t_exponent(&self, c: &Rational, i: usize) -> Rational {
        frac(&(Rational::from(&self.twists[i] - Rational::from(c / 24u32))))
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    let floor = x.clone().floor();
    Rational::from(x - floor)
}

#[derive(Debug, Clone)]
pub struct GenusSpec {
    pub datum: ModularDatum,
    pub c: Rational,
}

impl GenusSpec {
    pub fn new(datum: ModularDatum, c: Rational) -> Result<Self, CatalogError> {
        if !datum.is_admissible(&c) {
            return Err(CatalogError::InadmissibleCharge { c: c.to_string(), c0: datum.base_charge.to_string() });
        }
        Ok(GenusSpec { datum, c })
    }

    pub fn rank(&self) -> usize {
        self.datum.rank
    }

    pub fn rho(&self, generator: Generator, prec: Precision) -> CMatrix {
        match generator {
            Generator::S => self.datum.s_matrix(prec),
            Generator::T => {
                let d = self.datum.rank;
                CMatrix::from_fn(d, d, |i, j| if i == j { root_of_unity(&self.datum.t_exponent(&self.c, i), prec) } else { prec.complex(0) })
            }
        }
    }
}

fn build() -> Vec<ModularDatum> {
    let r2: &[&[&str]] = &[&["1/sqrt(2)", "1/sqrt(2)"], &["1/sqrt(2)", "-1/sqrt(2)"]];
    let fib: &[&[&str]] = &[&["1/sqrt(2 + phi)", "phi/sqrt(2 + phi)"], &["phi/sqrt(2 + phi)", "-1/sqrt(2 + phi)"]];
    let ising: &[&[&str]] = &[&["1/2", "sqrt(2)/2", "1/2"], &["sqrt(2)/2", "0", "-sqrt(2)/2"], &["1/2", "-sqrt(2)/2", "1/2"]];
    let su25: &[&[&str]] = &[
        &["2*sin(pi/7)/sqrt(7)", "2*sin(pi/7)/sqrt(7)*psi", "2*sin(pi/7)/sqrt(7)*(psi^2 - 1)"],
        &["2*sin(pi/7)/sqrt(7)*psi", "2*sin(pi/7)/sqrt(7)*(1 - psi^2)", "2*sin(pi/7)/sqrt(7)"],
        &["2*sin(pi/7)/sqrt(7)*(psi^2 - 1)", "2*sin(pi/7)/sqrt(7)", "-2*sin(pi/7)/sqrt(7)*psi"],
    ];
    let su3: &[&[&str]] = &[
        &["1/sqrt(3)", "1/sqrt(3)", "1/sqrt(3)"],
        &["1/sqrt(3)", "omega/sqrt(3)", "omega^2/sqrt(3)"],
        &["1/sqrt(3)", "omega^2/sqrt(3)", "omega/sqrt(3)"],
    ];
    let e6: &[&[&str]] = &[
        &["1/sqrt(3)", "1/sqrt(3)", "1/sqrt(3)"],
        &["1/sqrt(3)", "omega^2/sqrt(3)", "omega/sqrt(3)"],
        &["1/sqrt(3)", "omega/sqrt(3)", "omega^2/sqrt(3)"],
    ];

    let mut out = vec![
        ModularDatum::new("su2_1", "Rep(SU(2)_1)", r2, &[(0, 1), (1, 4)], (1, 1), None),
        ModularDatum::new("e7_1", "Rep(E_{7,1})", r2, &[(0, 1), (3, 4)], (7, 1), None),
        ModularDatum::new("g2_1", "Rep(G_{2,1})", fib, &[(0, 1), (2, 5)], (14, 5), None),
        ModularDatum::new("f4_1", "Rep(F_{4,1})", fib, &[(0, 1), (3, 5)], (26, 5), None),
        ModularDatum::new("ising", "Ising", ising, &[(0, 1), (1, 16), (1, 2)], (1, 2), None),
        ModularDatum::new("su2_2", "Rep(SU(2)_2)", ising, &[(0, 1), (3, 16), (1, 2)], (3, 2), None),
    ];
    for n in 2..=7i64 {
        let label = format!("b{n}_1");
        let name = format!("Rep(B_{{{n},1}})");
        out.push(ModularDatum::new(&label, &name, ising, &[(0, 1), (2 * n + 1, 16), (1, 2)], (2 * n + 1, 2), None));
    }
    out.push(ModularDatum::new("half_su2_5", "1/2 Rep(SU(2)_5)", su25, &[(0, 1), (1, 7), (5, 7)], (48, 7), None));
    out.push(ModularDatum::new("half_su2_5_bar", "conj(1/2 Rep(SU(2)_5))", su25, &[(0, 1), (6, 7), (2, 7)], (8, 7), None));
    out.push(ModularDatum::new("su3_1", "Rep(SU(3)_1)", su3, &[(0, 1), (1, 3), (1, 3)], (2, 1), Some((1, 2))));
    out.push(ModularDatum::new("e6_1", "Rep(E_{6,1})", e6, &[(0, 1), (2, 3), (2, 3)], (6, 1), Some((1, 2))));
    out
}

/// All sixteen families, in a fixed order.
pub fn catalog() -> &'static [ModularDatum] {
    static CATALOG: OnceLock<Vec<ModularDatum>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

pub fn lookup(label: &str) -> Result<&'static ModularDatum, CatalogError> {
    catalog().iter().find(|d| d.label == label).ok_or_else(|| CatalogError::UnknownFamily(label.to_string()))
}

#[derive(Debug, Serialize)]
pub struct SEntryExport {
    pub symbolic: String,
    pub re: String,
    pub im: String,
}

#[derive(Debug, Serialize)]
pub struct DatumExport {
    pub label: String,
    pub name: String,
    pub rank: usize,
    #[serde(rename = "S")]
    pub s: Vec<Vec<SEntryExport>>,
    pub twists: Vec<String>,
    pub c0: String,
    pub self_dual: bool,
    pub fold_pair: Option<(usize, usize)>,
}

fn decimal(x: &Float) -> String {
    if x.is_zero() {
        return "0".into();
    }
    x.to_string_radix(10, Some(60))
}

impl ModularDatum {
    pub fn export(&self) -> DatumExport {
        let prec = Precision::new(CATALOG_BITS).expect("catalog precision");
        let s = self.s_matrix(prec);
        let rows = (0..self.rank)
            .map(|i| {
                (0..self.rank)
                    .map(|j| {
                        let v = &s[(i, j)];
                        // clean rendering for entries that vanish identically
                        let tiny = |x: &Float| if Float::with_val(prec.bits(), x.abs_ref()) < 1e-80 { Float::new(prec.bits()) } else { x.clone() };
                        SEntryExport { symbolic: self.s_symbolic(i, j).to_string(), re: decimal(&tiny(v.real())), im: decimal(&tiny(v.imag())) }
                    })
                    .collect()
            })
            .collect();
        DatumExport {
            label: self.label.clone(),
            name: self.name.clone(),
            rank: self.rank,
            s: rows,
            twists: self.twists.iter().map(|t| t.to_string()).collect(),
            c0: self.base_charge.to_string(),
            self_dual: self.self_dual,
            fold_pair: self.fold_pair,
        }
    }
}

/// Catalog as a pretty-printed JSON document.
pub fn catalog_json() -> String {
    let entries: Vec<DatumExport> = catalog().iter().map(ModularDatum::export).collect();
    serde_json::to_string_pretty(&entries).expect("catalog serializes")
}
