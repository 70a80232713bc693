//! Sparse multivariate polynomials over a [`FieldSpec`].
//!
//! Polynomials are formal: exponents are never reduced modulo `q - 1`, so
//! `x^p` and `x` are different polynomials even though they agree as
//! functions. Use [`MultiPoly::functionally_equal`] for the latter question.

mod parse;

pub use parse::{parse_poly, parse_poly_with_cap};

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec, TowerEmbedding};
use crate::linalg::Matrix;

/// Default bound on total degree accepted by the parser.
pub const DEFAULT_DEGREE_CAP: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("coefficient `{0}` is not in the field")]
    CoefficientNotInField(String),
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("total degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("evaluation domain of {0} points exceeds the budget")]
    BudgetExceeded(u128),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn new(exponents: Vec<u16>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total degree and homogeneity; `degree` is `None` for the zero polynomial,
/// which counts as homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeInfo {
    pub degree: Option<u32>,
    pub homogeneous: bool,
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    field: FieldSpec,
    nvars: usize,
    terms: BTreeMap<Monomial, u32>,
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[F_{}; {} vars]({})", self.field, self.nvars, self)
    }
}

impl MultiPoly {
    pub fn zero(field: &FieldSpec, nvars: usize) -> Self {
        MultiPoly {
            field: field.clone(),
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: &FieldSpec, nvars: usize, c: FieldElement) -> Result<Self, PolyError> {
        field.check(c)?;
        let mut p = Self::zero(field, nvars);
        p.add_term_raw(Monomial::one(nvars), c.index());
        Ok(p)
    }

    /// The coordinate function `x_{i+1}` (0-based `i`).
    pub fn variable(field: &FieldSpec, nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0u16; nvars];
        e[i] = 1;
        let mut p = Self::zero(field, nvars);
        p.add_term_raw(Monomial(e), 1);
        p
    }

    /// Linear form `sum_i coeffs[i] * x_{i+1}`.
    pub fn linear_form(field: &FieldSpec, coeffs: &[FieldElement]) -> Result<Self, PolyError> {
        for &c in coeffs {
            field.check(c)?;
        }
        let raw: Vec<u32> = coeffs.iter().map(|c| c.index()).collect();
        Ok(Self::linear_form_raw(field, &raw))
    }

    pub(crate) fn linear_form_raw(field: &FieldSpec, coeffs: &[u32]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(field, n);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0u16; n];
            e[i] = 1;
            p.add_term_raw(Monomial(e), c);
        }
        p
    }

    pub fn from_terms<I>(field: &FieldSpec, nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u16>, FieldElement)>,
    {
        let mut p = Self::zero(field, nvars);
        for (e, c) in terms {
            field.check(c)?;
            if e.len() != nvars {
                return Err(PolyError::ArityMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term_raw(Monomial(e), c.index());
        }
        Ok(p)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, FieldElement)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, self.field.wrap(c)))
    }

    pub(crate) fn terms_raw(&self) -> impl Iterator<Item = (&Monomial, u32)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, exponents: &[u16]) -> FieldElement {
        let c = self
            .terms
            .get(&Monomial(exponents.to_vec()))
            .copied()
            .unwrap_or(0);
        self.field.wrap(c)
    }

    pub(crate) fn add_term_raw(&mut self, m: Monomial, c: u32) {
        if c == 0 {
            return;
        }
        let fs = self.field.clone();
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = fs.add_raw(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_check(&self) -> DegreeInfo {
        let degree = self.total_degree();
        let homogeneous = self
            .terms
            .keys()
            .all(|m| Some(m.degree()) == degree);
        DegreeInfo {
            degree,
            homogeneous,
        }
    }

    /// Whether variable `i` (0-based) occurs in some term.
    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] > 0)
    }

    /// Sum of the terms of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> MultiPoly {
        let mut out = Self::zero(&self.field, self.nvars);
        for (m, &c) in &self.terms {
            if m.degree() == d {
                out.terms.insert(m.clone(), c);
            }
        }
        out
    }

    fn compatible(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch.into());
        }
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                got: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term_raw(m.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term_raw(m.clone(), self.field.neg_raw(c));
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let fs = &self.field;
        let mut out = Self::zero(fs, self.nvars);
        for (m1, &c1) in &self.terms {
            for (m2, &c2) in &other.terms {
                out.add_term_raw(m1.mul(m2), fs.mul_raw(c1, c2));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: FieldElement) -> Result<MultiPoly, PolyError> {
        self.field.check(c)?;
        Ok(self.scale_raw(c.index()))
    }

    pub(crate) fn scale_raw(&self, c: u32) -> MultiPoly {
        let mut out = Self::zero(&self.field, self.nvars);
        if c == 0 {
            return out;
        }
        for (m, &v) in &self.terms {
            out.terms.insert(m.clone(), self.field.mul_raw(v, c));
        }
        out
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut acc = Self::constant(&self.field, self.nvars, self.field.one()).unwrap();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub(crate) fn evaluate_raw(&self, point: &[u32]) -> u32 {
        let fs = &self.field;
        let mut acc = 0;
        for (m, &c) in &self.terms {
            let mut t = c;
            for (&x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t = fs.mul_raw(t, fs.pow_raw(x, e as u64));
                }
            }
            acc = fs.add_raw(acc, t);
        }
        acc
    }

    /// `P(v)`. With an embedding the point lives in the top field and the
    /// coefficients are embedded first.
    pub fn evaluate(
        &self,
        point: &[FieldElement],
        emb: Option<&TowerEmbedding>,
    ) -> Result<FieldElement, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        match emb {
            None => {
                for &x in point {
                    self.field.check(x)?;
                }
                let raw: Vec<u32> = point.iter().map(|x| x.index()).collect();
                Ok(self.field.wrap(self.evaluate_raw(&raw)))
            }
            Some(emb) => {
                if emb.base() != &self.field {
                    return Err(FieldError::FieldMismatch.into());
                }
                self.base_change(emb)?.evaluate(point, None)
            }
        }
    }

    /// Substitute `x_{i+1} = c` and renumber the remaining variables.
    pub fn specialize(&self, i: usize, c: FieldElement) -> Result<MultiPoly, PolyError> {
        if i >= self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                got: i + 1,
            });
        }
        self.field.check(c)?;
        Ok(self.specialize_raw(i, c.index()))
    }

    pub(crate) fn specialize_raw(&self, i: usize, c: u32) -> MultiPoly {
        let fs = &self.field;
        let mut out = Self::zero(fs, self.nvars - 1);
        for (m, &v) in &self.terms {
            let e = m.0[i];
            let coeff = if e == 0 {
                v
            } else {
                fs.mul_raw(v, fs.pow_raw(c, e as u64))
            };
            let mut rest = m.0.clone();
            rest.remove(i);
            out.add_term_raw(Monomial(rest), coeff);
        }
        out
    }

    /// `Q(w) = P(A w)` for an `N x M` matrix `A`; `Q` has `M` variables.
    pub fn linear_substitute(&self, a: &Matrix) -> Result<MultiPoly, PolyError> {
        let shift = vec![self.field.zero(); self.nvars];
        self.affine_substitute(a, &shift)
    }

    /// `Q(w) = P(A w + shift)`.
    pub fn affine_substitute(
        &self,
        a: &Matrix,
        shift: &[FieldElement],
    ) -> Result<MultiPoly, PolyError> {
        if a.field() != &self.field {
            return Err(FieldError::FieldMismatch.into());
        }
        if a.rows() != self.nvars || shift.len() != self.nvars {
            return Err(PolyError::ShapeMismatch(format!(
                "substitution matrix is {}x{} with shift of length {}, polynomial has {} variables",
                a.rows(),
                a.cols(),
                shift.len(),
                self.nvars
            )));
        }
        for &s in shift {
            self.field.check(s)?;
        }
        let raw_shift: Vec<u32> = shift.iter().map(|s| s.index()).collect();
        Ok(self.affine_substitute_raw(a, &raw_shift))
    }

    pub(crate) fn affine_substitute_raw(&self, a: &Matrix, shift: &[u32]) -> MultiPoly {
        let fs = &self.field;
        let m = a.cols();
        let images: Vec<MultiPoly> = (0..self.nvars)
            .map(|i| {
                let mut l = Self::linear_form_raw(fs, a.row_raw(i));
                l.add_term_raw(Monomial::one(m), shift[i]);
                l
            })
            .collect();
        let mut powers: HashMap<(usize, u16), MultiPoly> = HashMap::new();
        let mut out = Self::zero(fs, m);
        for (mono, &c) in &self.terms {
            let mut t = Self::zero(fs, m);
            t.add_term_raw(Monomial::one(m), c);
            for (i, &e) in mono.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = powers
                    .entry((i, e))
                    .or_insert_with(|| images[i].pow(e as u32));
                t = &t * pw;
                if t.is_zero() {
                    break;
                }
            }
            for (tm, &tc) in &t.terms {
                out.add_term_raw(tm.clone(), tc);
            }
        }
        out
    }

    /// Same polynomial with coefficients mapped into the top field.
    pub fn base_change(&self, emb: &TowerEmbedding) -> Result<MultiPoly, PolyError> {
        if emb.base() != &self.field {
            return Err(FieldError::FieldMismatch.into());
        }
        let mut out = Self::zero(emb.top(), self.nvars);
        for (m, &c) in &self.terms {
            out.terms.insert(m.clone(), emb.embed_raw(c));
        }
        Ok(out)
    }

    /// Re-embed into `nvars` variables (at least the current count); new
    /// variables do not occur.
    pub fn with_nvars(&self, nvars: usize) -> Result<MultiPoly, PolyError> {
        if nvars < self.nvars
            && (nvars..self.nvars).any(|i| self.depends_on(i)) {
                return Err(PolyError::ArityMismatch {
                    expected: self.nvars,
                    got: nvars,
                });
            }
        let mut out = Self::zero(&self.field, nvars);
        for (m, &c) in &self.terms {
            let mut e = m.0.clone();
            e.resize(nvars, 0);
            out.terms.insert(Monomial(e), c);
        }
        Ok(out)
    }

    /// Exhaustive comparison as functions on `k^N`, within `budget` points.
    pub fn functionally_equal(&self, other: &MultiPoly, budget: u128) -> Result<bool, PolyError> {
        self.compatible(other)?;
        let q = self.field.q() as u128;
        let size = q.checked_pow(self.nvars as u32).unwrap_or(u128::MAX);
        if size > budget {
            return Err(PolyError::BudgetExceeded(size));
        }
        let diff = self.checked_sub(other)?;
        if diff.is_zero() {
            return Ok(true);
        }
        let mut point = vec![0u32; self.nvars];
        loop {
            if diff.evaluate_raw(&point) != 0 {
                return Ok(false);
            }
            if !odometer_step(&mut point, self.field.q()) {
                return Ok(true);
            }
        }
    }
}

/// Advance a point in odometer order (first coordinate fastest); false after
/// the last point.
pub(crate) fn odometer_step(point: &mut [u32], q: u32) -> bool {
    for x in point.iter_mut() {
        *x += 1;
        if *x < q {
            return true;
        }
        *x = 0;
    }
    false
}

impl std::ops::Add for &MultiPoly {
    type Output = MultiPoly;

    /// Panics on field or arity mismatch; see [`MultiPoly::checked_add`].
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(rhs).expect("incompatible polynomials")
    }
}

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;

    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_sub(rhs).expect("incompatible polynomials")
    }
}

impl std::ops::Mul for &MultiPoly {
    type Output = MultiPoly;

    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_mul(rhs).expect("incompatible polynomials")
    }
}

pub(crate) fn format_coefficient(fs: &FieldSpec, c: u32) -> String {
    if c < fs.p() {
        c.to_string()
    } else {
        let digits = fs.coeffs(fs.wrap(c));
        let body: Vec<String> = digits.iter().map(u32::to_string).collect();
        format!("[{}]", body.join(","))
    }
}

impl fmt::Display for MultiPoly {
    /// Canonical text form accepted by [`parse_poly`]: terms in descending
    /// graded-lex order, non-prime coefficients as `[c0,c1,..]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, &c) in self.terms.iter().rev() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let mut factors = Vec::new();
            if c != 1 || m.degree() == 0 {
                factors.push(format_coefficient(&self.field, c));
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}
