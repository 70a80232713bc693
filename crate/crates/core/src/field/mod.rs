//! Finite fields `F_q`, `q = p^m` with `p` odd, in a power basis over the
//! prime field, plus tower embeddings `k -> k_n` with their traces.
//!
//! Elements are identified with their index in the canonical enumeration
//! order: the coefficient vector `(c0, .., c_{m-1})` read as base-`p` digits
//! with `c0` least significant. Index 0 is zero, index 1 is one and the prime
//! subfield occupies indices `0..p`.
//!
//! The additive character is fixed as `psi(x) = zeta_p^{tr(x)}` with `tr` the
//! absolute trace, so every character sum over every tower level is a count
//! vector indexed by `F_p` (see [`FieldSpec::character_class`]).

mod modpoly;
mod tower;

pub use tower::{build_tower, trace_to_prime, TowerEmbedding};

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use thiserror::Error;

/// Largest field order for which tables are built.
pub const MAX_FIELD_ORDER: u64 = 1 << 21;

const ADD_TABLE_LIMIT: u32 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("modulus is reducible over F_{0}")]
    ReducibleModulus(u32),
    #[error("modulus must be monic of degree {0} with coefficients below p")]
    MalformedModulus(u32),
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error("field order {0} exceeds the supported maximum")]
    FieldTooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("element index {0} out of range")]
    IndexOutOfRange(u64),
    #[error("invalid field descriptor `{0}`")]
    BadDescriptor(String),
}

struct FieldInner {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    tag: u64,
    /// exp[i] = g^i for a fixed primitive g, doubled to skip a reduction.
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    class: Vec<u32>,
    add_table: Option<Vec<u16>>,
    nonsquare: u32,
}

/// An explicit finite field `F_{p^m}`. Cheap to clone.
#[derive(Clone)]
pub struct FieldSpec(Arc<FieldInner>);

/// An element of a specific [`FieldSpec`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    tag: u64,
    value: u32,
}

impl FieldElement {
    /// Index in the field's enumeration order.
    pub fn index(&self) -> u32 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.value)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.m == other.0.m && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}[modulus {:?}]", self.descriptor(), self.0.modulus)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Binary operations for [`element_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Unary operations for [`element_arith_unary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Inv,
    Pow(i64),
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

static DEFAULT_FIELDS: Lazy<Mutex<HashMap<(u32, u32), FieldSpec>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Builds `F_{p^m}`. Without a modulus the lexicographically smallest monic
/// irreducible of degree `m` is used (coefficients compared constant term
/// first), so the field is reproducible from `(p, m)` alone.
///
/// `modulus` lists coefficients constant term first and must be monic of
/// degree `m` (length `m + 1`, last entry 1).
pub fn build_field(p: u32, m: u32, modulus: Option<&[u32]>) -> Result<FieldSpec, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if p == 2 {
        return Err(FieldError::EvenCharacteristic);
    }
    if m == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let q = (p as u64)
        .checked_pow(m)
        .filter(|&q| q <= MAX_FIELD_ORDER)
        .ok_or(FieldError::FieldTooLarge((p as u64).saturating_pow(m)))?;
    let modulus = match modulus {
        Some(f) => {
            if f.len() != m as usize + 1 || f[m as usize] != 1 || f.iter().any(|&c| c >= p) {
                return Err(FieldError::MalformedModulus(m));
            }
            if !modpoly::is_irreducible(f, p) {
                return Err(FieldError::ReducibleModulus(p));
            }
            f.to_vec()
        }
        None => {
            if let Some(fs) = DEFAULT_FIELDS.lock().unwrap().get(&(p, m)) {
                return Ok(fs.clone());
            }
            let fs = FieldSpec(Arc::new(FieldInner::new(
                p,
                m,
                q as u32,
                modpoly::smallest_irreducible(p, m),
            )));
            DEFAULT_FIELDS.lock().unwrap().insert((p, m), fs.clone());
            return Ok(fs);
        }
    };
    Ok(FieldSpec(Arc::new(FieldInner::new(p, m, q as u32, modulus))))
}

/// Parses a field descriptor `p`, `p^m` or `p^m:c0,c1,..` (custom modulus,
/// constant term first; the leading 1 may be omitted).
pub fn parse_field_descriptor(text: &str) -> Result<FieldSpec, FieldError> {
    let bad = || FieldError::BadDescriptor(text.to_string());
    let (head, modulus) = match text.split_once(':') {
        Some((h, m)) => (h.trim(), Some(m.trim())),
        None => (text.trim(), None),
    };
    let (p, m) = match head.split_once('^') {
        Some((p, m)) => (
            p.trim().parse::<u32>().map_err(|_| bad())?,
            m.trim().parse::<u32>().map_err(|_| bad())?,
        ),
        None => (head.parse::<u32>().map_err(|_| bad())?, 1),
    };
    match modulus {
        None => build_field(p, m, None),
        Some(list) => {
            let mut coeffs = list
                .split(',')
                .map(|c| c.trim().parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            if coeffs.len() == m as usize {
                coeffs.push(1);
            }
            build_field(p, m, Some(&coeffs))
        }
    }
}

impl FieldInner {
    fn new(p: u32, m: u32, q: u32, modulus: Vec<u32>) -> Self {
        let mut hasher = DefaultHasher::new();
        (p, m, &modulus).hash(&mut hasher);
        let tag = hasher.finish();

        let digits = |mut x: u32| -> Vec<u32> {
            (0..m)
                .map(|_| {
                    let d = x % p;
                    x /= p;
                    d
                })
                .collect()
        };
        let undigits = |d: &[u32]| -> u32 { d.iter().rev().fold(0, |acc, &c| acc * p + c) };
        // schoolbook product reduced by the modulus, only used while
        // building tables
        let slow_mul = |a: &[u32], b: &[u32]| -> Vec<u32> {
            let mm = m as usize;
            let mut prod = vec![0u64; 2 * mm - 1];
            for i in 0..mm {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..mm {
                    prod[i + j] += a[i] as u64 * b[j] as u64;
                }
            }
            let p64 = p as u64;
            for k in (mm..2 * mm - 1).rev() {
                let c = prod[k] % p64;
                if c != 0 {
                    for (i, &f) in modulus[..mm].iter().enumerate() {
                        prod[k - mm + i] += c * (p64 - f as u64);
                    }
                }
                prod[k] = 0;
            }
            prod[..mm].iter().map(|&c| (c % p64) as u32).collect()
        };

        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let pow_digits = |base: &[u32], mut e: u64| -> Vec<u32> {
            let mut acc = digits(1);
            let mut b = base.to_vec();
            while e > 0 {
                if e & 1 == 1 {
                    acc = slow_mul(&acc, &b);
                }
                b = slow_mul(&b, &b);
                e >>= 1;
            }
            acc
        };
        let one = digits(1);
        let generator = (1..q)
            .find(|&g| {
                let gd = digits(g);
                factors.iter().all(|&l| pow_digits(&gd, order / l) != one)
            })
            .expect("multiplicative group is cyclic");

        let mut exp = vec![0u32; 2 * (q as usize - 1)];
        let mut log = vec![0u32; q as usize];
        let gd = digits(generator);
        let mut cur = one.clone();
        for i in 0..(q - 1) as usize {
            let idx = undigits(&cur);
            exp[i] = idx;
            exp[i + q as usize - 1] = idx;
            log[idx as usize] = i as u32;
            cur = slow_mul(&cur, &gd);
        }

        let neg: Vec<u32> = (0..q)
            .map(|x| undigits(&digits(x).iter().map(|&c| (p - c) % p).collect::<Vec<_>>()))
            .collect();

        let add_digits = |a: u32, b: u32| -> u32 {
            let (da, db) = (digits(a), digits(b));
            undigits(&da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect::<Vec<_>>())
        };
        let add_table = (m > 1 && q <= ADD_TABLE_LIMIT).then(|| {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = add_digits(a, b) as u16;
                }
            }
            t
        });

        let nonsquare = (1..q).find(|&x| log[x as usize] % 2 == 1).expect("q odd");

        let mut inner = FieldInner {
            p,
            m,
            q,
            modulus,
            tag,
            exp,
            log,
            neg,
            class: Vec::new(),
            add_table,
            nonsquare,
        };
        // absolute trace: sum of x^{p^j}, j < m
        let class = (0..q)
            .map(|x| {
                let mut acc = 0;
                let mut y = x;
                for _ in 0..m {
                    acc = inner.add(acc, y);
                    y = inner.pow(y, p as u64);
                }
                debug_assert!(acc < p);
                acc
            })
            .collect();
        inner.class = class;
        inner
    }

    #[inline(always)]
    fn add(&self, a: u32, b: u32) -> u32 {
        if self.m == 1 {
            let s = a + b;
            if s >= self.p {
                s - self.p
            } else {
                s
            }
        } else if let Some(t) = &self.add_table {
            t[(a * self.q + b) as usize] as u32
        } else {
            let (p, mut a, mut b) = (self.p, a, b);
            let mut out = 0;
            let mut place = 1;
            while a > 0 || b > 0 {
                out += ((a % p + b % p) % p) * place;
                place *= p;
                a /= p;
                b /= p;
            }
            out
        }
    }

    #[inline(always)]
    fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.q - 1) as u64;
        let l = (self.log[a as usize] as u64 * (e % order)) % order;
        self.exp[l as usize]
    }
}

impl FieldSpec {
    /// The prime field `F_p`.
    pub fn prime(p: u32) -> Result<Self, FieldError> {
        build_field(p, 1, None)
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn m(&self) -> u32 {
        self.0.m
    }

    /// Number of elements.
    pub fn q(&self) -> u32 {
        self.0.q
    }

    /// Monic modulus, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    /// `"p"` for prime fields, `"p^m"` otherwise.
    pub fn descriptor(&self) -> String {
        if self.0.m == 1 {
            self.0.p.to_string()
        } else {
            format!("{}^{}", self.0.p, self.0.m)
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.wrap(0)
    }

    pub fn one(&self) -> FieldElement {
        self.wrap(1)
    }

    /// The power-basis generator `alpha`, a root of the modulus.
    pub fn alpha(&self) -> FieldElement {
        if self.0.m == 1 {
            // modulus x - c
            self.wrap((self.0.p - self.0.modulus[0]) % self.0.p)
        } else {
            self.wrap(self.0.p)
        }
    }

    /// Element with the given enumeration index.
    pub fn element(&self, index: u32) -> Result<FieldElement, FieldError> {
        if index >= self.0.q {
            return Err(FieldError::IndexOutOfRange(index as u64));
        }
        Ok(self.wrap(index))
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        self.wrap(n.rem_euclid(self.0.p as i64) as u32)
    }

    /// Element with power-basis coefficients `c0 + c1*alpha + ..`.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement, FieldError> {
        if coeffs.len() > self.0.m as usize || coeffs.iter().any(|&c| c >= self.0.p) {
            return Err(FieldError::IndexOutOfRange(coeffs.len() as u64));
        }
        Ok(self.wrap(coeffs.iter().rev().fold(0, |acc, &c| acc * self.0.p + c)))
    }

    /// Power-basis coefficients, length `m`.
    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        let mut v = x.value;
        (0..self.0.m)
            .map(|_| {
                let d = v % self.0.p;
                v /= self.0.p;
                d
            })
            .collect()
    }

    /// All `q` elements in enumeration order (odometer over coefficients,
    /// constant term fastest).
    pub fn enumerate(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.0.q).map(move |i| self.wrap(i))
    }

    /// `tr_{F_q/F_p}(x)` as an integer in `0..p`; `psi(x) = zeta_p^class`.
    pub fn character_class(&self, x: FieldElement) -> Result<u32, FieldError> {
        self.check(x)?;
        Ok(self.0.class[x.value as usize])
    }

    /// Smallest non-square in enumeration order.
    pub fn nonsquare(&self) -> FieldElement {
        self.wrap(self.0.nonsquare)
    }

    pub fn is_square(&self, x: FieldElement) -> Result<bool, FieldError> {
        self.check(x)?;
        Ok(self.is_square_raw(x.value))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith(self, ArithOp::Add, a, b)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith(self, ArithOp::Sub, a, b)
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith(self, ArithOp::Mul, a, b)
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith(self, ArithOp::Div, a, b)
    }

    pub fn neg(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith_unary(self, UnaryOp::Neg, a)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        element_arith_unary(self, UnaryOp::Inv, a)
    }

    pub fn pow(&self, a: FieldElement, e: i64) -> Result<FieldElement, FieldError> {
        element_arith_unary(self, UnaryOp::Pow(e), a)
    }

    /// Frobenius `x -> x^p`.
    pub fn frobenius(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        Ok(self.wrap(self.pow_raw(a.value, self.0.p as u64)))
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        x.tag == self.0.tag && x.value < self.0.q
    }

    pub(crate) fn check(&self, x: FieldElement) -> Result<(), FieldError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    #[inline(always)]
    pub(crate) fn wrap(&self, value: u32) -> FieldElement {
        FieldElement {
            tag: self.0.tag,
            value,
        }
    }

    // Unchecked arithmetic on element indices; callers guarantee ranges.

    #[inline(always)]
    pub(crate) fn add_raw(&self, a: u32, b: u32) -> u32 {
        self.0.add(a, b)
    }

    #[inline(always)]
    pub(crate) fn neg_raw(&self, a: u32) -> u32 {
        self.0.neg[a as usize]
    }

    #[inline(always)]
    pub(crate) fn sub_raw(&self, a: u32, b: u32) -> u32 {
        self.0.add(a, self.0.neg[b as usize])
    }

    #[inline(always)]
    pub(crate) fn mul_raw(&self, a: u32, b: u32) -> u32 {
        self.0.mul(a, b)
    }

    pub(crate) fn inv_raw(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        let order = self.0.q - 1;
        self.0.exp[((order - self.0.log[a as usize]) % order) as usize]
    }

    pub(crate) fn pow_raw(&self, a: u32, e: u64) -> u32 {
        self.0.pow(a, e)
    }

    #[inline(always)]
    pub(crate) fn class_raw(&self, a: u32) -> u32 {
        self.0.class[a as usize]
    }

    pub(crate) fn class_table(&self) -> &[u32] {
        &self.0.class
    }

    pub(crate) fn is_square_raw(&self, a: u32) -> bool {
        a == 0 || self.0.log[a as usize].is_multiple_of(2)
    }

    pub(crate) fn sqrt_raw(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return Some(0);
        }
        let l = self.0.log[a as usize];
        l.is_multiple_of(2).then(|| self.0.exp[(l / 2) as usize])
    }
}

/// Binary field arithmetic with ownership checks.
pub fn element_arith(
    fs: &FieldSpec,
    op: ArithOp,
    a: FieldElement,
    b: FieldElement,
) -> Result<FieldElement, FieldError> {
    fs.check(a)?;
    fs.check(b)?;
    let (x, y) = (a.value, b.value);
    let v = match op {
        ArithOp::Add => fs.add_raw(x, y),
        ArithOp::Sub => fs.sub_raw(x, y),
        ArithOp::Mul => fs.mul_raw(x, y),
        ArithOp::Div => {
            if y == 0 {
                return Err(FieldError::DivisionByZero);
            }
            fs.mul_raw(x, fs.inv_raw(y))
        }
    };
    Ok(fs.wrap(v))
}

/// Negation, inversion and integer powers (negative exponents invert first).
pub fn element_arith_unary(
    fs: &FieldSpec,
    op: UnaryOp,
    a: FieldElement,
) -> Result<FieldElement, FieldError> {
    fs.check(a)?;
    let x = a.value;
    let v = match op {
        UnaryOp::Neg => fs.neg_raw(x),
        UnaryOp::Inv => {
            if x == 0 {
                return Err(FieldError::DivisionByZero);
            }
            fs.inv_raw(x)
        }
        UnaryOp::Pow(e) if e >= 0 => fs.pow_raw(x, e as u64),
        UnaryOp::Pow(e) => {
            if x == 0 {
                return Err(FieldError::DivisionByZero);
            }
            fs.pow_raw(fs.inv_raw(x), e.unsigned_abs())
        }
    };
    Ok(fs.wrap(v))
}
