//! Exact additive character sums `a_n(P) = sum_v psi_n(P(v))` over the
//! degree-`n` extension, stored as count vectors in `Z^p`.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::field::{build_tower, FieldElement, FieldError, FieldSpec};
use crate::linalg::Matrix;
use crate::poly::{MultiPoly, PolyError};

pub(crate) mod kernel;

pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SumError {
    #[error("enumerating {points} points exceeds the budget of {budget}")]
    BudgetExceeded { points: u128, budget: u128 },
    #[error("constraints have no common solution")]
    InconsistentConstraints,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("csv output failed: {0}")]
    Csv(String),
}

/// Enumeration limits shared by every enumerating operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SumOptions {
    /// Maximum number of points to enumerate.
    pub budget: u128,
    /// Worker threads; `None` uses the global pool, `Some(1)` runs inline.
    pub jobs: Option<usize>,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            budget: DEFAULT_BUDGET,
            jobs: None,
        }
    }
}

impl SumOptions {
    pub fn with_budget(budget: u128) -> Self {
        SumOptions {
            budget,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self, q: u32, exponent: u64) -> Result<(), SumError> {
        let points = u32::try_from(exponent)
            .ok()
            .and_then(|e| (q as u128).checked_pow(e))
            .unwrap_or(u128::MAX);
        if points > self.budget {
            return Err(SumError::BudgetExceeded {
                points,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

/// `a_n(P)` as the number of points in each character class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterSum {
    field: FieldSpec,
    level: u32,
    nvars: usize,
    counts: Vec<u64>,
}

/// Floating magnitude with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Magnitude {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasTriple {
    pub magnitude: f64,
    pub magnitude_error_bound: f64,
    pub btilde: f64,
    /// `+inf` exactly when the sum vanishes.
    #[serde(serialize_with = "serialize_extended")]
    pub b: f64,
}

/// Serializes `+inf` as the string `"inf"`.
pub fn serialize_extended<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl CharacterSum {
    /// Wraps a count vector; the total must be `(q^level)^nvars`.
    pub fn from_counts(
        field: &FieldSpec,
        level: u32,
        nvars: usize,
        counts: Vec<u64>,
    ) -> Result<Self, SumError> {
        if counts.len() != field.p() as usize {
            return Err(SumError::ShapeMismatch(format!(
                "expected {} counts, got {}",
                field.p(),
                counts.len()
            )));
        }
        let cs = CharacterSum {
            field: field.clone(),
            level,
            nvars,
            counts,
        };
        let total: u128 = cs.counts.iter().map(|&c| c as u128).sum();
        if Some(total) != cs.domain_size() {
            return Err(SumError::ShapeMismatch(format!(
                "counts sum to {total}, domain has {:?} points",
                cs.domain_size()
            )));
        }
        Ok(cs)
    }

    /// The base field `k` (not the extension).
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `q^{nN}`, if it fits.
    pub fn domain_size(&self) -> Option<u128> {
        let qn = (self.field.q() as u128).checked_pow(self.level)?;
        qn.checked_pow(self.nvars as u32)
    }

    /// `log(q^{nN})`, usable even when the domain size overflows.
    fn ln_domain(&self) -> f64 {
        self.level as f64 * self.nvars as f64 * (self.field.q() as f64).ln()
    }

    /// The sum vanishes exactly iff every class is hit equally often.
    pub fn is_zero(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }

    /// `Some(a)` when `a_n(P)` is a rational integer, i.e. all nonzero classes
    /// have equal counts.
    pub fn as_integer(&self) -> Option<i128> {
        let rest = &self.counts[1..];
        if rest.windows(2).all(|w| w[0] == w[1]) {
            let c1 = rest.first().copied().unwrap_or(0);
            Some(self.counts[0] as i128 - c1 as i128)
        } else {
            None
        }
    }

    /// Real and imaginary parts of `a_n(P)`, with an absolute error bound.
    ///
    /// Subtracting the minimum count first keeps the summands nonnegative
    /// and as small as possible.
    pub fn value(&self) -> (f64, f64, f64) {
        if let Some(z) = self.as_integer() {
            return (z as f64, 0.0, 0.0);
        }
        let p = self.p() as usize;
        let min = *self.counts.iter().min().unwrap();
        let mut re = Compensated::default();
        let mut im = Compensated::default();
        let mut mass = 0f64;
        for (j, &c) in self.counts.iter().enumerate() {
            let w = (c - min) as f64;
            if w == 0.0 {
                continue;
            }
            mass += w;
            // reduce the angle to [-pi, pi] for accurate trig
            let (k, sign) = if 2 * j > p { (p - j, -1.0) } else { (j, 1.0) };
            let theta = TAU * k as f64 / p as f64;
            re.add(w * theta.cos());
            im.add(sign * w * theta.sin());
        }
        (re.value(), im.value(), mass * f64::powi(2.0, -49))
    }

    pub fn magnitude(&self) -> Magnitude {
        if self.is_zero() {
            return Magnitude {
                value: 0.0,
                error_bound: 0.0,
            };
        }
        if let Some(z) = self.as_integer() {
            return Magnitude {
                value: z.unsigned_abs() as f64,
                error_bound: 0.0,
            };
        }
        let (re, im, err) = self.value();
        let value = re.hypot(im);
        if value > err {
            return Magnitude {
                value,
                error_bound: err,
            };
        }
        // |a|^2 = sum_d A(d) cos(2 pi d / p) with A the integer
        // autocorrelation of the centered counts
        let p = self.p() as usize;
        let min = *self.counts.iter().min().unwrap();
        let c: Vec<f64> = self.counts.iter().map(|&x| (x - min) as f64).collect();
        let mut sq = Compensated::default();
        for d in 0..p {
            let a: f64 = (0..p).map(|j| c[j] * c[(j + d) % p]).sum();
            sq.add(a * (TAU * d as f64 / p as f64).cos());
        }
        let value = sq.value().max(0.0).sqrt();
        Magnitude {
            // never report a nonzero sum as exactly zero
            value: value.max(err),
            error_bound: err,
        }
    }

    pub fn bias(&self) -> BiasTriple {
        let mag = self.magnitude();
        let ln_q = self.level as f64 * (self.field.q() as f64).ln();
        let ln_domain = self.ln_domain();
        if mag.value == 0.0 {
            return BiasTriple {
                magnitude: 0.0,
                magnitude_error_bound: 0.0,
                btilde: 0.0,
                b: f64::INFINITY,
            };
        }
        let ln_a = mag.value.ln();
        let b = (2.0 * (ln_domain - ln_a) / ln_q).max(0.0);
        BiasTriple {
            magnitude: mag.value,
            magnitude_error_bound: mag.error_bound,
            btilde: (ln_a - ln_domain).exp(),
            b,
        }
    }

    /// Multiplication by `zeta^shift`.
    pub fn rotate(&self, shift: u32) -> CharacterSum {
        let p = self.counts.len();
        let mut counts = vec![0; p];
        for (j, &c) in self.counts.iter().enumerate() {
            counts[(j + shift as usize) % p] = c;
        }
        CharacterSum {
            counts,
            ..self.clone()
        }
    }

    /// The sum of a polynomial in disjoint variable sets: cyclic convolution
    /// of count vectors.
    pub fn convolve(&self, other: &CharacterSum) -> Result<CharacterSum, SumError> {
        if self.field != other.field || self.level != other.level {
            return Err(FieldError::FieldMismatch.into());
        }
        let p = self.counts.len();
        let mut counts = vec![0u64; p];
        for (i, &a) in self.counts.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.counts.iter().enumerate() {
                counts[(i + j) % p] += a * b;
            }
        }
        Ok(CharacterSum {
            field: self.field.clone(),
            level: self.level,
            nvars: self.nvars + other.nvars,
            counts,
        })
    }

    /// Componentwise sum of two partial count vectors over disjoint blocks.
    pub fn merge(&self, other: &CharacterSum) -> Result<CharacterSum, SumError> {
        if self.field != other.field || self.level != other.level || self.nvars != other.nvars {
            return Err(SumError::ShapeMismatch("merging unrelated sums".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CharacterSum {
            counts,
            ..self.clone()
        })
    }
}

/// Lifts `P` to the degree-`n` extension (identity for `n = 1`).
pub(crate) fn lift(poly: &MultiPoly, n: u32) -> Result<MultiPoly, SumError> {
    if n == 1 {
        return Ok(poly.clone());
    }
    let (_, emb) = build_tower(poly.field(), n)?;
    Ok(poly.base_change(&emb)?)
}

/// Exact count vector of `P` over `V(k_n)`.
pub fn count_vector(poly: &MultiPoly, n: u32, opts: &SumOptions) -> Result<CharacterSum, SumError> {
    if n == 0 {
        return Err(FieldError::ZeroDegree.into());
    }
    let fs = poly.field();
    opts.check(fs.q(), n as u64 * poly.nvars() as u64)?;
    let lifted = lift(poly, n)?;
    let counts = kernel::class_histogram(&lifted, opts.jobs);
    Ok(CharacterSum {
        field: fs.clone(),
        level: n,
        nvars: poly.nvars(),
        counts,
    })
}

pub fn bias(cs: &CharacterSum) -> BiasTriple {
    cs.bias()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEntry {
    pub n: u32,
    pub sum: CharacterSum,
    pub bias: BiasTriple,
    /// `min_{m <= n} b_m`
    pub running_min_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasProfile {
    pub entries: Vec<ProfileEntry>,
    /// First level that did not fit the budget, if any.
    pub truncated_at: Option<u32>,
}

impl BiasProfile {
    pub fn min_b(&self) -> Option<f64> {
        self.entries.last().map(|e| e.running_min_b)
    }

    /// Columns `n, magnitude, btilde, b`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SumError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| SumError::Csv(e.to_string());
        w.write_record(["n", "magnitude", "btilde", "b"]).map_err(err)?;
        for e in &self.entries {
            let b = if e.bias.b.is_infinite() {
                "inf".to_string()
            } else {
                e.bias.b.to_string()
            };
            w.write_record([
                e.n.to_string(),
                e.bias.magnitude.to_string(),
                e.bias.btilde.to_string(),
                b,
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| SumError::Csv(e.to_string()))
    }
}

/// `b_n(P)` for `n = 1..=n_max`, stopping at the first level over budget.
pub fn bias_profile(poly: &MultiPoly, n_max: u32, opts: &SumOptions) -> Result<BiasProfile, SumError> {
    let mut entries: Vec<ProfileEntry> = Vec::new();
    let mut truncated_at = None;
    for n in 1..=n_max {
        let sum = match count_vector(poly, n, opts) {
            Ok(s) => s,
            Err(SumError::BudgetExceeded { .. }) => {
                truncated_at = Some(n);
                break;
            }
            Err(e) => return Err(e),
        };
        let bias = sum.bias();
        let running_min_b = entries
            .last()
            .map_or(bias.b, |e: &ProfileEntry| e.running_min_b.min(bias.b));
        entries.push(ProfileEntry {
            n,
            sum,
            bias,
            running_min_b,
        });
    }
    Ok(BiasProfile {
        entries,
        truncated_at,
    })
}

/// Particular solution and kernel basis of `{v : l_j(v) = c_j}`. Kernel
/// vectors come from the reduced row echelon form, one per free coordinate.
pub(crate) fn parametrize(
    fs: &FieldSpec,
    nvars: usize,
    constraints: &[(Vec<u32>, u32)],
) -> Result<(Vec<u32>, Matrix), SumError> {
    let rows: Vec<Vec<u32>> = constraints.iter().map(|(l, _)| l.clone()).collect();
    let rhs: Vec<u32> = constraints.iter().map(|(_, c)| *c).collect();
    let c = Matrix::from_raw_rows(fs, nvars, &rows);
    let v0 = c
        .solve_raw(&rhs)
        .ok_or(SumError::InconsistentConstraints)?;
    let kernel = c.nullspace_raw();
    Ok((v0, Matrix::from_raw_columns(fs, nvars, &kernel)))
}

/// Count vector over the affine subspace `{l_j = c_j}`, parametrized as
/// `v0 + K w`.
pub fn restricted_count(
    poly: &MultiPoly,
    constraints: &[(Vec<FieldElement>, FieldElement)],
    n: u32,
    opts: &SumOptions,
) -> Result<CharacterSum, SumError> {
    let fs = poly.field();
    let mut raw = Vec::with_capacity(constraints.len());
    for (l, c) in constraints {
        if l.len() != poly.nvars() {
            return Err(SumError::ShapeMismatch(format!(
                "constraint has {} coefficients, polynomial has {} variables",
                l.len(),
                poly.nvars()
            )));
        }
        for &x in l {
            fs.check(x)?;
        }
        fs.check(*c)?;
        raw.push((l.iter().map(|x| x.index()).collect(), c.index()));
    }
    restricted_count_raw(poly, &raw, n, opts)
}

pub(crate) fn restricted_count_raw(
    poly: &MultiPoly,
    constraints: &[(Vec<u32>, u32)],
    n: u32,
    opts: &SumOptions,
) -> Result<CharacterSum, SumError> {
    let (v0, k) = parametrize(poly.field(), poly.nvars(), constraints)?;
    let restricted = poly.affine_substitute_raw(&k, &v0);
    count_vector(&restricted, n, opts)
}
