//! Slicing a cubic `P = sum_{i<=r} x_i R^i` along its first `r` variables:
//! the pencil of quadratic forms `Q^x = sum x_i Q^i` on `W = k^{N-r}`, its
//! rank stratification, and the resulting case analysis.
//!
//! Coordinates are `v = (x, y)` with `x` the first `r` variables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::char_sum::{count_vector, restricted_count_raw, CharacterSum, SumError, SumOptions};
use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::linalg::{annihilator, span_basis, Matrix};
use crate::poly::{odometer_step, Monomial, MultiPoly, PolyError};
use crate::quadratic::{closed_form_raw, QuadError, QuadraticForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SliceError {
    #[error("polynomial is not a homogeneous cubic")]
    NotCubic,
    #[error("term {0} avoids every slicing variable")]
    NotInSliceIdeal(String),
    #[error("characteristic {p} does not exceed the degree 3")]
    CharacteristicTooSmall { p: u32 },
    #[error("direction is zero")]
    ZeroDirection,
    #[error("full case classification is only available for r <= 2, got r = {0}")]
    UnsupportedR(usize),
    #[error("expected 1 <= r <= {nvars}, got r = {r}")]
    BadSliceCount { r: usize, nvars: usize },
    #[error("polynomial is not of the form x1 * R with R a quadratic form")]
    NotSliceRankOne,
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `R^i(x, y) = c^i(x) + x^T M^i y + Q^i(y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceForm {
    field: FieldSpec,
    r: usize,
    nvars: usize,
    pub c: Vec<QuadraticForm>,
    pub m: Vec<Matrix>,
    pub q: Vec<QuadraticForm>,
}

/// Which slicing variable receives a monomial divisible by several.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    Lowest,
    /// Uniformly random eligible index from a seeded stream.
    Seeded(u64),
}

pub fn slice_decompose(poly: &MultiPoly, r: usize) -> Result<SliceForm, SliceError> {
    slice_decompose_with(poly, r, Assignment::Lowest)
}

/// As [`slice_decompose`], additionally requiring `p > 3`.
pub fn slice_decompose_strict(poly: &MultiPoly, r: usize) -> Result<SliceForm, SliceError> {
    let p = poly.field().p();
    if p <= 3 {
        return Err(SliceError::CharacteristicTooSmall { p });
    }
    slice_decompose(poly, r)
}

pub fn slice_decompose_with(
    poly: &MultiPoly,
    r: usize,
    assignment: Assignment,
) -> Result<SliceForm, SliceError> {
    let fs = poly.field();
    let nvars = poly.nvars();
    if r == 0 || r > nvars {
        return Err(SliceError::BadSliceCount { r, nvars });
    }
    let info = poly.degree_check();
    if !poly.is_zero() && (info.degree != Some(3) || !info.homogeneous) {
        return Err(SliceError::NotCubic);
    }
    let w = nvars - r;
    let mut s = SliceForm {
        field: fs.clone(),
        r,
        nvars,
        c: vec![QuadraticForm::zero(fs, r); r],
        m: vec![Matrix::zeros(fs, r, w); r],
        q: vec![QuadraticForm::zero(fs, w); r],
    };
    let mut rng = match assignment {
        Assignment::Lowest => None,
        Assignment::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    for (mono, coeff) in poly.terms_raw() {
        let e = mono.exponents();
        let eligible: Vec<usize> = (0..r).filter(|&i| e[i] > 0).collect();
        if eligible.is_empty() {
            let mut t = MultiPoly::zero(fs, nvars);
            t.add_term_raw(mono.clone(), 1);
            return Err(SliceError::NotInSliceIdeal(t.to_string()));
        }
        let i = match rng.as_mut() {
            None => eligible[0],
            Some(g) => eligible[g.random_range(0..eligible.len())],
        };
        let mut rest = e.to_vec();
        rest[i] -= 1;
        // the two remaining variable slots, with multiplicity
        let vars: Vec<usize> = (0..nvars)
            .flat_map(|v| std::iter::repeat_n(v, rest[v] as usize))
            .collect();
        let (a, b) = (vars[0], vars[1]);
        match (a < r, b < r) {
            (true, true) => {
                let old = s.c[i].coeff_raw(a, b);
                let new = fs.wrap(fs.add_raw(old, coeff));
                s.c[i].set_coefficient(a, b, new)?;
            }
            (true, false) => {
                let old = s.m[i].get_raw(a, b - r);
                s.m[i].set_raw(a, b - r, fs.add_raw(old, coeff));
            }
            (false, false) => {
                let old = s.q[i].coeff_raw(a - r, b - r);
                let new = fs.wrap(fs.add_raw(old, coeff));
                s.q[i].set_coefficient(a - r, b - r, new)?;
            }
            (false, true) => unreachable!("variables are sorted"),
        }
    }
    Ok(s)
}

/// A direction `x` in `k^r` together with data of the slice `{x} x W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceData {
    pub form: QuadraticForm,
    /// `y -> sum_i x_i x^T M^i y`
    pub linear: Vec<FieldElement>,
    /// `sum_i x_i c^i(x)`
    pub constant: FieldElement,
}

impl SliceForm {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// `dim W = N - r`.
    pub fn w_dim(&self) -> usize {
        self.nvars - self.r
    }

    /// `sum_i x_i (c^i(x) + x^T M^i y + Q^i(y))`.
    pub fn reconstruct(&self) -> MultiPoly {
        let fs = &self.field;
        let (r, n) = (self.r, self.nvars);
        let mut out = MultiPoly::zero(fs, n);
        let mut add = |i: usize, j: usize, k: usize, c: u32| {
            let mut e = vec![0u16; n];
            e[i] += 1;
            e[j] += 1;
            e[k] += 1;
            out.add_term_raw(Monomial::new(e), c);
        };
        for i in 0..r {
            for a in 0..r {
                for b in a..r {
                    add(i, a, b, self.c[i].coeff_raw(a, b));
                }
                for b in 0..self.w_dim() {
                    add(i, a, r + b, self.m[i].get_raw(a, b));
                }
            }
            for a in 0..self.w_dim() {
                for b in a..self.w_dim() {
                    add(i, r + a, r + b, self.q[i].coeff_raw(a, b));
                }
            }
        }
        out
    }

    pub(crate) fn pencil_raw(&self, x: &[u32]) -> QuadraticForm {
        let fs = &self.field;
        let w = self.w_dim();
        let mut out = QuadraticForm::zero(fs, w);
        for a in 0..w {
            for b in a..w {
                let v = (0..self.r).fold(0, |acc, i| {
                    fs.add_raw(acc, fs.mul_raw(x[i], self.q[i].coeff_raw(a, b)))
                });
                out.set_coefficient(a, b, fs.wrap(v)).expect("in range");
            }
        }
        out
    }

    pub(crate) fn slice_raw(&self, x: &[u32]) -> (QuadraticForm, Vec<u32>, u32) {
        let fs = &self.field;
        let w = self.w_dim();
        let mut linear = vec![0u32; w];
        let mut constant = 0;
        for i in 0..self.r {
            if x[i] == 0 {
                continue;
            }
            // x^T M^i
            let row: Vec<u32> = (0..w)
                .map(|b| {
                    (0..self.r).fold(0, |acc, a| {
                        fs.add_raw(acc, fs.mul_raw(x[a], self.m[i].get_raw(a, b)))
                    })
                })
                .collect();
            for b in 0..w {
                linear[b] = fs.add_raw(linear[b], fs.mul_raw(x[i], row[b]));
            }
            constant = fs.add_raw(constant, fs.mul_raw(x[i], self.c[i].eval_raw(x)));
        }
        (self.pencil_raw(x), linear, constant)
    }

    /// `P(x, y)` as a quadratic polynomial in `y`.
    pub fn slice(&self, x: &[FieldElement]) -> Result<SliceData, SliceError> {
        let raw = self.direction_raw(x)?;
        let (form, linear, constant) = self.slice_raw(&raw);
        Ok(SliceData {
            form,
            linear: linear.into_iter().map(|v| self.field.wrap(v)).collect(),
            constant: self.field.wrap(constant),
        })
    }

    fn direction_raw(&self, x: &[FieldElement]) -> Result<Vec<u32>, SliceError> {
        if x.len() != self.r {
            return Err(QuadError::ShapeMismatch(format!(
                "direction has {} coordinates, expected {}",
                x.len(),
                self.r
            ))
            .into());
        }
        for &c in x {
            self.field.check(c)?;
        }
        Ok(x.iter().map(|c| c.index()).collect())
    }

    /// Stacked rows of all `M^i`: their common kernel is `ker l^1 ∩ .. ∩ ker l^r`.
    fn linear_rows(&self) -> Vec<Vec<u32>> {
        self.m
            .iter()
            .flat_map(|m| (0..m.rows()).map(|a| m.row_raw(a).to_vec()).collect::<Vec<_>>())
            .collect()
    }
}

/// `Q^x = sum_i x_i Q^i`.
pub fn pencil_form(s: &SliceForm, x: &[FieldElement]) -> Result<QuadraticForm, SliceError> {
    let raw = s.direction_raw(x)?;
    if raw.iter().all(|&c| c == 0) {
        return Err(SliceError::ZeroDirection);
    }
    Ok(s.pencil_raw(&raw))
}

/// Projective representatives of `k^r - 0` with last nonzero coordinate 1,
/// in odometer order (first coordinate fastest).
pub fn projective_points(fs: &FieldSpec, r: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut pt = vec![0u32; r];
    while odometer_step(&mut pt, fs.q()) {
        if pt.iter().rev().find(|&&c| c != 0) == Some(&1) {
            out.push(pt.clone());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionRank {
    pub direction: Vec<FieldElement>,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdSet {
    pub theta: usize,
    /// indices into `PencilReport::directions`
    pub members: Vec<usize>,
    pub span_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PencilReport {
    pub directions: Vec<DirectionRank>,
    pub thresholds: Vec<ThresholdSet>,
}

impl PencilReport {
    pub fn min_rank(&self) -> Option<usize> {
        self.directions.iter().map(|d| d.rank).min()
    }

    fn members_raw(&self, set: &ThresholdSet) -> Vec<Vec<u32>> {
        set.members
            .iter()
            .map(|&i| self.directions[i].direction.iter().map(|c| c.index()).collect())
            .collect()
    }
}

/// Rank of `Q^x` for every projective direction, and `U_theta` with the
/// dimension of its span for each requested threshold.
pub fn pencil_scan(
    s: &SliceForm,
    thresholds: &[usize],
    opts: &SumOptions,
) -> Result<PencilReport, SliceError> {
    let fs = &s.field;
    let count = (fs.q() as u128).pow(s.r as u32).saturating_sub(1) / (fs.q() as u128 - 1);
    if count > opts.budget {
        return Err(SumError::BudgetExceeded {
            points: count,
            budget: opts.budget,
        }
        .into());
    }
    let points = projective_points(fs, s.r);
    let ranks: Vec<usize> = points.par_iter().map(|x| s.pencil_raw(x).rank()).collect();
    let directions: Vec<DirectionRank> = points
        .iter()
        .zip(&ranks)
        .map(|(x, &rank)| DirectionRank {
            direction: x.iter().map(|&c| fs.wrap(c)).collect(),
            rank,
        })
        .collect();
    let thresholds = thresholds
        .iter()
        .map(|&theta| {
            let members: Vec<usize> = (0..points.len()).filter(|&i| ranks[i] <= theta).collect();
            let vecs: Vec<Vec<u32>> = members.iter().map(|&i| points[i].clone()).collect();
            ThresholdSet {
                theta,
                span_dim: span_basis(fs, s.r, &vecs).len(),
                members,
            }
        })
        .collect();
    Ok(PencilReport {
        directions,
        thresholds,
    })
}

/// `P` written through the projection `s: W -> W/W''`: `P = P~ ∘ (id x s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedSlice {
    pub w_prime_dim: usize,
    pub w_double_prime_dim: usize,
    /// `(r + d) x N`: `(x, y) -> (x, A y)` with `A` spanning the annihilator of `W''`
    pub projection: Matrix,
    /// `N x (r + d)`: a right inverse of `projection`
    pub section: Matrix,
    /// `P~` in `r + d` variables
    pub reduced: MultiPoly,
}

impl ReducedSlice {
    pub fn reduced_dim(&self) -> usize {
        self.projection.rows()
    }

    /// Formal identity `P~(projection v) = P(v)`.
    pub fn verify(&self, poly: &MultiPoly) -> bool {
        self.reduced
            .linear_substitute(&self.projection)
            .map(|p| &p == poly)
            .unwrap_or(false)
    }
}

/// Builds the reduction of `poly` (with `r` leading slice variables) along
/// `W''` given by its basis inside `W`.
fn reduce_along(
    poly: &MultiPoly,
    r: usize,
    w_prime_dim: usize,
    w2: &[Vec<u32>],
) -> Result<ReducedSlice, SliceError> {
    let fs = poly.field();
    let n = poly.nvars();
    let w = n - r;
    let a = annihilator(fs, w, w2);
    let d = a.len();
    let a_mat = Matrix::from_raw_rows(fs, w, &a);
    let mut projection = Matrix::zeros(fs, r + d, n);
    let mut section = Matrix::zeros(fs, n, r + d);
    for i in 0..r {
        projection.set_raw(i, i, 1);
        section.set_raw(i, i, 1);
    }
    for (j, row) in a.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            projection.set_raw(r + j, r + b, v);
        }
        let mut e = vec![0u32; d];
        e[j] = 1;
        let col = a_mat.solve_raw(&e).expect("annihilator rows are independent");
        for (b, &v) in col.iter().enumerate() {
            section.set_raw(r + b, r + j, v);
        }
    }
    let reduced = poly.linear_substitute(&section)?;
    Ok(ReducedSlice {
        w_prime_dim,
        w_double_prime_dim: w2.len(),
        projection,
        section,
        reduced,
    })
}

/// Reduction through the common radical of `Q^{u_j}` and the kernels of all
/// `l^i`, for independent directions `u_j` spanning `k^r`.
fn full_span_reduction(s: &SliceForm, us: &[Vec<u32>]) -> Result<ReducedSlice, SliceError> {
    let fs = &s.field;
    let w = s.w_dim();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for u in us {
        let g = s.pencil_raw(u).gram();
        rows.extend((0..w).map(|a| g.row_raw(a).to_vec()));
    }
    let w1 = annihilator(fs, w, &rows);
    rows.extend(s.linear_rows());
    let w2 = annihilator(fs, w, &rows);
    reduce_along(&s.reconstruct(), s.r, w1.len(), &w2)
}

/// First `k` linearly independent vectors among `vs`, in order.
fn first_independent(fs: &FieldSpec, n: usize, vs: &[Vec<u32>], k: usize) -> Vec<Vec<u32>> {
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    for v in vs {
        if chosen.len() == k {
            break;
        }
        chosen.push(v.clone());
        if span_basis(fs, n, &chosen).len() < chosen.len() {
            chosen.pop();
        }
    }
    chosen
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    /// `theta + 4 + 2u`
    pub theta1: usize,
    pub span_dim: usize,
    /// Present when the refined set spans `k^2`.
    pub full_span: Option<ReducedSlice>,
    /// `|a_1(P) - a_1(P')|`, when `q^N` fits the budget.
    pub difference: Option<f64>,
    /// `q^{N-u-1}`, the size the difference is compared against.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CaseLabel {
    /// Every direction has rank `> theta`, so each `|r_x| <= q^{bound/2}`.
    Case0 {
        min_rank: Option<usize>,
        bound_twice_exponent: i64,
    },
    /// `U_theta` spans a line through `direction`.
    Case1 {
        direction: Vec<FieldElement>,
        /// columns: completion vector, then `direction`
        rotation: Matrix,
        /// `P` restricted to `{x'_1 = 0}`, in `N - 1` variables
        restricted: MultiPoly,
        reduction: ReducedSlice,
        refinement: Option<Refinement>,
    },
    /// `U_theta` spans `k^r`.
    Case2 {
        directions: Vec<Vec<FieldElement>>,
        reduction: ReducedSlice,
    },
}

impl CaseLabel {
    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::Case0 { .. } => "case0",
            CaseLabel::Case1 { .. } => "case1",
            CaseLabel::Case2 { .. } => "case2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseReport {
    pub theta: usize,
    pub pencil: PencilReport,
    pub label: CaseLabel,
}

/// Case analysis for `r <= 2`. `refine_u` enables one refinement round in
/// case (1) with threshold `theta + 4 + 2u`.
pub fn classify_case(
    s: &SliceForm,
    theta: usize,
    refine_u: Option<usize>,
    opts: &SumOptions,
) -> Result<CaseReport, SliceError> {
    if s.r > 2 {
        return Err(SliceError::UnsupportedR(s.r));
    }
    let fs = s.field.clone();
    let pencil = pencil_scan(s, &[theta], opts)?;
    let set = &pencil.thresholds[0];
    let members = pencil.members_raw(set);
    let wrap = |v: &[u32]| v.iter().map(|&c| fs.wrap(c)).collect::<Vec<_>>();
    let label = match set.span_dim {
        0 => CaseLabel::Case0 {
            min_rank: pencil.min_rank(),
            bound_twice_exponent: 2 * s.w_dim() as i64 - (theta as i64 + 1),
        },
        d if d == s.r => {
            let us = first_independent(&fs, s.r, &members, s.r);
            CaseLabel::Case2 {
                reduction: full_span_reduction(s, &us)?,
                directions: us.iter().map(|u| wrap(u)).collect(),
            }
        }
        _ => {
            let u = members[0].clone();
            let poly = s.reconstruct();
            let (rotation, restricted) = rotate_and_restrict(s, &u)?;
            // slice of the restricted cubic t * (..) along its first variable
            let rs = slice_decompose(&restricted, 1)?;
            let reduction = full_span_reduction(&rs, &[vec![1]])?;
            let refinement = match refine_u {
                None => None,
                Some(uu) => {
                    let theta1 = theta + 4 + 2 * uu;
                    let refined = pencil_scan(s, &[theta1], opts)?;
                    let rset = &refined.thresholds[0];
                    let full_span = if rset.span_dim == s.r {
                        let us = first_independent(&fs, s.r, &refined.members_raw(rset), s.r);
                        Some(full_span_reduction(s, &us)?)
                    } else {
                        None
                    };
                    let difference = match (
                        count_vector(&poly, 1, opts),
                        count_vector(&restricted, 1, opts),
                    ) {
                        (Ok(a), Ok(b)) => Some(difference_magnitude(&a, &b)),
                        _ => None,
                    };
                    let exp = s.nvars as f64 - uu as f64 - 1.0;
                    Some(Refinement {
                        theta1,
                        span_dim: rset.span_dim,
                        full_span,
                        difference,
                        reference: (fs.q() as f64).powf(exp),
                    })
                }
            };
            CaseLabel::Case1 {
                direction: wrap(&u),
                rotation,
                restricted,
                reduction,
                refinement,
            }
        }
    };
    Ok(CaseReport {
        theta,
        pencil,
        label,
    })
}

/// `|a - b|` for two sums over possibly different domains.
fn difference_magnitude(a: &CharacterSum, b: &CharacterSum) -> f64 {
    let (ar, ai, _) = a.value();
    let (br, bi, _) = b.value();
    (ar - br).hypot(ai - bi)
}

/// For `r = 2`: the rotation `x = A x'` whose second column is `u`, and
/// `P'(t, y) = P(t u, y)`.
fn rotate_and_restrict(s: &SliceForm, u: &[u32]) -> Result<(Matrix, MultiPoly), SliceError> {
    let fs = &s.field;
    let e = (0..s.r)
        .map(|j| {
            let mut e = vec![0u32; s.r];
            e[j] = 1;
            e
        })
        .find(|e| span_basis(fs, s.r, &[e.clone(), u.to_vec()]).len() == 2)
        .expect("some axis completes u");
    let rotation = Matrix::from_raw_columns(fs, s.r, &[e, u.to_vec()]);
    // v = (t u, y) from (t, y)
    let n = s.nvars;
    let mut sub = Matrix::zeros(fs, n, n - 1);
    for (a, &ua) in u.iter().enumerate() {
        sub.set_raw(a, 0, ua);
    }
    for b in 0..s.w_dim() {
        sub.set_raw(s.r + b, 1 + b, 1);
    }
    let restricted = s.reconstruct().linear_substitute(&sub)?;
    Ok((rotation, restricted))
}

/// Threshold `2r + 2 + u0` for general `r`: only the span dimension is
/// computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralSpan {
    pub threshold: usize,
    pub members: usize,
    pub span_dim: usize,
}

pub fn general_span(s: &SliceForm, u0: usize, opts: &SumOptions) -> Result<GeneralSpan, SliceError> {
    let threshold = 2 * s.r + 2 + u0;
    let report = pencil_scan(s, &[threshold], opts)?;
    let set = &report.thresholds[0];
    Ok(GeneralSpan {
        threshold,
        members: set.members.len(),
        span_dim: set.span_dim,
    })
}

/// Outcome for `P = x1 * R`, `R(x, y) = alpha x^2 + x l(y) + Q(y)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Dichotomy {
    /// `rank Q >= 3`: per-slice magnitudes `|r_x| = q^{e/2}` for `x != 0`
    /// (`None` for a vanishing slice), all within `q^{N - 1 - 3/2}`.
    Bound {
        rank: usize,
        slices: Vec<(FieldElement, Option<u64>)>,
        bound_twice_exponent: u64,
    },
    /// `rank Q <= 2` and `l` is nonzero on the radical: `r_x = 0` for `x != 0`.
    Vanishing { rank: usize },
    /// `rank Q <= 2`, `l` vanishes on the radical: `P = Q^(t1, t2, t3)`.
    Reduction {
        rank: usize,
        /// `3 x N`; unused forms are zero rows
        forms: Matrix,
        cubic: MultiPoly,
    },
}

impl Dichotomy {
    pub fn name(&self) -> &'static str {
        match self {
            Dichotomy::Bound { .. } => "bound",
            Dichotomy::Vanishing { .. } => "vanishing",
            Dichotomy::Reduction { .. } => "reduction",
        }
    }
}

pub fn lemma32_dichotomy(poly: &MultiPoly) -> Result<Dichotomy, SliceError> {
    let s = match slice_decompose(poly, 1) {
        Ok(s) => s,
        Err(SliceError::NotCubic | SliceError::NotInSliceIdeal(_)) => {
            return Err(SliceError::NotSliceRankOne)
        }
        Err(e) => return Err(e),
    };
    let fs = s.field.clone();
    let n = s.nvars;
    let w = s.w_dim();
    let q_form = &s.q[0];
    let rank = q_form.rank();
    let l = s.m[0].row_raw(0).to_vec();
    if rank >= 3 {
        let slices = (1..fs.q())
            .map(|x| {
                let (form, lin, c) = s.slice_raw(&[x]);
                let cf = closed_form_raw(&form, &lin, c, 1)?;
                Ok((fs.wrap(x), cf.twice_exponent))
            })
            .collect::<Result<Vec<_>, SliceError>>()?;
        return Ok(Dichotomy::Bound {
            rank,
            slices,
            bound_twice_exponent: 2 * w as u64 - 3,
        });
    }
    let radical = q_form.gram().nullspace_raw();
    if radical.iter().any(|v| crate::linalg::dot_raw(&fs, &l, v) != 0) {
        return Ok(Dichotomy::Vanishing { rank });
    }
    // t1 = x1, then forms cutting out the radical inside W
    let cut = annihilator(&fs, w, &radical);
    let mut forms = Matrix::zeros(&fs, 3, n);
    forms.set_raw(0, 0, 1);
    for (j, row) in cut.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            forms.set_raw(1 + j, 1 + b, v);
        }
    }
    let reduced = reduce_along(poly, 1, radical.len(), &radical)?;
    // pad the reduced cubic to three variables
    let cubic = reduced.reduced.with_nvars(3)?;
    Ok(Dichotomy::Reduction { rank, forms, cubic })
}

/// Per-direction comparison of the enumerated slice sum with the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCheck {
    pub direction: Vec<FieldElement>,
    pub rank: usize,
    /// `Some(2s)` with `|r_x| = q^s`, `None` when the slice sum vanishes
    pub twice_exponent: Option<u64>,
    pub enumerated: CharacterSum,
    pub counts_match: bool,
    pub law_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceIdentityReport {
    pub full: CharacterSum,
    pub assembled: CharacterSum,
    pub identity_holds: bool,
    pub directions: Vec<DirectionCheck>,
}

impl SliceIdentityReport {
    pub fn all_hold(&self) -> bool {
        self.identity_holds
            && self
                .directions
                .iter()
                .all(|d| d.counts_match && d.law_holds)
    }
}

/// Checks `a_1(P) = q^{N-r} + sum_{x != 0} r_x` exactly, and for each
/// `x != 0` that the enumerated `r_x` equals the closed form with
/// `|r_x| in {0, q^{(N-r) - rank(Q^x)/2}}`.
pub fn slice_identity_check(s: &SliceForm, opts: &SumOptions) -> Result<SliceIdentityReport, SliceError> {
    let fs = s.field.clone();
    let poly = s.reconstruct();
    let full = count_vector(&poly, 1, opts)?;
    let mut acc = vec![0u64; fs.p() as usize];
    let mut directions = Vec::new();
    let mut x = vec![0u32; s.r];
    let w = s.w_dim();
    loop {
        let constraints: Vec<(Vec<u32>, u32)> = (0..s.r)
            .map(|i| {
                let mut e = vec![0u32; s.nvars];
                e[i] = 1;
                (e, x[i])
            })
            .collect();
        let slice = restricted_count_raw(&poly, &constraints, 1, opts)?;
        for (a, b) in acc.iter_mut().zip(slice.counts()) {
            *a += b;
        }
        if x.iter().any(|&c| c != 0) {
            let (form, lin, c) = s.slice_raw(&x);
            let cf = closed_form_raw(&form, &lin, c, 1)?;
            let rank = form.rank();
            let law_holds = match cf.twice_exponent {
                None => form.gram().solve_raw(&lin).is_none() && slice.is_zero(),
                Some(e) => e == (2 * w - rank) as u64,
            };
            directions.push(DirectionCheck {
                direction: x.iter().map(|&c| fs.wrap(c)).collect(),
                rank,
                twice_exponent: cf.twice_exponent,
                counts_match: cf.sum.as_ref() == Some(&slice),
                law_holds,
                enumerated: slice,
            });
        } else {
            // P vanishes on W
            debug_assert_eq!(slice.counts()[0], slice.domain_size().unwrap_or(0) as u64);
        }
        if !odometer_step(&mut x, fs.q()) {
            break;
        }
    }
    let assembled = CharacterSum::from_counts(&fs, 1, s.nvars, acc)?;
    Ok(SliceIdentityReport {
        identity_holds: assembled == full,
        full,
        assembled,
        directions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn f(p: u32) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    /// Parses with `y_j` standing for `x_{r+j}`.
    fn poly(text: &str, fs: &FieldSpec, r: usize, n: usize) -> MultiPoly {
        let mut t = text.to_string();
        for j in (1..=n - r).rev() {
            t = t.replace(&format!("y{j}"), &format!("x{}", r + j));
        }
        parse_poly(&t, fs, n).unwrap()
    }

    fn form(text: &str, fs: &FieldSpec, n: usize) -> QuadraticForm {
        QuadraticForm::from_poly(&parse_poly(text, fs, n).unwrap()).unwrap()
    }

    fn els(fs: &FieldSpec, v: &[i64]) -> Vec<FieldElement> {
        v.iter().map(|&c| fs.from_int(c)).collect()
    }

    #[test]
    fn decompose_examples() {
        let f5 = f(5);
        let s = slice_decompose(&poly("x1*y1^2 + x1*y2*y3", &f5, 1, 4), 1).unwrap();
        assert_eq!(s.c[0], QuadraticForm::zero(&f5, 1));
        assert_eq!(s.m[0], Matrix::zeros(&f5, 1, 3));
        assert_eq!(s.q[0], form("x1^2 + x2*x3", &f5, 3));

        let s = slice_decompose(&poly("x1^3", &f5, 1, 3), 1).unwrap();
        assert_eq!(s.c[0], form("x1^2", &f5, 1));
        assert_eq!(s.q[0], QuadraticForm::zero(&f5, 2));

        let s = slice_decompose(&poly("x1*y1^2 + x2*y1*y2", &f5, 2, 4), 2).unwrap();
        assert_eq!(s.q[0], form("x1^2", &f5, 2));
        assert_eq!(s.q[1], form("x1*x2", &f5, 2));
        assert!(s.c.iter().all(|c| c == &QuadraticForm::zero(&f5, 2)));
        assert!(s.m.iter().all(|m| m == &Matrix::zeros(&f5, 2, 2)));
    }

    #[test]
    fn decompose_errors() {
        let f5 = f(5);
        assert_eq!(
            slice_decompose(&poly("x1*y1 + y1^3", &f5, 1, 2), 1).unwrap_err(),
            SliceError::NotCubic
        );
        assert!(matches!(
            slice_decompose(&poly("x1*y1^2 + y1^3", &f5, 1, 2), 1),
            Err(SliceError::NotInSliceIdeal(_))
        ));
        let f3 = f(3);
        assert_eq!(
            slice_decompose_strict(&poly("x1^3", &f3, 1, 2), 1).unwrap_err(),
            SliceError::CharacteristicTooSmall { p: 3 }
        );
    }

    #[test]
    fn reconstruction_is_exact() {
        let f5 = f(5);
        let p = parse_poly(
            "x1^3 + 2*x1*x2*x3 + x2^2*x4 + 3*x1*x4^2 + x2*x3*x4 + 4*x1^2*x2 + x1*x2*x4",
            &f5,
            4,
        )
        .unwrap();
        for r in 2..=3 {
            for a in [Assignment::Lowest, Assignment::Seeded(7), Assignment::Seeded(11)] {
                let s = slice_decompose_with(&p, r, a).unwrap();
                assert_eq!(s.reconstruct(), p);
            }
        }
    }

    #[test]
    fn pencil_examples() {
        let f5 = f(5);
        let s = slice_decompose(&poly("x1*y1^2 + x1*y2*y3 + x2*y1*y2", &f5, 2, 5), 2).unwrap();
        let q = pencil_form(&s, &els(&f5, &[1, 0])).unwrap();
        assert_eq!((q.clone(), q.rank()), (form("x1^2 + x2*x3", &f5, 3), 3));
        let q = pencil_form(&s, &els(&f5, &[0, 1])).unwrap();
        assert_eq!(q.rank(), 2);
        let q = pencil_form(&s, &els(&f5, &[1, 1])).unwrap();
        assert_eq!((q.clone(), q.rank()), (form("x1^2 + x1*x2 + x2*x3", &f5, 3), 3));
        assert_eq!(
            pencil_form(&s, &els(&f5, &[0, 0])).unwrap_err(),
            SliceError::ZeroDirection
        );
    }

    #[test]
    fn projective_rank_invariance() {
        let f5 = f(5);
        let s = slice_decompose(&poly("x1*y1^2 + x1*y2*y3 + x2*y1*y2 + x2*y3^2", &f5, 2, 5), 2)
            .unwrap();
        let mut x = vec![0u32; 2];
        while odometer_step(&mut x, 5) {
            let base = s.pencil_raw(&x).rank();
            for l in 2..5 {
                let y: Vec<u32> = x.iter().map(|&c| f5.mul_raw(c, l)).collect();
                assert_eq!(s.pencil_raw(&y).rank(), base);
            }
        }
    }

    #[test]
    fn scan_examples() {
        let f5 = f(5);
        let opts = SumOptions::default();
        let s = slice_decompose(&poly("x1*y1*y2 + x2*y3*y4", &f5, 2, 6), 2).unwrap();
        let rep = pencil_scan(&s, &[2], &opts).unwrap();
        assert_eq!(rep.directions.len(), 6);
        let u: Vec<Vec<u32>> = rep.members_raw(&rep.thresholds[0]);
        assert_eq!(u, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(rep.thresholds[0].span_dim, 2);
        assert!(rep.directions[2..].iter().all(|d| d.rank == 4));

        let s = slice_decompose(&poly("x1*y1*y2 + x2*y1*y3", &f5, 2, 5), 2).unwrap();
        let rep = pencil_scan(&s, &[2], &opts).unwrap();
        assert!(rep.directions.iter().all(|d| d.rank == 2));
        assert_eq!(rep.thresholds[0].members.len(), 6);

        let s = slice_decompose(&poly("x1*y1*y2", &f5, 1, 3), 1).unwrap();
        let rep = pencil_scan(&s, &[], &opts).unwrap();
        assert_eq!(rep.directions.len(), 1);
        assert_eq!(rep.directions[0].rank, 2);
    }

    #[test]
    fn classify_examples() {
        let f5 = f(5);
        let opts = SumOptions::default();
        let p = poly("x1*y1*y2 + x2*y3*y4", &f5, 2, 6);
        let s = slice_decompose(&p, 2).unwrap();
        let rep = classify_case(&s, 2, None, &opts).unwrap();
        let CaseLabel::Case2 { directions, reduction } = &rep.label else {
            panic!("expected case 2, got {:?}", rep.label);
        };
        assert_eq!(directions, &vec![els(&f5, &[1, 0]), els(&f5, &[0, 1])]);
        assert_eq!((reduction.w_prime_dim, reduction.w_double_prime_dim), (0, 0));
        assert!(reduction.verify(&p));

        let p = poly("x1*y1*y2 + x2*y1*y3", &f5, 2, 6);
        let s = slice_decompose(&p, 2).unwrap();
        let rep = classify_case(&s, 2, None, &opts).unwrap();
        let CaseLabel::Case2 { reduction, .. } = &rep.label else {
            panic!("expected case 2");
        };
        // radical(y1 y2) ∩ radical(y1 y3) = span(y4)
        assert_eq!(reduction.w_prime_dim, 1);
        assert_eq!(reduction.reduced_dim(), 5);
        assert!(reduction.verify(&p));

        // every pencil member has rank >= 4
        let p = poly("x1*y1*y2 + x1*y3*y4 + x2*y1^2 + x2*y2*y3 + 2*x2*y4^2", &f5, 2, 6);
        let s = slice_decompose(&p, 2).unwrap();
        let rep = classify_case(&s, 3, None, &opts).unwrap();
        assert!(rep.pencil.min_rank().unwrap() >= 4);
        assert_eq!(
            rep.label,
            CaseLabel::Case0 {
                min_rank: rep.pencil.min_rank(),
                bound_twice_exponent: 4
            }
        );
    }

    #[test]
    fn classify_case1_with_refinement() {
        let f3 = f(3);
        let opts = SumOptions::default();
        // only the direction (0, 1) has small rank
        let p = poly("x1*y1*y2 + x1*y3*y4 + x2*y1^2", &f3, 2, 6);
        let s = slice_decompose(&p, 2).unwrap();
        let rep = classify_case(&s, 1, Some(0), &opts).unwrap();
        let CaseLabel::Case1 {
            direction,
            rotation,
            restricted,
            reduction,
            refinement,
        } = &rep.label
        else {
            panic!("expected case 1, got {:?}", rep.label);
        };
        assert_eq!(direction, &els(&f3, &[0, 1]));
        assert_eq!(rotation.column(1), els(&f3, &[0, 1]));
        assert_eq!(restricted, &poly("x1*y1^2", &f3, 1, 5));
        assert!(reduction.verify(restricted));
        assert_eq!(reduction.reduced_dim(), 2);
        let refinement = refinement.as_ref().unwrap();
        assert_eq!(refinement.theta1, 5);
        assert_eq!(refinement.span_dim, 2);
        assert!(refinement.full_span.as_ref().unwrap().verify(&p));
        assert!(refinement.difference.is_some());
    }

    #[test]
    fn unsupported_r() {
        let f3 = f(3);
        let s = slice_decompose(&poly("x1*y1^2 + x2*y1*y2 + x3*y2^2", &f3, 3, 5), 3).unwrap();
        assert_eq!(
            classify_case(&s, 2, None, &SumOptions::default()).unwrap_err(),
            SliceError::UnsupportedR(3)
        );
        let g = general_span(&s, 0, &SumOptions::default()).unwrap();
        assert_eq!(g.threshold, 8);
        assert_eq!(g.span_dim, 3);
    }

    #[test]
    fn dichotomy_examples() {
        let f5 = f(5);
        let p = parse_poly("x1^3 + x1*x2*x3", &f5, 5).unwrap();
        let Dichotomy::Reduction { rank, forms, cubic } = lemma32_dichotomy(&p).unwrap() else {
            panic!("expected a reduction");
        };
        assert_eq!(rank, 2);
        let expected = Matrix::from_ints(
            &f5,
            &[vec![1, 0, 0, 0, 0], vec![0, 1, 0, 0, 0], vec![0, 0, 1, 0, 0]],
        )
        .unwrap();
        assert_eq!(forms, expected);
        assert_eq!(cubic, parse_poly("x1^3 + x1*x2*x3", &f5, 3).unwrap());
        assert_eq!(cubic.linear_substitute(&forms).unwrap(), p);

        let p = parse_poly("x1*x2*x3 + x1*x4*x5 + x1*x2^2", &f5, 5).unwrap();
        let Dichotomy::Bound { rank, slices, bound_twice_exponent } = lemma32_dichotomy(&p).unwrap()
        else {
            panic!("expected a bound");
        };
        assert_eq!((rank, bound_twice_exponent), (4, 5));
        assert_eq!(slices.len(), 4);
        for (x, e) in slices {
            assert_eq!(e, Some(4));
            let mut e1 = vec![f5.zero(); 5];
            e1[0] = f5.one();
            let oracle = crate::char_sum::restricted_count(&p, &[(e1, x)], 1, &SumOptions::default())
                .unwrap();
            assert_eq!(oracle.magnitude().value, 25.0);
        }

        // x1 * (x2^2 + x3): l is nonzero on the radical
        let p = parse_poly("x1*x2^2 + x1^2*x3", &f5, 3).unwrap();
        assert_eq!(lemma32_dichotomy(&p).unwrap(), Dichotomy::Vanishing { rank: 1 });

        let p = parse_poly("x1*x2*x3 + x1*x4", &f5, 5).unwrap();
        assert_eq!(lemma32_dichotomy(&p).unwrap_err(), SliceError::NotSliceRankOne);
    }

    #[test]
    fn identity_examples() {
        let opts = SumOptions::default();
        let f3 = f(3);
        let s = slice_decompose(&poly("x1*y1*y2 + x2*y3*y4", &f3, 2, 6), 2).unwrap();
        let rep = slice_identity_check(&s, &opts).unwrap();
        assert!(rep.all_hold());
        assert_eq!(rep.directions.len(), 8);

        let f5 = f(5);
        let s = slice_decompose(&poly("x1*y1^2 + x1*y2*y3", &f5, 1, 4), 1).unwrap();
        let rep = slice_identity_check(&s, &opts).unwrap();
        assert!(rep.all_hold());
        for d in &rep.directions {
            assert_eq!(d.twice_exponent, Some(3));
            assert!((d.enumerated.magnitude().value - 5f64.powf(1.5)).abs() < 1e-9);
        }

        // all Q^i and M^i vanish: only the k^r part remains
        let s = slice_decompose(&poly("x1^3 + x1*x2^2", &f5, 2, 4), 2).unwrap();
        let rep = slice_identity_check(&s, &opts).unwrap();
        assert!(rep.all_hold());
        for d in &rep.directions {
            assert_eq!(d.twice_exponent, Some(4));
        }
    }
}
