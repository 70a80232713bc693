//! Algebraic rank of cubics: the least `r` with `P = sum_{i<=r} l_i R_i`,
//! found as the least codimension of a linear subspace on which `P`
//! vanishes. The ideal of a linear subspace is generated by the linear
//! forms cutting it out, so `P` lies in `(l_1, .., l_r)` exactly when its
//! formal restriction to `ker l_1 ∩ .. ∩ ker l_r` is zero.

use rayon::prelude::*;
use thiserror::Error;

use crate::char_sum::{lift, SumError, SumOptions};
use crate::field::{FieldError, FieldSpec};
use crate::linalg::{complete_to_basis, Matrix};
use crate::poly::{Monomial, MultiPoly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankError {
    #[error("polynomial is not a homogeneous cubic")]
    NotCubic,
    #[error("polynomial does not vanish on the common kernel of the given forms")]
    DoesNotVanish,
    #[error("max_r = {max_r} exceeds the number of variables {nvars}")]
    BadMaxR { max_r: usize, nvars: usize },
    #[error("linear forms are dependent or have the wrong length")]
    BadForms,
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_cubic(poly: &MultiPoly) -> Result<(), RankError> {
    let info = poly.degree_check();
    if poly.is_zero() || (info.degree == Some(3) && info.homogeneous) {
        Ok(())
    } else {
        Err(RankError::NotCubic)
    }
}

/// Projective linear forms in `n` variables, normalized so the last nonzero
/// coefficient is 1, in odometer order (first coefficient fastest).
pub fn projective_forms(fs: &FieldSpec, n: usize) -> Vec<Vec<u32>> {
    crate::cubic_slice::projective_points(fs, n)
}

/// `P = l * R`: the first projective form `l` dividing `P`, if any.
pub fn linear_divisor(poly: &MultiPoly) -> Result<Option<(MultiPoly, MultiPoly)>, RankError> {
    check_cubic(poly)?;
    let fs = poly.field();
    for l in projective_forms(fs, poly.nvars()) {
        if let Ok(mut parts) = decompose_raw(poly, std::slice::from_ref(&l)) {
            return Ok(Some(parts.remove(0)));
        }
    }
    Ok(None)
}

/// `P = sum_i l_i R_i` for forms whose common kernel `P` vanishes on.
///
/// Coordinates are changed so that `l_i = z_i` (completing with standard
/// basis vectors); each term goes to the lowest `z_i` dividing it.
pub fn decompose_on_certificate(
    poly: &MultiPoly,
    forms: &Matrix,
) -> Result<Vec<(MultiPoly, MultiPoly)>, RankError> {
    if forms.field() != poly.field() {
        return Err(FieldError::FieldMismatch.into());
    }
    if forms.cols() != poly.nvars() || forms.rank() != forms.rows() {
        return Err(RankError::BadForms);
    }
    let rows: Vec<Vec<u32>> = (0..forms.rows()).map(|i| forms.row_raw(i).to_vec()).collect();
    decompose_raw(poly, &rows)
}

fn decompose_raw(poly: &MultiPoly, forms: &[Vec<u32>]) -> Result<Vec<(MultiPoly, MultiPoly)>, RankError> {
    let fs = poly.field();
    let n = poly.nvars();
    let r = forms.len();
    // z = A x
    let a = complete_to_basis(fs, n, forms);
    let a_inv = a.inverse().expect("completed basis is invertible");
    let in_z = poly.linear_substitute(&a_inv)?;
    let mut parts = vec![MultiPoly::zero(fs, n); r];
    for (m, c) in in_z.terms_raw() {
        let e = m.exponents();
        let Some(i) = (0..r).find(|&i| e[i] > 0) else {
            return Err(RankError::DoesNotVanish);
        };
        let mut rest = e.to_vec();
        rest[i] -= 1;
        parts[i].add_term_raw(Monomial::new(rest), c);
    }
    let mut out = Vec::with_capacity(r);
    for (l, part) in forms.iter().zip(parts) {
        out.push((
            MultiPoly::linear_form_raw(fs, l),
            part.linear_substitute(&a)?,
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankCertificate {
    /// number of summands `r`
    pub r: usize,
    /// the doubled convention `2r`
    pub paper_rank: usize,
    pub ext_level: u32,
    /// field the forms live in
    pub field: FieldSpec,
    /// `r x N`, reduced row echelon
    pub forms: Matrix,
    /// `N x (N - r)` basis of the subspace where `P` vanishes
    pub w_basis: Matrix,
    pub decomposition: Vec<(MultiPoly, MultiPoly)>,
    /// Searching a finite extension only bounds the rank over the closure
    /// from above.
    pub upper_bound_only: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankOutcome {
    Found(RankCertificate),
    NotFound { max_r: usize },
}

/// Gaussian binomial `[n choose r]_q`, saturating.
fn gaussian_binomial(q: u128, n: usize, r: usize) -> u128 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..r {
        num = num.saturating_mul(q.saturating_pow((n - i) as u32).saturating_sub(1));
        den = den.saturating_mul(q.saturating_pow((i + 1) as u32) - 1);
    }
    if num == u128::MAX {
        u128::MAX
    } else {
        num / den
    }
}

/// Pivot sets of size `r` in lexicographic order.
fn pivot_sets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Searches `r = 1..=max_r` over subspaces defined over `k_ext`, returning
/// the first vanishing subspace in reduced-echelon order.
pub fn min_vanishing_codim(
    poly: &MultiPoly,
    max_r: usize,
    ext_level: u32,
    opts: &SumOptions,
) -> Result<RankOutcome, RankError> {
    check_cubic(poly)?;
    let n = poly.nvars();
    if max_r > n {
        return Err(RankError::BadMaxR { max_r, nvars: n });
    }
    let lifted = lift(poly, ext_level)?;
    let fs = lifted.field().clone();
    let q = fs.q();
    let found = |r: usize, forms: Vec<Vec<u32>>| -> Result<RankOutcome, RankError> {
        let forms = Matrix::from_raw_rows(&fs, n, &forms);
        let w = forms.nullspace_raw();
        let decomposition = decompose_on_certificate(&lifted, &forms)?;
        Ok(RankOutcome::Found(RankCertificate {
            r,
            paper_rank: 2 * r,
            ext_level,
            field: fs.clone(),
            w_basis: Matrix::from_raw_columns(&fs, n, &w),
            forms,
            decomposition,
            upper_bound_only: true,
        }))
    };
    if lifted.is_zero() {
        return found(0, Vec::new());
    }
    let mut spent: u128 = 0;
    for r in 1..=max_r {
        spent = spent.saturating_add(gaussian_binomial(q as u128, n, r));
        if spent > opts.budget {
            return Err(SumError::BudgetExceeded {
                points: spent,
                budget: opts.budget,
            }
            .into());
        }
        for pivots in pivot_sets(n, r) {
            // free entries: row i, columns right of its pivot that are not pivots
            let free: Vec<(usize, usize)> = (0..r)
                .flat_map(|i| {
                    let pv = pivots.clone();
                    (pivots[i] + 1..n)
                        .filter(move |c| !pv.contains(c))
                        .map(move |c| (i, c))
                })
                .collect();
            let total = (q as u64).pow(free.len() as u32);
            let build = |mut idx: u64| {
                let mut rows = vec![vec![0u32; n]; r];
                for (i, &p) in pivots.iter().enumerate() {
                    rows[i][p] = 1;
                }
                for &(i, c) in &free {
                    rows[i][c] = (idx % q as u64) as u32;
                    idx /= q as u64;
                }
                rows
            };
            let vanishes = |idx: u64| {
                let rows = build(idx);
                let kernel = Matrix::from_raw_rows(&fs, n, &rows).nullspace_raw();
                let k = Matrix::from_raw_columns(&fs, n, &kernel);
                lifted.affine_substitute_raw(&k, &vec![0; n]).is_zero()
            };
            let hit = if opts.jobs == Some(1) {
                (0..total).find(|&i| vanishes(i))
            } else {
                (0..total).into_par_iter().find_first(|&i| vanishes(i))
            };
            if let Some(idx) = hit {
                return found(r, build(idx));
            }
        }
    }
    Ok(RankOutcome::NotFound { max_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn f(p: u32) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    fn reconstruct(parts: &[(MultiPoly, MultiPoly)], fs: &FieldSpec, n: usize) -> MultiPoly {
        parts
            .iter()
            .fold(MultiPoly::zero(fs, n), |acc, (l, r)| &acc + &(l * r))
    }

    #[test]
    fn divisor_examples() {
        let f5 = f(5);
        let p = parse_poly("x1*x2*x3", &f5, 3).unwrap();
        let (l, r) = linear_divisor(&p).unwrap().unwrap();
        assert_eq!(l, parse_poly("x1", &f5, 3).unwrap());
        assert_eq!(r, parse_poly("x2*x3", &f5, 3).unwrap());

        let f7 = f(7);
        let p = parse_poly("x1^3 + x2^3 + x3^3", &f7, 3).unwrap();
        assert_eq!(projective_forms(&f7, 3).len(), 57);
        assert_eq!(linear_divisor(&p).unwrap(), None);

        let p = parse_poly("x1^3", &f5, 2).unwrap();
        let (l, r) = linear_divisor(&p).unwrap().unwrap();
        assert_eq!((l.to_string(), r.to_string()), ("x1".into(), "x1^2".into()));

        assert_eq!(
            linear_divisor(&parse_poly("x1^2", &f5, 2).unwrap()).unwrap_err(),
            RankError::NotCubic
        );
    }

    #[test]
    fn decomposition_examples() {
        let f5 = f(5);
        let p = parse_poly("x1*x2*x3", &f5, 3).unwrap();
        let forms = Matrix::from_ints(&f5, &[vec![1, 0, 0]]).unwrap();
        let d = decompose_on_certificate(&p, &forms).unwrap();
        assert_eq!(d[0].1, parse_poly("x2*x3", &f5, 3).unwrap());

        let f7 = f(7);
        let p = parse_poly("x1^3 + x2^3 + x3^3", &f7, 3).unwrap();
        let forms = Matrix::from_ints(&f7, &[vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        let d = decompose_on_certificate(&p, &forms).unwrap();
        assert_eq!(d[0].1, parse_poly("x1^2 - x1*x2 + x2^2", &f7, 3).unwrap());
        assert_eq!(d[1].1, parse_poly("x3^2", &f7, 3).unwrap());
        assert_eq!(reconstruct(&d, &f7, 3), p);

        let p = parse_poly("x1*x3^2 + x2*x4^2", &f5, 4).unwrap();
        let forms = Matrix::from_ints(&f5, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0]]).unwrap();
        let d = decompose_on_certificate(&p, &forms).unwrap();
        assert_eq!(d[0].1, parse_poly("x3^2", &f5, 4).unwrap());
        assert_eq!(d[1].1, parse_poly("x4^2", &f5, 4).unwrap());

        let forms = Matrix::from_ints(&f5, &[vec![0, 0, 1, 0]]).unwrap();
        assert_eq!(
            decompose_on_certificate(&p, &forms).unwrap_err(),
            RankError::DoesNotVanish
        );
    }

    fn search(text: &str, p: u32, n: usize, ext: u32) -> RankCertificate {
        let fs = f(p);
        let poly = parse_poly(text, &fs, n).unwrap();
        match min_vanishing_codim(&poly, n, ext, &SumOptions::default()).unwrap() {
            RankOutcome::Found(c) => {
                let lifted = lift(&poly, ext).unwrap();
                assert_eq!(reconstruct(&c.decomposition, &c.field, n), lifted);
                c
            }
            RankOutcome::NotFound { .. } => panic!("no certificate for {text}"),
        }
    }

    #[test]
    fn search_examples() {
        let c = search("x1*x2*x3", 5, 3, 1);
        assert_eq!((c.r, c.paper_rank), (1, 2));
        assert_eq!(c.forms, Matrix::from_ints(&f(5), &[vec![1, 0, 0]]).unwrap());

        let c = search("x1^3 + x2^3 + x3^3", 7, 3, 1);
        assert_eq!((c.r, c.paper_rank), (2, 4));
        let f7 = f(7);
        assert_eq!(c.forms, Matrix::from_ints(&f7, &[vec![1, 0, 1], vec![0, 1, 0]]).unwrap());
        assert_eq!(c.w_basis.column(0), vec![f7.from_int(-1), f7.zero(), f7.one()]);

        let c = search("x1*x3*x4 + x2*x5*x6", 5, 6, 1);
        assert_eq!(c.r, 2);

        let c = search("0", 3, 2, 1);
        assert_eq!(c.r, 0);
    }

    #[test]
    fn extension_lowers_rank() {
        // t^3 - t - 1 is irreducible over F_3 and splits over F_27
        let base = search("x1^3 - x1*x2^2 - x2^3", 3, 2, 1);
        let ext = search("x1^3 - x1*x2^2 - x2^3", 3, 2, 3);
        assert_eq!((base.r, ext.r), (2, 1));
        assert_eq!(ext.field.q(), 27);
    }

    #[test]
    fn not_found_and_budget() {
        let fs = f(7);
        let p = parse_poly("x1^3 + x2^3 + x3^3", &fs, 3).unwrap();
        assert_eq!(
            min_vanishing_codim(&p, 1, 1, &SumOptions::default()).unwrap(),
            RankOutcome::NotFound { max_r: 1 }
        );
        assert!(matches!(
            min_vanishing_codim(&p, 2, 1, &SumOptions::with_budget(60)),
            Err(RankError::Sum(SumError::BudgetExceeded { .. }))
        ));
        assert_eq!(
            min_vanishing_codim(&p, 4, 1, &SumOptions::default()).unwrap_err(),
            RankError::BadMaxR { max_r: 4, nvars: 3 }
        );
    }
}
