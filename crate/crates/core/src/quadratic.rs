//! Quadratic forms in odd characteristic: Gram matrix, radical, rank,
//! canonical shape and closed-form character sums.

use thiserror::Error;

use crate::char_sum::{BiasTriple, CharacterSum, SumError};
use crate::field::{build_tower, FieldElement, FieldError, FieldSpec, MAX_FIELD_ORDER};
use crate::linalg::Matrix;
use crate::poly::{Monomial, MultiPoly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("polynomial has a term of degree {0}, expected at most 2")]
    NotQuadratic(u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sum(#[from] SumError),
}

/// `Q(v) = sum_{i <= j} a_ij v_i v_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticForm {
    field: FieldSpec,
    dim: usize,
    /// row-major `dim x dim`, only `i <= j` used
    coeffs: Vec<u32>,
}

impl QuadraticForm {
    pub fn zero(field: &FieldSpec, dim: usize) -> Self {
        QuadraticForm {
            field: field.clone(),
            dim,
            coeffs: vec![0; dim * dim],
        }
    }

    /// From a polynomial whose terms all have degree exactly 2.
    pub fn from_poly(poly: &MultiPoly) -> Result<Self, QuadError> {
        let (q, l, c) = split_quadratic(poly)?;
        if l.iter().any(|&x| x != 0) {
            return Err(QuadError::NotQuadratic(1));
        }
        if c != 0 {
            return Err(QuadError::NotQuadratic(0));
        }
        Ok(q)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient `a_ij` (`i <= j`, 0-based).
    pub fn coefficient(&self, i: usize, j: usize) -> FieldElement {
        let (i, j) = (i.min(j), i.max(j));
        self.field.wrap(self.coeffs[i * self.dim + j])
    }

    pub fn set_coefficient(&mut self, i: usize, j: usize, c: FieldElement) -> Result<(), QuadError> {
        self.field.check(c)?;
        if i >= self.dim || j >= self.dim {
            return Err(QuadError::ShapeMismatch(format!("index ({i},{j}) out of range")));
        }
        let (i, j) = (i.min(j), i.max(j));
        self.coeffs[i * self.dim + j] = c.index();
        Ok(())
    }

    pub(crate) fn coeff_raw(&self, i: usize, j: usize) -> u32 {
        self.coeffs[i.min(j) * self.dim + i.max(j)]
    }

    /// `G_ij = a_ij` off the diagonal, `G_ii = 2 a_ii`.
    pub fn gram(&self) -> Matrix {
        let fs = &self.field;
        let mut g = Matrix::zeros(fs, self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.coeff_raw(i, j);
                g.set_raw(i, j, if i == j { fs.add_raw(a, a) } else { a });
            }
        }
        g
    }

    pub(crate) fn eval_raw(&self, v: &[u32]) -> u32 {
        let fs = &self.field;
        let mut acc = 0;
        for i in 0..self.dim {
            if v[i] == 0 {
                continue;
            }
            let mut row = 0;
            for j in i..self.dim {
                row = fs.add_raw(row, fs.mul_raw(self.coeffs[i * self.dim + j], v[j]));
            }
            acc = fs.add_raw(acc, fs.mul_raw(v[i], row));
        }
        acc
    }

    pub fn evaluate(&self, v: &[FieldElement]) -> Result<FieldElement, QuadError> {
        if v.len() != self.dim {
            return Err(QuadError::ShapeMismatch(format!(
                "point has {} coordinates, form has dimension {}",
                v.len(),
                self.dim
            )));
        }
        for &x in v {
            self.field.check(x)?;
        }
        let raw: Vec<u32> = v.iter().map(|x| x.index()).collect();
        Ok(self.field.wrap(self.eval_raw(&raw)))
    }

    /// `B(u, v) = Q(u + v) - Q(u) - Q(v) = u^T G v`.
    pub(crate) fn bilinear_raw(&self, u: &[u32], v: &[u32]) -> u32 {
        let fs = &self.field;
        let mut acc = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.coeff_raw(i, j);
                if a == 0 || u[i] == 0 || v[j] == 0 {
                    continue;
                }
                let g = if i == j { fs.add_raw(a, a) } else { a };
                acc = fs.add_raw(acc, fs.mul_raw(g, fs.mul_raw(u[i], v[j])));
            }
        }
        acc
    }

    pub fn to_poly(&self) -> MultiPoly {
        let mut p = MultiPoly::zero(&self.field, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let mut e = vec![0u16; self.dim];
                e[i] += 1;
                e[j] += 1;
                p.add_term_raw(Monomial::new(e), self.coeffs[i * self.dim + j]);
            }
        }
        p
    }

    /// `Q(A w)` for an `N x M` matrix `A`.
    pub fn compose(&self, a: &Matrix) -> Result<QuadraticForm, QuadError> {
        Self::from_poly(&self.to_poly().linear_substitute(a)?)
    }

    pub fn rank(&self) -> usize {
        self.gram().rank()
    }
}

/// Splits a polynomial of degree at most 2 into its quadratic form, linear
/// covector and constant term.
pub fn split_quadratic(poly: &MultiPoly) -> Result<(QuadraticForm, Vec<u32>, u32), QuadError> {
    let n = poly.nvars();
    let mut q = QuadraticForm::zero(poly.field(), n);
    let mut l = vec![0u32; n];
    let mut c = 0;
    for (m, coeff) in poly.terms_raw() {
        let e = m.exponents();
        let vars: Vec<usize> = (0..n).filter(|&i| e[i] > 0).collect();
        match m.degree() {
            0 => c = coeff,
            1 => l[vars[0]] = coeff,
            2 => {
                let (i, j) = (vars[0], *vars.last().unwrap());
                q.coeffs[i * n + j] = coeff;
            }
            d => return Err(QuadError::NotQuadratic(d)),
        }
    }
    Ok((q, l, c))
}

/// Basis of the radical `P^perp` (null space of the Gram matrix) and the rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radical {
    pub basis: Vec<Vec<FieldElement>>,
    pub rank: usize,
}

pub fn radical(q: &QuadraticForm) -> Radical {
    let basis = q.gram().nullspace();
    Radical {
        rank: q.dim - basis.len(),
        basis,
    }
}

/// What remains of the nondegenerate part after splitting off hyperbolic
/// planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residual {
    None,
    /// `alpha * x^2` with `alpha` either 1 or the field's fixed nonsquare.
    Diagonal(FieldElement),
    /// `x^2 - eps * y^2` with `eps` the fixed nonsquare: the anisotropic
    /// plane, which is not a hyperbolic pair over `k`.
    AnisotropicPlane(FieldElement),
}

impl Residual {
    pub fn dim(&self) -> usize {
        match self {
            Residual::None => 0,
            Residual::Diagonal(_) => 1,
            Residual::AnisotropicPlane(_) => 2,
        }
    }
}

/// `Q(T v) = sum_{i < t} v_i v_{t+i} + residual(v_{2t}, ..)` with the
/// radical coordinates last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalQuadratic {
    pub t: usize,
    pub residual: Residual,
    pub rank: usize,
    /// columns: `v_1..v_t, w_1..w_t`, residual vectors, radical basis
    pub transform: Matrix,
}

impl CanonicalQuadratic {
    pub fn alpha(&self) -> Option<FieldElement> {
        match self.residual {
            Residual::Diagonal(a) => Some(a),
            _ => None,
        }
    }

    /// The canonical expression as a polynomial in `N` variables.
    pub fn canonical_poly(&self) -> MultiPoly {
        let fs = self.transform.field();
        let n = self.transform.cols();
        let mut p = MultiPoly::zero(fs, n);
        let mono = |pairs: &[(usize, u16)]| {
            let mut e = vec![0u16; n];
            for &(i, k) in pairs {
                e[i] += k;
            }
            Monomial::new(e)
        };
        for i in 0..self.t {
            p.add_term_raw(mono(&[(i, 1), (self.t + i, 1)]), 1);
        }
        let r0 = 2 * self.t;
        match self.residual {
            Residual::None => {}
            Residual::Diagonal(a) => p.add_term_raw(mono(&[(r0, 2)]), a.index()),
            Residual::AnisotropicPlane(eps) => {
                p.add_term_raw(mono(&[(r0, 2)]), 1);
                p.add_term_raw(mono(&[(r0 + 1, 2)]), fs.neg_raw(eps.index()));
            }
        }
        p
    }
}

struct Splitter<'a> {
    q: &'a QuadraticForm,
    fs: FieldSpec,
    hyperbolic: Vec<(Vec<u32>, Vec<u32>)>,
    diagonal: Vec<(Vec<u32>, u32)>,
}

impl Splitter<'_> {
    fn axpy(&self, a: u32, x: &[u32], y: &[u32]) -> Vec<u32> {
        let fs = &self.fs;
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| fs.add_raw(fs.mul_raw(a, xi), yi))
            .collect()
    }

    fn scaled(&self, a: u32, x: &[u32]) -> Vec<u32> {
        x.iter().map(|&xi| self.fs.mul_raw(a, xi)).collect()
    }

    /// Given isotropic `v` and `w` with `B(v, w) != 0`, records the
    /// hyperbolic pair `(v, w')` with `B(v, w') = 1`, `Q(w') = 0`.
    fn hyperbolic_pair(&mut self, v: Vec<u32>, w: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let fs = self.fs.clone();
        let b = self.q.bilinear_raw(&v, w);
        let w = self.scaled(fs.inv_raw(b), w);
        let qw = self.q.eval_raw(&w);
        let w2 = self.axpy(fs.neg_raw(qw), &v, &w);
        self.hyperbolic.push((v.clone(), w2.clone()));
        (v, w2)
    }

    /// Projects `u` onto the orthogonal complement of a hyperbolic pair.
    fn project_hyperbolic(&self, u: &[u32], v: &[u32], w: &[u32]) -> Vec<u32> {
        let fs = &self.fs;
        let bw = self.q.bilinear_raw(u, w);
        let bv = self.q.bilinear_raw(u, v);
        let u = self.axpy(fs.neg_raw(bw), v, u);
        self.axpy(fs.neg_raw(bv), w, &u)
    }

    /// Hyperbolic planes first, then orthogonal diagonal vectors; whatever
    /// is left pairs trivially with everything.
    fn split(&mut self, mut rest: Vec<Vec<u32>>) {
        let fs = self.fs.clone();
        loop {
            let hyper = (0..rest.len()).find_map(|i| {
                if self.q.eval_raw(&rest[i]) != 0 {
                    return None;
                }
                (0..rest.len())
                    .find(|&j| j != i && self.q.bilinear_raw(&rest[i], &rest[j]) != 0)
                    .map(|j| (i, j))
            });
            if let Some((i, j)) = hyper {
                let (v, w) = self.hyperbolic_pair(rest[i].clone(), &rest[j].clone());
                rest = rest
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, u)| self.project_hyperbolic(u, &v, &w))
                    .collect();
                continue;
            }
            let Some(i) = (0..rest.len()).find(|&i| self.q.eval_raw(&rest[i]) != 0) else {
                return;
            };
            let u = rest.remove(i);
            let d = self.q.eval_raw(&u);
            let buu_inv = fs.inv_raw(fs.add_raw(d, d));
            rest = rest
                .iter()
                .map(|x| {
                    let c = fs.mul_raw(self.q.bilinear_raw(x, &u), buu_inv);
                    self.axpy(fs.neg_raw(c), &u, x)
                })
                .collect();
            self.diagonal.push((u, d));
        }
    }

    /// Turns isotropic diagonal pairs and triples into hyperbolic planes
    /// until at most two anisotropic diagonal terms remain.
    fn pair_diagonals(&mut self) {
        let fs = self.fs.clone();
        loop {
            let n = self.diagonal.len();
            let pair = (0..n).find_map(|i| {
                (i + 1..n).find_map(|j| {
                    let (di, dj) = (self.diagonal[i].1, self.diagonal[j].1);
                    fs.sqrt_raw(fs.neg_raw(fs.mul_raw(dj, fs.inv_raw(di))))
                        .map(|a| (i, j, a))
                })
            });
            if let Some((i, j, a)) = pair {
                // a^2 d_i + d_j = 0, so x = a u_i + u_j is isotropic
                let ui = self.diagonal[i].0.clone();
                let uj = self.diagonal[j].0.clone();
                let x = self.axpy(a, &ui, &uj);
                debug_assert_eq!(self.q.eval_raw(&x), 0);
                self.hyperbolic_pair(x, &ui);
                self.diagonal.remove(j);
                self.diagonal.remove(i);
                continue;
            }
            if n < 3 {
                return;
            }
            // any ternary form is isotropic: solve d0 a^2 + d1 b^2 = -d2
            let (u0, d0) = self.diagonal[0].clone();
            let (u1, d1) = self.diagonal[1].clone();
            let (u2, d2) = self.diagonal[2].clone();
            let target = fs.neg_raw(d2);
            let (a, b) = (0..fs.q())
                .find_map(|a| {
                    let rem = fs.sub_raw(target, fs.mul_raw(d0, fs.mul_raw(a, a)));
                    fs.sqrt_raw(fs.mul_raw(rem, fs.inv_raw(d1))).map(|b| (a, b))
                })
                .expect("ternary forms over finite fields are isotropic");
            let x = self.axpy(a, &u0, &self.axpy(b, &u1, &u2));
            debug_assert_eq!(self.q.eval_raw(&x), 0);
            self.hyperbolic_pair(x, &u2);
            // the complement of the plane inside span(u0, u1, u2)
            let z = self.axpy(
                fs.neg_raw(fs.mul_raw(a, d0)),
                &u1,
                &self.scaled(fs.mul_raw(b, d1), &u0),
            );
            let dz = self.q.eval_raw(&z);
            self.diagonal.drain(0..3);
            self.diagonal.insert(0, (z, dz));
        }
    }
}

/// Canonical coordinates; pivots are chosen lowest index first, so the
/// transform is deterministic.
pub fn canonicalize(q: &QuadraticForm) -> CanonicalQuadratic {
    let fs = q.field.clone();
    let n = q.dim;
    let mut s = Splitter {
        q,
        fs: fs.clone(),
        hyperbolic: Vec::new(),
        diagonal: Vec::new(),
    };
    let basis: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 1;
            e
        })
        .collect();
    s.split(basis);
    s.pair_diagonals();

    let eps = fs.nonsquare().index();
    let (residual, residual_vectors) = match s.diagonal.as_slice() {
        [] => (Residual::None, vec![]),
        [(u, d)] => {
            // scale so that the coefficient is 1 or eps
            let (target, c2) = if fs.is_square_raw(*d) {
                (1, fs.inv_raw(*d))
            } else {
                (eps, fs.mul_raw(eps, fs.inv_raw(*d)))
            };
            let c = fs.sqrt_raw(c2).expect("ratio is a square");
            (Residual::Diagonal(fs.wrap(target)), vec![s.scaled(c, u)])
        }
        [(u0, d0), (u1, d1)] => {
            // a vector of value 1, then its orthogonal complement scaled to -eps
            let (a, b) = (0..fs.q())
                .find_map(|a| {
                    let rem = fs.sub_raw(1, fs.mul_raw(*d0, fs.mul_raw(a, a)));
                    fs.sqrt_raw(fs.mul_raw(rem, fs.inv_raw(*d1))).map(|b| (a, b))
                })
                .expect("nondegenerate binary forms represent 1");
            let e1 = s.axpy(a, u0, &s.scaled(b, u1));
            let e2 = s.axpy(
                fs.neg_raw(fs.mul_raw(a, *d0)),
                u1,
                &s.scaled(fs.mul_raw(b, *d1), u0),
            );
            let qe2 = q.eval_raw(&e2);
            let c = fs
                .sqrt_raw(fs.mul_raw(fs.neg_raw(eps), fs.inv_raw(qe2)))
                .expect("discriminant matches the anisotropic plane");
            (
                Residual::AnisotropicPlane(fs.wrap(eps)),
                vec![e1, s.scaled(c, &e2)],
            )
        }
        _ => unreachable!("at most two diagonal terms survive pairing"),
    };

    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(n);
    columns.extend(s.hyperbolic.iter().map(|(v, _)| v.clone()));
    columns.extend(s.hyperbolic.iter().map(|(_, w)| w.clone()));
    columns.extend(residual_vectors);
    let t = s.hyperbolic.len();
    let rank = columns.len();
    columns.extend(q.gram().nullspace_raw());
    debug_assert_eq!(columns.len(), n);
    CanonicalQuadratic {
        t,
        residual,
        rank,
        transform: Matrix::from_raw_columns(&fs, n, &columns),
    }
}

/// Closed-form value of `a_n(Q + l + c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFormSum {
    pub level: u32,
    pub rank: usize,
    /// `Some(2s)` with `|a_n| = q^s`; `None` when the sum vanishes.
    pub twice_exponent: Option<u64>,
    /// The full count vector, when the domain and extension are small
    /// enough to represent it.
    pub sum: Option<CharacterSum>,
}

impl ClosedFormSum {
    pub fn is_zero(&self) -> bool {
        self.twice_exponent.is_none()
    }

    pub fn magnitude(&self, q: u32) -> f64 {
        match self.twice_exponent {
            None => 0.0,
            Some(e) => (q as f64).powf(e as f64 / 2.0),
        }
    }
}

/// Count vector of `x*y` over a field of order `big_q`.
fn hyperbolic_counts(p: usize, big_q: u64) -> Vec<u64> {
    let per_class = big_q / p as u64;
    let mut c = vec![per_class * (big_q - 1); p];
    c[0] = 2 * big_q - 1 + (per_class - 1) * (big_q - 1);
    c
}

/// Count vector of the anisotropic plane `x^2 - eps y^2` over `k_n`.
fn anisotropic_counts(p: usize, big_q: u64, n: u32) -> Vec<u64> {
    if n.is_multiple_of(2) {
        // eps becomes a square
        return hyperbolic_counts(p, big_q);
    }
    let per_class = big_q / p as u64;
    let mut c = vec![per_class * (big_q + 1); p];
    c[0] = 1 + (per_class - 1) * (big_q + 1);
    c
}

/// Closed-form `a_n(P)` for `P` of degree at most 2.
pub fn closed_form_poly(poly: &MultiPoly, n: u32) -> Result<ClosedFormSum, QuadError> {
    let (q, l, c) = split_quadratic(poly)?;
    closed_form_raw(&q, &l, c, n)
}

/// Closed-form `a(Q, l) = sum_v psi(Q(v) + l(v))` over `k`.
pub fn closed_form_sum(q: &QuadraticForm, l: &[FieldElement]) -> Result<ClosedFormSum, QuadError> {
    if l.len() != q.dim {
        return Err(QuadError::ShapeMismatch(format!(
            "covector has length {}, form has dimension {}",
            l.len(),
            q.dim
        )));
    }
    for &x in l {
        q.field.check(x)?;
    }
    let raw: Vec<u32> = l.iter().map(|x| x.index()).collect();
    closed_form_raw(q, &raw, 0, 1)
}

pub(crate) fn closed_form_raw(
    q: &QuadraticForm,
    l: &[u32],
    constant: u32,
    n: u32,
) -> Result<ClosedFormSum, QuadError> {
    if n == 0 {
        return Err(FieldError::ZeroDegree.into());
    }
    let fs = &q.field;
    let p = fs.p() as usize;
    let g = q.gram();
    let dim = q.dim;
    // l must vanish on the radical, i.e. G v0 = l is solvable
    let big_q = (fs.q() as u64).checked_pow(n);
    let domain = big_q.and_then(|b| b.checked_pow(dim as u32));
    let Some(v0) = g.solve_raw(l) else {
        // every class is hit equally often
        let sum = domain
            .map(|d| CharacterSum::from_counts(fs, n, dim, vec![d / p as u64; p]))
            .transpose()?;
        return Ok(ClosedFormSum {
            level: n,
            rank: g.rank(),
            twice_exponent: None,
            sum,
        });
    };
    let canon = canonicalize(q);
    let r = canon.rank;
    let twice_exponent = n as u64 * (2 * dim - r) as u64;
    // Q(v) + l(v) + c = Q(v + v0) - Q(v0) + c
    let shift = fs.sub_raw(constant, q.eval_raw(&v0));
    let sum = match (big_q, domain) {
        (Some(big_q), Some(_)) if big_q <= MAX_FIELD_ORDER => {
            let mut cs = CharacterSum::from_counts(fs, n, 0, point_mass(p, 1))?;
            let hyper = CharacterSum::from_counts(fs, n, 2, hyperbolic_counts(p, big_q))?;
            for _ in 0..canon.t {
                cs = cs.convolve(&hyper)?;
            }
            match canon.residual {
                Residual::None => {}
                Residual::Diagonal(alpha) => {
                    cs = cs.convolve(&gauss_counts(fs, alpha, n)?)?;
                }
                Residual::AnisotropicPlane(_) => {
                    let counts = anisotropic_counts(p, big_q, n);
                    cs = cs.convolve(&CharacterSum::from_counts(fs, n, 2, counts)?)?;
                }
            }
            let free = CharacterSum::from_counts(fs, n, 1, point_mass(p, big_q))?;
            for _ in 0..dim - r {
                cs = cs.convolve(&free)?;
            }
            let class = (n as u64 * fs.class_raw(shift) as u64 % p as u64) as u32;
            Some(cs.rotate(class))
        }
        _ => None,
    };
    Ok(ClosedFormSum {
        level: n,
        rank: r,
        twice_exponent: Some(twice_exponent),
        sum,
    })
}

fn point_mass(p: usize, mass: u64) -> Vec<u64> {
    let mut v = vec![0; p];
    v[0] = mass;
    v
}

/// Count vector of the Gauss sum `sum_{x in k_n} psi_n(alpha x^2)`,
/// by direct summation over `k_n`.
pub fn gauss_counts(fs: &FieldSpec, alpha: FieldElement, n: u32) -> Result<CharacterSum, QuadError> {
    fs.check(alpha)?;
    let (top, emb) = build_tower(fs, n)?;
    let a = emb.embed_raw(alpha.index());
    let mut counts = vec![0u64; fs.p() as usize];
    for x in 0..top.q() {
        counts[top.class_raw(top.mul_raw(a, top.mul_raw(x, x))) as usize] += 1;
    }
    Ok(CharacterSum::from_counts(fs, n, 1, counts)?)
}

/// `b_n(Q)` from the closed form: `|a_n| = q^{n(N - r/2)}`, so `b_n = r`.
pub fn quadratic_bias(q: &QuadraticForm, n: u32) -> Result<BiasTriple, QuadError> {
    if n == 0 {
        return Err(FieldError::ZeroDegree.into());
    }
    let r = q.rank() as f64;
    let ln_qn = n as f64 * (q.field.q() as f64).ln();
    let ln_mag = ln_qn * (q.dim as f64 - r / 2.0);
    let magnitude = ln_mag.exp();
    Ok(BiasTriple {
        magnitude,
        magnitude_error_bound: magnitude * f64::EPSILON * 4.0,
        btilde: (-ln_qn * r / 2.0).exp(),
        b: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::char_sum::{count_vector, SumOptions};
    use crate::linalg::dot_raw;
    use crate::field::build_field;
    use crate::poly::{odometer_step, parse_poly};

    fn form(text: &str, fs: &FieldSpec, n: usize) -> QuadraticForm {
        QuadraticForm::from_poly(&parse_poly(text, fs, n).unwrap()).unwrap()
    }

    fn each_point(fs: &FieldSpec, n: usize, mut f: impl FnMut(&[u32])) {
        let mut pt = vec![0u32; n];
        loop {
            f(&pt);
            if !odometer_step(&mut pt, fs.q()) {
                break;
            }
        }
    }

    #[test]
    fn gram_matches_polarization() {
        let f5 = FieldSpec::prime(5).unwrap();
        let q = form("x1^2 + 3*x1*x2 + 4*x2*x3 + 2*x3^2", &f5, 3);
        each_point(&f5, 3, |u| {
            each_point(&f5, 3, |v| {
                let s: Vec<u32> = u.iter().zip(v).map(|(&a, &b)| f5.add_raw(a, b)).collect();
                let pol = f5.sub_raw(f5.sub_raw(q.eval_raw(&s), q.eval_raw(u)), q.eval_raw(v));
                assert_eq!(pol, q.bilinear_raw(u, v));
                assert_eq!(pol, dot_raw(&f5, u, &q.gram().mul_vec_raw(v)));
            })
        });
    }

    #[test]
    fn radical_examples() {
        let f3 = FieldSpec::prime(3).unwrap();
        let r = radical(&form("x1^2", &f3, 3));
        assert_eq!(r.rank, 1);
        let raw: Vec<Vec<u32>> = r.basis.iter().map(|v| v.iter().map(|x| x.index()).collect()).collect();
        assert_eq!(raw, vec![vec![0, 1, 0], vec![0, 0, 1]]);
        let f5 = FieldSpec::prime(5).unwrap();
        let r = radical(&form("x1*x2 + x3*x4", &f5, 4));
        assert_eq!((r.rank, r.basis.len()), (4, 0));
        assert_eq!(radical(&form("x1^2 + x1*x2", &f5, 2)).rank, 2);
    }

    #[test]
    fn radical_matches_definition() {
        let f3 = FieldSpec::prime(3).unwrap();
        for text in ["x1^2 + x2^2 + 2*x1*x2", "x1*x3", "x1^2 + x2*x3", "0"] {
            let q = form(text, &f3, 3);
            let g = q.gram();
            each_point(&f3, 3, |v| {
                let in_kernel = g.mul_vec_raw(v).iter().all(|&x| x == 0);
                let mut invariant = true;
                each_point(&f3, 3, |w| {
                    let s: Vec<u32> = v.iter().zip(w).map(|(&a, &b)| f3.add_raw(a, b)).collect();
                    invariant &= q.eval_raw(&s) == q.eval_raw(w);
                });
                assert_eq!(in_kernel, invariant, "{text} {v:?}");
            });
        }
    }

    #[test]
    fn canonical_examples() {
        let f5 = FieldSpec::prime(5).unwrap();
        let c = canonicalize(&form("x1*x2", &f5, 2));
        assert_eq!((c.t, c.residual), (1, Residual::None));
        assert_eq!(c.transform, Matrix::identity(&f5, 2));
        let c = canonicalize(&form("x1^2 + x1*x2", &f5, 2));
        assert_eq!((c.t, c.alpha(), c.rank), (1, None, 2));
        let c = canonicalize(&form("x1^2", &f5, 1));
        assert_eq!((c.t, c.alpha(), c.rank), (0, Some(f5.one()), 1));
        let c = canonicalize(&form("2*x1^2", &f5, 1));
        assert_eq!(c.alpha(), Some(f5.nonsquare()));
        // x^2 + y^2 is anisotropic over F_3
        let f3 = FieldSpec::prime(3).unwrap();
        let c = canonicalize(&form("x1^2 + x2^2", &f3, 2));
        assert_eq!(c.t, 0);
        assert_eq!(c.residual, Residual::AnisotropicPlane(f3.nonsquare()));
    }

    fn check_canonical(q: &QuadraticForm) {
        let c = canonicalize(q);
        assert!(c.transform.inverse().is_some(), "{:?}", q);
        assert_eq!(c.rank, q.rank());
        assert_eq!(c.rank, 2 * c.t + c.residual.dim());
        let composed = q.compose(&c.transform).unwrap().to_poly();
        assert_eq!(composed, c.canonical_poly(), "{}", q.to_poly());
    }

    #[test]
    fn canonical_form_exhaustive_f3() {
        let f3 = FieldSpec::prime(3).unwrap();
        let idx: Vec<(usize, usize)> = (0..3).flat_map(|i| (i..3).map(move |j| (i, j))).collect();
        each_point(&f3, idx.len(), |cs| {
            let mut q = QuadraticForm::zero(&f3, 3);
            for (&(i, j), &c) in idx.iter().zip(cs) {
                q.set_coefficient(i, j, f3.wrap(c)).unwrap();
            }
            check_canonical(&q);
        });
    }

    #[test]
    fn canonical_form_extension_field() {
        let f9 = build_field(3, 2, None).unwrap();
        for text in ["x1^2 + g*x2^2 + x3^2 + x4^2", "g*x1*x2 + x3^2 + [2,1]*x1*x3", "x1^2 + x2^2"] {
            check_canonical(&form(text, &f9, 4));
        }
    }

    #[test]
    fn closed_form_examples() {
        let f3 = FieldSpec::prime(3).unwrap();
        let q = form("x1*x2", &f3, 2);
        let cf = closed_form_sum(&q, &[f3.zero(), f3.zero()]).unwrap();
        assert_eq!(cf.twice_exponent, Some(2));
        assert_eq!(cf.sum.unwrap().counts(), &[5, 2, 2]);
        let q = form("x1^2", &f3, 3);
        let cf = closed_form_sum(&q, &[f3.zero(), f3.one(), f3.zero()]).unwrap();
        assert!(cf.is_zero());
        let f5 = FieldSpec::prime(5).unwrap();
        let cf = closed_form_sum(&form("x1^2", &f5, 1), &[f5.zero()]).unwrap();
        assert_eq!(cf.twice_exponent, Some(1));
        assert!((cf.magnitude(5) - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(cf.sum.unwrap().counts(), &[1, 2, 0, 0, 2]);
    }

    #[test]
    fn closed_form_counts_match_enumeration() {
        let cases = [
            (3, 1, 3, "x1^2 + x2^2 + x1 + 2*x3 + 1", 1),
            (3, 1, 2, "x1^2 + x2^2 + x2", 1),
            (3, 1, 2, "x1^2 + x2^2", 2),
            (3, 1, 2, "x1^2 + x2^2", 3),
            (5, 1, 3, "2*x1^2 + x1*x2 + 3*x3 + 4", 2),
            (3, 2, 2, "g*x1^2 + x1*x2 + [1,1]*x2", 1),
            (7, 1, 4, "x1*x2 + 3*x3^2 + x4^2 + x1", 1),
        ];
        for (p, m, nv, text, n) in cases {
            let fs = build_field(p, m, None).unwrap();
            let poly = parse_poly(text, &fs, nv).unwrap();
            let cf = closed_form_poly(&poly, n).unwrap();
            let oracle = count_vector(&poly, n, &SumOptions::default()).unwrap();
            assert_eq!(cf.sum.as_ref(), Some(&oracle), "{text} n={n}");
            let expected = oracle.magnitude().value;
            assert!((cf.magnitude(fs.q()) - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn bias_law() {
        let f5 = FieldSpec::prime(5).unwrap();
        let b = quadratic_bias(&form("x1*x2 + x3*x4", &f5, 4), 1).unwrap();
        assert_eq!(b.b, 4.0);
        assert!((b.magnitude - 25.0).abs() < 1e-9);
        let b = quadratic_bias(&form("x1^2", &f5, 1), 2).unwrap();
        assert_eq!(b.b, 1.0);
        assert!((b.magnitude - 5.0).abs() < 1e-9);
    }
}
