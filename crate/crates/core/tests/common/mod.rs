//! Test-side oracles: table-driven `F_{p^n}` arithmetic, brute-force
//! enumeration and Gaussian elimination mod `p`, written without the
//! library's field, kernel or linear algebra code.
#![allow(dead_code)]

use std::f64::consts::PI;

use biaslab::poly::MultiPoly;

/// `F_{p^n}`, elements indexed by base-`p` digits.
pub struct Gf {
    pub p: u32,
    pub n: u32,
    pub q: u32,
    add: Vec<u32>,
    mul: Vec<u32>,
    pub tr: Vec<u32>,
}

fn digits(x: u32, p: u32, n: u32) -> Vec<u32> {
    (0..n).map(|i| x / p.pow(i) % p).collect()
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

impl Gf {
    /// Tables for the first monic modulus (in digit order) whose quotient
    /// ring has no zero divisors.
    pub fn new(p: u32, n: u32) -> Gf {
        let q = p.pow(n);
        assert!(q <= 1024, "table oracle is for small fields");
        if n == 1 {
            return Gf::build(p, 1, &[0, 1]).expect("prime field");
        }
        (0..q)
            .find_map(|low| {
                let mut m = digits(low, p, n);
                m.push(1);
                Gf::build(p, n, &m)
            })
            .expect("irreducible modulus")
    }

    fn build(p: u32, n: u32, modulus: &[u32]) -> Option<Gf> {
        let q = p.pow(n);
        let mut add = vec![0; (q * q) as usize];
        let mut mul = vec![0; (q * q) as usize];
        for a in 0..q {
            let da = digits(a, p, n);
            for b in 0..q {
                let db = digits(b, p, n);
                let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = undigits(&s, p);
                let mut prod = vec![0u32; 2 * n as usize];
                for i in 0..n as usize {
                    for j in 0..n as usize {
                        prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
                    }
                }
                for k in (n as usize..2 * n as usize).rev() {
                    let c = prod[k];
                    if c == 0 {
                        continue;
                    }
                    for i in 0..=n as usize {
                        let idx = k - n as usize + i;
                        prod[idx] = (prod[idx] + p * p - c * modulus[i] % p) % p;
                    }
                }
                let v = undigits(&prod[..n as usize], p);
                if v == 0 && a != 0 && b != 0 {
                    return None;
                }
                mul[(a * q + b) as usize] = v;
            }
        }
        let mut gf = Gf {
            p,
            n,
            q,
            add,
            mul,
            tr: Vec::new(),
        };
        gf.tr = (0..q)
            .map(|x| {
                let mut acc = 0;
                let mut y = x;
                for _ in 0..n {
                    acc = gf.add(acc, y);
                    y = gf.pow(y, p);
                }
                assert!(acc < p, "trace lands in the prime field");
                acc
            })
            .collect();
        Some(gf)
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[(a * self.q + b) as usize]
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[(a * self.q + b) as usize]
    }

    pub fn pow(&self, a: u32, e: u32) -> u32 {
        (0..e).fold(1, |acc, _| self.mul(acc, a))
    }
}

/// Terms of a polynomial over a prime field as `(coefficient, exponents)`.
pub type Terms = Vec<(u32, Vec<u16>)>;

pub fn terms_of(p: &MultiPoly) -> Terms {
    assert_eq!(p.field().m(), 1, "oracle terms need a prime field");
    p.terms()
        .map(|(m, c)| (c.index(), m.exponents().to_vec()))
        .collect()
}

pub fn eval(gf: &Gf, terms: &Terms, pt: &[u32]) -> u32 {
    let mut acc = 0;
    for (c, e) in terms {
        let mut t = *c % gf.p;
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                t = gf.mul(t, pt[i]);
            }
        }
        acc = gf.add(acc, t);
    }
    acc
}

/// Calls `f` on every point of `F^n` (first coordinate fastest).
pub fn for_each_point(q: u32, n: usize, mut f: impl FnMut(&[u32])) {
    let mut pt = vec![0u32; n];
    loop {
        f(&pt);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            pt[i] += 1;
            if pt[i] < q {
                break;
            }
            pt[i] = 0;
            i += 1;
        }
    }
}

/// Trace-class counts of `P` over `F_{p^n}^N`.
pub fn class_counts(gf: &Gf, terms: &Terms, nvars: usize) -> Vec<u64> {
    let mut counts = vec![0u64; gf.p as usize];
    for_each_point(gf.q, nvars, |pt| {
        counts[gf.tr[eval(gf, terms, pt) as usize] as usize] += 1;
    });
    counts
}

/// Value histogram of `P` over `F_p^N`.
pub fn fibers(gf: &Gf, terms: &Terms, nvars: usize) -> Vec<u64> {
    let mut h = vec![0u64; gf.q as usize];
    for_each_point(gf.q, nvars, |pt| h[eval(gf, terms, pt) as usize] += 1);
    h
}

/// `|sum_j c_j zeta_p^j|` by direct complex summation.
pub fn magnitude(counts: &[u64]) -> f64 {
    let p = counts.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, &c) in counts.iter().enumerate() {
        let t = 2.0 * PI * j as f64 / p;
        re += c as f64 * t.cos();
        im += c as f64 * t.sin();
    }
    re.hypot(im)
}

pub fn all_equal(counts: &[u64]) -> bool {
    counts.windows(2).all(|w| w[0] == w[1])
}

pub fn inv_mod(a: u32, p: u32) -> u32 {
    (1..p).find(|&x| a * x % p == 1).expect("invertible")
}

/// Row-reduces in place mod `p`; returns the pivot columns.
pub fn row_reduce(m: &mut [Vec<u32>], p: u32) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(k) = (r..rows).find(|&i| !m[i][c].is_multiple_of(p)) else {
            continue;
        };
        m.swap(r, k);
        let inv = inv_mod(m[r][c] % p, p);
        for x in m[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p * p - f * m[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank_mod(m: &[Vec<u32>], p: u32) -> usize {
    let mut m = m.to_vec();
    row_reduce(&mut m, p).len()
}

/// Gram matrix `B(e_i, e_j) = Q(e_i + e_j) - Q(e_i) - Q(e_j)` of a
/// quadratic given by `(i, j, c)` for `c x_i x_j`, `i <= j`.
pub fn gram(coeffs: &[(usize, usize, u32)], n: usize, p: u32) -> Vec<Vec<u32>> {
    let mut g = vec![vec![0u32; n]; n];
    for &(i, j, c) in coeffs {
        if i == j {
            g[i][i] = (g[i][i] + 2 * c) % p;
        } else {
            g[i][j] = (g[i][j] + c) % p;
            g[j][i] = (g[j][i] + c) % p;
        }
    }
    g
}

/// Exponent vectors of degree `d` in `n` variables.
pub fn monomials(n: usize, d: u16) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut e = vec![0u16; n];
    fn rec(i: usize, left: u16, e: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if i + 1 == e.len() {
            e[i] = left;
            out.push(e.clone());
            return;
        }
        for k in 0..=left {
            e[i] = k;
            rec(i + 1, left - k, e, out);
        }
    }
    if n > 0 {
        rec(0, d, &mut e, &mut out);
    }
    out
}

/// Polynomial text accepted by the parser.
pub fn to_text(terms: &Terms) -> String {
    let parts: Vec<String> = terms
        .iter()
        .filter(|(c, _)| *c != 0)
        .map(|(c, e)| {
            let mut s = c.to_string();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    s.push_str(&format!("*x{}^{}", i + 1, k));
                }
            }
            s
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Basis of `{v : m v = 0}` mod `p`.
pub fn nullspace(m: &[Vec<u32>], cols: usize, p: u32) -> Vec<Vec<u32>> {
    let mut r = m.to_vec();
    let pivots = row_reduce(&mut r, p);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0u32; cols];
            v[free] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - r[row][free] % p) % p;
            }
            v
        })
        .collect()
}
