//! Enumeration kernel: histogram of `P(v)` over all of `F^N`.
//!
//! Variables are eliminated in order `x1, x2, ..`. Level `j` holds the
//! specialized polynomial as a coefficient vector over a fixed list of
//! monomials in `x_{j+1}..x_N`, so specializing one variable is a sparse
//! linear map with precomputed targets. A level whose remaining monomials
//! are all constant contributes `q^{N-j}` copies of one value, and a
//! variable absent from the remaining monomials multiplies the weight by `q`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::field::FieldSpec;
use crate::poly::MultiPoly;

struct Level {
    /// exponent of the variable eliminated at this level, per monomial
    exp: Vec<u16>,
    /// index of the projected monomial in the next level
    next: Vec<u32>,
    next_len: usize,
    var_used: bool,
    /// only the constant monomial (or nothing) remains
    constant_only: bool,
}

pub(crate) struct Plan {
    field: FieldSpec,
    nvars: usize,
    levels: Vec<Level>,
    initial: Vec<u32>,
    /// powers[e][x] = x^e
    powers: Vec<Vec<u32>>,
}

impl Plan {
    pub(crate) fn new(poly: &MultiPoly) -> Plan {
        let field = poly.field().clone();
        let nvars = poly.nvars();
        let mut monos: Vec<Vec<u16>> = Vec::new();
        let mut initial = Vec::new();
        for (m, c) in poly.terms_raw() {
            monos.push(m.exponents().to_vec());
            initial.push(c);
        }
        let max_exp = monos
            .iter()
            .flat_map(|m| m.iter().copied())
            .max()
            .unwrap_or(0);
        let mut levels = Vec::with_capacity(nvars + 1);
        for j in 0..=nvars {
            let constant_only = monos.iter().all(|m| m.iter().all(|&e| e == 0));
            if j == nvars {
                levels.push(Level {
                    exp: vec![0; monos.len()],
                    next: Vec::new(),
                    next_len: 0,
                    var_used: false,
                    constant_only: true,
                });
                break;
            }
            let mut index: HashMap<Vec<u16>, u32> = HashMap::new();
            let mut projected: Vec<Vec<u16>> = Vec::new();
            let mut exp = Vec::with_capacity(monos.len());
            let mut next = Vec::with_capacity(monos.len());
            for m in &monos {
                exp.push(m[0]);
                let rest = m[1..].to_vec();
                let idx = *index.entry(rest.clone()).or_insert_with(|| {
                    projected.push(rest);
                    (projected.len() - 1) as u32
                });
                next.push(idx);
            }
            let var_used = exp.iter().any(|&e| e > 0);
            levels.push(Level {
                exp,
                next,
                next_len: projected.len(),
                var_used,
                constant_only,
            });
            monos = projected;
        }
        let q = field.q();
        let powers = (0..=max_exp)
            .map(|e| (0..q).map(|x| field.pow_raw(x, e as u64)).collect())
            .collect();
        Plan {
            field,
            nvars,
            levels,
            initial,
            powers,
        }
    }

    fn q(&self) -> u64 {
        self.field.q() as u64
    }

    /// Specialize level `j` at `x` into `out`.
    #[inline]
    fn step(&self, j: usize, coefs: &[u32], x: u32, out: &mut Vec<u32>) {
        let fs = &self.field;
        let level = &self.levels[j];
        out.clear();
        out.resize(level.next_len, 0);
        for (k, &c) in coefs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let t = fs.mul_raw(c, self.powers[level.exp[k] as usize][x as usize]);
            let slot = &mut out[level.next[k] as usize];
            *slot = fs.add_raw(*slot, t);
        }
    }

    fn run<F: Fn(u32) -> usize + Copy>(
        &self,
        j: usize,
        scratch: &mut [Vec<u32>],
        weight: u64,
        bin: F,
        hist: &mut [u64],
    ) {
        let fs = &self.field;
        let level = &self.levels[j];
        if level.constant_only {
            let value = scratch[j].first().copied().unwrap_or(0);
            let reps = self.q().pow((self.nvars - j) as u32);
            hist[bin(value)] += weight * reps;
            return;
        }
        if !level.var_used {
            let (head, tail) = scratch.split_at_mut(j + 1);
            self.step(j, &head[j], 0, &mut tail[0]);
            self.run(j + 1, scratch, weight * self.q(), bin, hist);
            return;
        }
        let q = self.field.q();
        if j + 1 == self.nvars {
            // univariate in the last variable
            let coefs = &scratch[j];
            for x in 0..q {
                let mut v = 0;
                for (k, &c) in coefs.iter().enumerate() {
                    if c != 0 {
                        v = fs.add_raw(v, fs.mul_raw(c, self.powers[level.exp[k] as usize][x as usize]));
                    }
                }
                hist[bin(v)] += weight;
            }
            return;
        }
        for x in 0..q {
            {
                let (head, tail) = scratch.split_at_mut(j + 1);
                self.step(j, &head[j], x, &mut tail[0]);
            }
            self.run(j + 1, scratch, weight, bin, hist);
        }
    }

    fn fresh_scratch(&self) -> Vec<Vec<u32>> {
        let mut s = vec![Vec::new(); self.nvars + 1];
        s[0] = self.initial.clone();
        s
    }

    /// Histogram of `bin(P(v))` over all `v`, using `bins` buckets.
    pub(crate) fn histogram<F>(&self, bins: usize, bin: F, jobs: Option<usize>) -> Vec<u64>
    where
        F: Fn(u32) -> usize + Copy + Send + Sync,
    {
        let mut scratch = self.fresh_scratch();
        // walk down unused leading variables to find the split level
        let mut j = 0;
        let mut weight = 1u64;
        while j < self.nvars && !self.levels[j].constant_only && !self.levels[j].var_used {
            let (head, tail) = scratch.split_at_mut(j + 1);
            self.step(j, &head[j], 0, &mut tail[0]);
            weight *= self.q();
            j += 1;
        }
        let sequential = jobs == Some(1);
        if j == self.nvars || self.levels[j].constant_only || j + 1 == self.nvars || sequential {
            let mut hist = vec![0u64; bins];
            self.run(j, &mut scratch, weight, bin, &mut hist);
            return hist;
        }
        // one block per value of the split variable; merge is integer addition
        let start = scratch[j].clone();
        let block = |acc: (Vec<u64>, Vec<Vec<u32>>), x: u32| {
            let (mut hist, mut local) = acc;
            self.step(j, &start, x, &mut local[j + 1]);
            self.run(j + 1, &mut local, weight, bin, &mut hist);
            (hist, local)
        };
        let work = || {
            (0..self.field.q())
                .into_par_iter()
                .fold(|| (vec![0u64; bins], self.fresh_scratch()), block)
                .map(|(h, _)| h)
                .reduce(
                    || vec![0u64; bins],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        a
                    },
                )
        };
        match jobs {
            Some(n) => pool(n).install(work),
            None => work(),
        }
    }
}

static POOLS: Lazy<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn pool(threads: usize) -> Arc<rayon::ThreadPool> {
    POOLS
        .lock()
        .unwrap()
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("thread pool"),
            )
        })
        .clone()
}

/// Runs `f` on a pool of `jobs` workers, or the global pool for `None`.
pub(crate) fn install<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(n) => pool(n).install(f),
        None => f(),
    }
}

/// Histogram of character classes `tr(P(v))` (length `p`).
pub(crate) fn class_histogram(poly: &MultiPoly, jobs: Option<usize>) -> Vec<u64> {
    let fs = poly.field();
    let plan = Plan::new(poly);
    let table = fs.class_table();
    plan.histogram(fs.p() as usize, |v| table[v as usize] as usize, jobs)
}

/// Histogram of values `P(v)` (length `q`), i.e. fiber sizes.
pub(crate) fn value_histogram(poly: &MultiPoly, jobs: Option<usize>) -> Vec<u64> {
    let plan = Plan::new(poly);
    plan.histogram(poly.field().q() as usize, |v| v as usize, jobs)
}

/// Straightforward odometer enumeration evaluating every term at every
/// point; the reference path for the kernel's tests.
#[cfg(test)]
pub(crate) fn naive_value_histogram(poly: &MultiPoly) -> Vec<u64> {
    let q = poly.field().q();
    let mut hist = vec![0u64; q as usize];
    let mut pt = vec![0u32; poly.nvars()];
    loop {
        hist[poly.evaluate_raw(&pt) as usize] += 1;
        if !crate::poly::odometer_step(&mut pt, q) {
            break;
        }
    }
    hist
}
