//! Empirical probes: first-hit scans for `|a_n| >= c`, bias scans over
//! low-rank cubics, product polynomials, the square of a split quadratic,
//! and the suites behind `biaslab verify`.
//!
//! Reports serialize deterministically: maps are ordered, floats use the
//! shortest round-trip form, and wall-clock data stays out of the JSON.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::char_sum::kernel::{install, value_histogram};
use crate::char_sum::{
    bias_profile, count_vector, restricted_count_raw, CharacterSum, SumError, SumOptions,
};
use crate::cubic_slice::{
    lemma32_dichotomy, slice_decompose_with, slice_identity_check, Assignment, Dichotomy,
    SliceError,
};
use crate::field::{FieldError, FieldSpec};
use crate::linalg::{dot_raw, Matrix};
use crate::poly::{odometer_step, Monomial, MultiPoly, PolyError};
use crate::quadratic::{closed_form_raw, gauss_counts, QuadError, QuadraticForm};
use crate::rank_search::{min_vanishing_codim, projective_forms, RankError, RankOutcome};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("gcd(deg P = {d}, q - 1 = {}) != 1", q - 1)]
    GcdViolation { d: u32, q: u32 },
    #[error("unknown suite id `{0}`")]
    UnknownSuite(String),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl ExperimentError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            ExperimentError::Sum(SumError::BudgetExceeded { .. })
                | ExperimentError::Quad(QuadError::Sum(SumError::BudgetExceeded { .. }))
                | ExperimentError::Slice(SliceError::Sum(SumError::BudgetExceeded { .. }))
                | ExperimentError::Rank(RankError::Sum(SumError::BudgetExceeded { .. }))
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub parameters: BTreeMap<String, Value>,
    pub measured: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Wall-clock time; not serialized.
    #[serde(skip)]
    pub runtime: Duration,
    /// Timing-derived measurements (throughput); not serialized.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn new(id: &str) -> Self {
        ExperimentReport {
            id: id.to_string(),
            parameters: BTreeMap::new(),
            measured: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            runtime: Duration::ZERO,
            timings: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn measure(&mut self, key: &str, value: impl Into<Value>) {
        self.measured.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn finish(mut self, start: Instant) -> Self {
        self.runtime = start.elapsed();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let status = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {} ({:.3} s)", self.id, self.runtime.as_secs_f64());
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(out, "  {mark} {}: {}", c.name, c.detail);
        }
        for (k, v) in &self.measured {
            let _ = writeln!(out, "  {k} = {}", compact(v));
        }
        for (k, v) in &self.timings {
            let _ = writeln!(out, "  {k} = {v:.4e}");
        }
        out
    }
}

fn compact(v: &Value) -> String {
    let s = v.to_string();
    if s.len() > 200 {
        format!("{}...", &s[..200])
    } else {
        s
    }
}

/// JSON number, or `"inf"` / `"-inf"` / `"nan"` for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Per-task generator: the master seed selects the key, the task counter
/// the stream.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn stream_id(tag: u64, index: u64) -> u64 {
    (tag << 32) | index
}

/// Exponent vectors of total degree `degree` in `nvars` variables.
pub fn monomials(nvars: usize, degree: u16) -> Vec<Vec<u16>> {
    fn rec(i: usize, left: u16, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, degree, &mut vec![0; nvars], &mut out);
    out
}

/// Homogeneous form with each coefficient nonzero with probability
/// `density`, uniformly among nonzero values.
pub fn random_form<R: Rng>(
    fs: &FieldSpec,
    nvars: usize,
    degree: u16,
    density: f64,
    rng: &mut R,
) -> MultiPoly {
    let mut p = MultiPoly::zero(fs, nvars);
    for e in monomials(nvars, degree) {
        if rng.random_bool(density) {
            p.add_term_raw(Monomial::new(e), rng.random_range(1..fs.q()));
        }
    }
    p
}

/// `sum_{i<r} l_i R_i` with independent random linear forms `l_i` and
/// uniformly random quadratic forms `R_i`.
pub fn sample_low_rank_cubic<R: Rng>(fs: &FieldSpec, nvars: usize, r: usize, rng: &mut R) -> MultiPoly {
    let rows = loop {
        let rows: Vec<Vec<u32>> = (0..r)
            .map(|_| (0..nvars).map(|_| rng.random_range(0..fs.q())).collect())
            .collect();
        if Matrix::from_raw_rows(fs, nvars, &rows).rank() == r {
            break rows;
        }
    };
    let mut p = MultiPoly::zero(fs, nvars);
    for row in rows {
        let mut l = MultiPoly::zero(fs, nvars);
        for (i, &c) in row.iter().enumerate() {
            let mut e = vec![0u16; nvars];
            e[i] = 1;
            l.add_term_raw(Monomial::new(e), c);
        }
        let mut rq = MultiPoly::zero(fs, nvars);
        for e in monomials(nvars, 2) {
            rq.add_term_raw(Monomial::new(e), rng.random_range(0..fs.q()));
        }
        p = &p + &(&l * &rq);
    }
    p
}

fn inner(opts: &SumOptions) -> SumOptions {
    SumOptions {
        jobs: Some(1),
        ..*opts
    }
}

/// Order-preserving map, parallel unless `jobs == Some(1)`.
fn par_map<T, R, F>(jobs: Option<usize>, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs == Some(1) {
        return items.into_iter().map(f).collect();
    }
    install(jobs, || items.into_par_iter().map(f).collect())
}

fn field_param(fs: &FieldSpec) -> Value {
    json!(fs.descriptor())
}

// ---------------------------------------------------------------------------
// first-hit scans

/// Scan of `|a_n(P)|` for `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstHitProbe {
    /// first `n` with `|a_n| >= threshold`
    pub first_n: Option<u32>,
    pub magnitudes: Vec<f64>,
    pub b: Vec<f64>,
    pub min_b: Option<f64>,
}

fn at_least(cs: &CharacterSum, threshold: f64) -> bool {
    let m = cs.magnitude();
    m.value + m.error_bound >= threshold
}

pub fn probe_scan(
    poly: &MultiPoly,
    n_max: u32,
    threshold: f64,
    opts: &SumOptions,
) -> Result<FirstHitProbe, ExperimentError> {
    if !(threshold > 0.0) {
        return Err(ExperimentError::BadInput(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let mut probe = FirstHitProbe {
        first_n: None,
        magnitudes: Vec::new(),
        b: Vec::new(),
        min_b: None,
    };
    for n in 1..=n_max {
        let cs = count_vector(poly, n, opts)?;
        if probe.first_n.is_none() && at_least(&cs, threshold) {
            probe.first_n = Some(n);
        }
        let bias = cs.bias();
        probe.magnitudes.push(bias.magnitude);
        probe.b.push(bias.b);
        probe.min_b = Some(probe.min_b.map_or(bias.b, |m: f64| m.min(bias.b)));
    }
    Ok(probe)
}

/// Scans `n = 1..=n_max` for the first `|a_n(P)| >= threshold`.
pub fn probe_cor14(
    poly: &MultiPoly,
    n_max: u32,
    threshold: f64,
    opts: &SumOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let probe = probe_scan(poly, n_max, threshold, opts)?;
    let mut rep = ExperimentReport::new("first-hit-probe");
    rep.param("field", field_param(poly.field()));
    rep.param("nvars", poly.nvars());
    rep.param("poly", poly.to_string());
    rep.param("n_max", n_max);
    rep.param("threshold", num(threshold));
    rep.measure("first_n", probe.first_n);
    rep.measure(
        "magnitudes",
        probe.magnitudes.iter().map(|&x| num(x)).collect::<Vec<_>>(),
    );
    rep.measure("b", probe.b.iter().map(|&x| num(x)).collect::<Vec<_>>());
    rep.measure("min_b", probe.min_b.map(num));
    rep.check(
        "threshold_reached",
        probe.first_n.is_some(),
        match probe.first_n {
            Some(n) => format!("|a_{n}| >= {threshold}"),
            None => format!("no n <= {n_max} with |a_n| >= {threshold}"),
        },
    );
    Ok(rep.finish(start))
}

/// Every homogeneous form of `degree` in `nvars` variables, probed with
/// [`probe_scan`] up to the first hit. Records the smallest witnessed
/// `|a_n|` (measured `c`) and the largest first `n` (measured `n`).
pub fn first_hit_corpus(
    fs: &FieldSpec,
    nvars: usize,
    degree: u16,
    n_max: u32,
    threshold: f64,
    opts: &SumOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let monos = monomials(nvars, degree);
    let q = fs.q() as u64;
    let total = q
        .checked_pow(monos.len() as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| ExperimentError::BadInput("corpus too large".into()))?;
    let inner = inner(opts);
    let results = par_map(opts.jobs, (0..total).collect(), |idx| {
        let mut p = MultiPoly::zero(fs, nvars);
        let mut rest = idx;
        for e in &monos {
            p.add_term_raw(Monomial::new(e.clone()), (rest % q) as u32);
            rest /= q;
        }
        for n in 1..=n_max {
            let cs = count_vector(&p, n, &inner)?;
            if at_least(&cs, threshold) {
                return Ok::<_, ExperimentError>(Some((n, cs.magnitude().value, p)));
            }
        }
        Ok(None)
    });
    let mut misses = Vec::new();
    let mut worst_n = 0;
    let mut min_hit: Option<(f64, String)> = None;
    for (idx, r) in results.into_iter().enumerate() {
        match r? {
            None => misses.push(idx),
            Some((n, mag, p)) => {
                worst_n = worst_n.max(n);
                if min_hit.as_ref().is_none_or(|(m, _)| mag < *m) {
                    min_hit = Some((mag, p.to_string()));
                }
            }
        }
    }
    let mut rep = ExperimentReport::new("first-hit-corpus");
    rep.param("field", field_param(fs));
    rep.param("nvars", nvars);
    rep.param("degree", degree);
    rep.param("n_max", n_max);
    rep.param("threshold", num(threshold));
    rep.measure("corpus_size", total);
    rep.measure("measured_c", min_hit.as_ref().map(|(m, _)| num(*m)));
    rep.measure("measured_c_witness", min_hit.map(|(_, p)| p));
    rep.measure("measured_n", worst_n);
    rep.check(
        "every_form_reaches_threshold",
        misses.is_empty(),
        format!("{} of {total} forms without a hit", misses.len()),
    );
    Ok(rep.finish(start))
}

// ---------------------------------------------------------------------------
// products

/// Exact data for `P = Q * R` with `gcd(deg P, q - 1) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductData {
    pub degree: u32,
    /// `|P^{-1}(0)|`
    pub zero_fiber: u64,
    /// fiber sizes over `k^*`
    pub nonzero_fibers: Vec<u64>,
    /// `a_1(P)` as an integer, when the count vector is integral
    pub a1: Option<i128>,
    pub y: u64,
    pub z: u64,
    pub y_and_z: u64,
}

impl ProductData {
    pub fn fibers_equal(&self) -> bool {
        self.nonzero_fibers.windows(2).all(|w| w[0] == w[1])
    }

    pub fn common_fiber(&self) -> Option<u64> {
        self.fibers_equal()
            .then(|| self.nonzero_fibers.first().copied())
            .flatten()
    }

    pub fn inclusion_exclusion(&self) -> bool {
        self.zero_fiber + self.y_and_z == self.y + self.z
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Number of points where both polynomials vanish, by a joint odometer pass.
fn common_zeros(a: &MultiPoly, b: &MultiPoly, jobs: Option<usize>) -> u64 {
    let q = a.field().q();
    let n = a.nvars();
    if n == 0 {
        return (a.evaluate_raw(&[]) == 0 && b.evaluate_raw(&[]) == 0) as u64;
    }
    // one block per value of the last coordinate
    par_map(jobs, (0..q).collect(), |last| {
        let mut pt = vec![0u32; n];
        pt[n - 1] = last;
        let mut hits = 0u64;
        loop {
            if a.evaluate_raw(&pt) == 0 && b.evaluate_raw(&pt) == 0 {
                hits += 1;
            }
            if !odometer_step(&mut pt[..n - 1], q) {
                break;
            }
        }
        hits
    })
    .into_iter()
    .sum()
}

pub fn product_data(
    q_poly: &MultiPoly,
    r_poly: &MultiPoly,
    opts: &SumOptions,
) -> Result<ProductData, ExperimentError> {
    if q_poly.field() != r_poly.field() || q_poly.nvars() != r_poly.nvars() {
        return Err(ExperimentError::BadInput(
            "factors must share field and variable count".into(),
        ));
    }
    let fs = q_poly.field();
    let (dq, dr) = match (q_poly.total_degree(), r_poly.total_degree()) {
        (Some(a), Some(b)) if a >= 1 && b >= 1 => (a, b),
        _ => {
            return Err(ExperimentError::BadInput(
                "both factors need degree at least 1".into(),
            ))
        }
    };
    let d = dq + dr;
    if gcd(d as u64, fs.q() as u64 - 1) != 1 {
        return Err(ExperimentError::GcdViolation { d, q: fs.q() });
    }
    let n = q_poly.nvars();
    opts.check(fs.q(), n as u64)?;
    let p = q_poly * r_poly;
    let fibers = value_histogram(&p, opts.jobs);
    let a1 = count_vector(&p, 1, opts)?.as_integer();
    let y = value_histogram(q_poly, opts.jobs)[0];
    let z = value_histogram(r_poly, opts.jobs)[0];
    Ok(ProductData {
        degree: d,
        zero_fiber: fibers[0],
        nonzero_fibers: fibers[1..].to_vec(),
        a1,
        y,
        z,
        y_and_z: common_zeros(q_poly, r_poly, opts.jobs),
    })
}

/// Fiber structure of `P = Q * R`: `a_1 = B - A`, equal nonzero fibers and
/// `B = |Y| + |Z| - |Y n Z|` are asserted; `|a_1| / q^{N-1}` and the
/// implied `gamma` are recorded.
pub fn product_lemma51(
    q_poly: &MultiPoly,
    r_poly: &MultiPoly,
    opts: &SumOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let data = product_data(q_poly, r_poly, opts)?;
    let mut rep = ExperimentReport::new("product-fibers");
    let fs = q_poly.field();
    rep.param("field", field_param(fs));
    rep.param("nvars", q_poly.nvars());
    rep.param("q_factor", q_poly.to_string());
    rep.param("r_factor", r_poly.to_string());
    record_product(&mut rep, fs, q_poly.nvars(), &data);
    Ok(rep.finish(start))
}

fn normalized_a1(fs: &FieldSpec, nvars: usize, a1: i128) -> (f64, f64) {
    let q = fs.q() as f64;
    let normalized = (a1 as f64).abs() / q.powi(nvars as i32 - 1);
    // |a_1| >= q - gamma sqrt(q), read after rescaling a_1 to q^1
    let gamma = (q - q * normalized) / q.sqrt();
    (normalized, gamma)
}

fn record_product(rep: &mut ExperimentReport, fs: &FieldSpec, nvars: usize, data: &ProductData) {
    let total = (fs.q() as u64).pow(nvars as u32);
    let fiber_sum = data.zero_fiber + data.nonzero_fibers.iter().sum::<u64>();
    rep.measure("degree", data.degree);
    rep.measure("b_zero_fiber", data.zero_fiber);
    rep.measure("a_common_fiber", data.common_fiber());
    rep.measure("a1", data.a1.map(|v| v as i64));
    rep.measure("y", data.y);
    rep.measure("z", data.z);
    rep.measure("y_and_z", data.y_and_z);
    rep.check(
        "fiber_total",
        fiber_sum == total,
        format!("sum of fibers {fiber_sum}, q^N = {total}"),
    );
    rep.check(
        "nonzero_fibers_equal",
        data.fibers_equal(),
        format!("{} nonzero fibers", data.nonzero_fibers.len()),
    );
    let expected = data
        .common_fiber()
        .map(|a| data.zero_fiber as i128 - a as i128);
    rep.check(
        "a1_equals_b_minus_a",
        expected.is_some() && data.a1 == expected,
        format!("a1 = {:?}, B - A = {:?}", data.a1, expected),
    );
    rep.check(
        "inclusion_exclusion",
        data.inclusion_exclusion(),
        format!(
            "B = {}, |Y| + |Z| - |Y n Z| = {}",
            data.zero_fiber,
            data.y as i128 + data.z as i128 - data.y_and_z as i128
        ),
    );
    if let Some(a1) = data.a1 {
        let (normalized, gamma) = normalized_a1(fs, nvars, a1);
        rep.measure("normalized_a1", num(normalized));
        rep.measure("implied_gamma", num(gamma));
    }
}

// ---------------------------------------------------------------------------
// squares of split quadratics

/// `sum_{i<t} x_i x_{t+i}` in `2t` variables.
pub fn split_form(fs: &FieldSpec, t: usize) -> MultiPoly {
    let n = 2 * t;
    let mut p = MultiPoly::zero(fs, n);
    for i in 0..t {
        let mut e = vec![0u16; n];
        e[i] = 1;
        e[t + i] = 1;
        p.add_term_raw(Monomial::new(e), 1);
    }
    p
}

/// Count vector predicted from the fibers of a split form `Q` in `N = 2t`
/// variables: `|Q = 0| = q^{N-1} + q^t - q^{t-1}` and `q^{N-1} - q^{t-1}`
/// elsewhere, so `a_1(Q^2) = (q^{N-1} - q^{t-1}) G + q^t`.
pub fn square_prediction(fs: &FieldSpec, t: usize) -> Result<CharacterSum, ExperimentError> {
    let q = fs.q() as u64;
    let n = 2 * t as u32;
    let weight = q.pow(n - 1) - q.pow(t as u32 - 1);
    let g = gauss_counts(fs, fs.one(), 1)?;
    let mut counts: Vec<u64> = g.counts().iter().map(|c| c * weight).collect();
    counts[0] += q.pow(t as u32);
    Ok(CharacterSum::from_counts(fs, 1, n as usize, counts)?)
}

/// For each even `N`, enumerates `a_1(Q^2)` for the split form and compares
/// `log_q |a_1|` with `N / 2` and with `N - 1/2`.
pub fn quartic_square_scan(
    fs: &FieldSpec,
    dims: &[usize],
    opts: &SumOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("quartic-square");
    rep.param("field", field_param(fs));
    rep.param("dims", dims.to_vec());
    rep.measure("degree_below_characteristic", fs.p() > 4);
    let q = fs.q() as f64;
    let mut rows = Vec::new();
    for &n in dims {
        if n == 0 || n % 2 == 1 {
            return Err(ExperimentError::BadInput(format!(
                "dimensions must be even and positive, got {n}"
            )));
        }
        let t = n / 2;
        let square = split_form(fs, t).pow(2);
        let cs = count_vector(&square, 1, opts)?;
        let predicted = square_prediction(fs, t)?;
        let mag = cs.magnitude().value;
        let g = q.sqrt();
        let closed = ((q.powi(n as i32 - 1) - q.powi(t as i32 - 1)) * g + q.powi(t as i32)).abs();
        rep.check(
            &format!("fiber_prediction_n{n}"),
            predicted == cs,
            format!("enumerated {:?}, predicted {:?}", cs.counts(), predicted.counts()),
        );
        rows.push(json!({
            "n": n,
            "counts": cs.counts(),
            "magnitude": num(mag),
            "measured_exponent": num(mag.ln() / q.ln()),
            "claimed_exponent": num(n as f64 / 2.0),
            "derived_exponent": num(n as f64 - 0.5),
            "prediction_magnitude": num(closed),
        }));
    }
    rep.measure("rows", rows);
    Ok(rep.finish(start))
}

// ---------------------------------------------------------------------------
// bias over low-rank samples

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowRankScanConfig {
    pub field: FieldSpec,
    pub nvars: usize,
    pub r: usize,
    pub samples: usize,
    pub n_max: u32,
    pub seed: u64,
}

/// Samples `P = sum_{i<r} l_i R_i`, records `min_{n <= n_max} b_n(P)` per
/// sample and the maximum over samples as the measured `t`. Only
/// finiteness is asserted.
pub fn theorem31_scan(
    cfg: &LowRankScanConfig,
    opts: &SumOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    if !(1..=2).contains(&cfg.r) || cfg.r > cfg.nvars {
        return Err(ExperimentError::BadInput(format!(
            "need r in {{1, 2}} and r <= N, got r = {} with N = {}",
            cfg.r, cfg.nvars
        )));
    }
    if cfg.n_max == 0 {
        return Err(ExperimentError::BadInput("n_max must be positive".into()));
    }
    opts.check(cfg.field.q(), cfg.nvars as u64 * cfg.n_max as u64)?;
    let inner = inner(opts);
    let results = par_map(opts.jobs, (0..cfg.samples as u64).collect(), |i| {
        let mut rng = task_rng(cfg.seed, i);
        let p = sample_low_rank_cubic(&cfg.field, cfg.nvars, cfg.r, &mut rng);
        let profile = bias_profile(&p, cfg.n_max, &inner)?;
        Ok::<_, ExperimentError>((p.to_string(), profile.min_b()))
    });
    let mut rep = ExperimentReport::new("low-rank-scan");
    rep.param("field", field_param(&cfg.field));
    rep.param("nvars", cfg.nvars);
    rep.param("r", cfg.r);
    rep.param("samples", cfg.samples);
    rep.param("n_max", cfg.n_max);
    rep.param("seed", cfg.seed);
    let mut mins = Vec::new();
    let mut infinite = 0;
    let mut t: Option<f64> = None;
    for r in results {
        let (_, min_b) = r?;
        let b = min_b.unwrap_or(f64::INFINITY);
        if b.is_finite() {
            t = Some(t.map_or(b, |t| t.max(b)));
        } else {
            infinite += 1;
        }
        mins.push(num(b));
    }
    rep.measure("min_b", mins);
    rep.measure("measured_t", t.map(num));
    rep.check(
        "all_finite",
        infinite == 0,
        format!("{infinite} of {} samples with a_n = 0 for all n <= {}", cfg.samples, cfg.n_max),
    );
    Ok(rep.finish(start))
}

// ---------------------------------------------------------------------------
// ideal membership

/// Least `r` such that `P` lies in the ideal of `r` independent linear
/// forms, found by solving `P = sum l_i R_i` for the coefficients of
/// quadratic `R_i` over every `r`-set of projective linear forms.
pub fn ideal_membership_rank(poly: &MultiPoly) -> usize {
    let fs = poly.field();
    let n = poly.nvars();
    if poly.is_zero() {
        return 0;
    }
    let cubics = monomials(n, 3);
    let index: HashMap<Vec<u16>, usize> = cubics
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    let quads = monomials(n, 2);
    let target: Vec<u32> = cubics.iter().map(|e| poly.coefficient(e).index()).collect();
    let forms = projective_forms(fs, n);
    let member = |chosen: &[usize]| {
        let cols = chosen.len() * quads.len();
        let mut rows = vec![vec![0u32; cols]; cubics.len()];
        for (a, &f) in chosen.iter().enumerate() {
            for (b, qe) in quads.iter().enumerate() {
                for (k, &c) in forms[f].iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let mut e = qe.clone();
                    e[k] += 1;
                    rows[index[&e]][a * quads.len() + b] = c;
                }
            }
        }
        Matrix::from_raw_rows(fs, cols, &rows).solve_raw(&target).is_some()
    };
    fn subsets(start: usize, total: usize, r: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == r {
            return f(cur);
        }
        for i in start..total {
            cur.push(i);
            if subsets(i + 1, total, r, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    for r in 1..n {
        let mut test = |chosen: &[usize]| {
            let rows: Vec<Vec<u32>> = chosen.iter().map(|&i| forms[i].clone()).collect();
            Matrix::from_raw_rows(fs, n, &rows).rank() == r && member(chosen)
        };
        if subsets(0, forms.len(), r, &mut Vec::new(), &mut test) {
            return r;
        }
    }
    n
}

// ---------------------------------------------------------------------------
// suites

pub const SUITE_IDS: [&str; 10] = [
    "quadratic-oracle",
    "gauss-magnitude",
    "quadratic-bias",
    "known-sums",
    "slice-identity",
    "slice-dichotomy",
    "rank-oracle",
    "first-hit-probe",
    "product-fibers",
    "determinism",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[derive(Default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub opts: SumOptions,
    /// Shrinks sample counts and corpora for smoke runs.
    pub quick: bool,
}


#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub selection: Vec<String>,
    pub seed: u64,
    pub quick: bool,
    pub reports: Vec<ExperimentReport>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.to_text());
        }
        let status = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} suite ({} selected)", self.reports.len());
        out
    }
}

/// Runs the selected suites in order; `"all"` selects every suite. A suite
/// that errors is recorded as a failed report.
pub fn run_suite(selection: &[String], cfg: &SuiteConfig) -> Result<SuiteReport, ExperimentError> {
    let mut ids: Vec<&str> = Vec::new();
    for s in selection {
        if s == "all" {
            ids.extend(SUITE_IDS);
        } else if let Some(id) = SUITE_IDS.iter().find(|&&id| id == s) {
            ids.push(id);
        } else {
            return Err(ExperimentError::UnknownSuite(s.clone()));
        }
    }
    let reports: Vec<ExperimentReport> = ids
        .iter()
        .map(|&id| {
            let start = Instant::now();
            run_one(id, cfg).unwrap_or_else(|e| {
                let mut rep = ExperimentReport::new(id);
                rep.check("completed", false, e.to_string());
                rep.finish(start)
            })
        })
        .collect();
    Ok(SuiteReport {
        selection: ids.iter().map(|s| s.to_string()).collect(),
        seed: cfg.seed,
        quick: cfg.quick,
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}

fn run_one(id: &str, cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    match id {
        "quadratic-oracle" => suite_quadratic_oracle(cfg),
        "gauss-magnitude" => suite_gauss_magnitude(),
        "quadratic-bias" => suite_quadratic_bias(cfg),
        "known-sums" => suite_known_sums(cfg),
        "slice-identity" => suite_slice_identity(cfg),
        "slice-dichotomy" => suite_slice_dichotomy(cfg),
        "rank-oracle" => suite_rank_oracle(cfg),
        "first-hit-probe" => suite_first_hit(cfg),
        "product-fibers" => suite_product_fibers(cfg),
        "determinism" => suite_determinism(cfg),
        other => Err(ExperimentError::UnknownSuite(other.to_string())),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn with_linear(form: &QuadraticForm, l: &[u32], c: u32) -> MultiPoly {
    let n = form.dim();
    let mut p = form.to_poly();
    for (i, &v) in l.iter().enumerate() {
        let mut e = vec![0u16; n];
        e[i] = 1;
        p.add_term_raw(Monomial::new(e), v);
    }
    p.add_term_raw(Monomial::one(n), c);
    p
}

#[derive(Default)]
struct OracleTally {
    tested: u64,
    max_rel: f64,
    dichotomy_mismatch: u64,
    count_mismatch: u64,
}

impl OracleTally {
    fn absorb(&mut self, other: OracleTally) {
        self.tested += other.tested;
        self.max_rel = self.max_rel.max(other.max_rel);
        self.dichotomy_mismatch += other.dichotomy_mismatch;
        self.count_mismatch += other.count_mismatch;
    }
}

fn compare_quadratic(
    form: &QuadraticForm,
    l: &[u32],
    c: u32,
    opts: &SumOptions,
) -> Result<OracleTally, ExperimentError> {
    let q = form.field().q();
    let enumerated = count_vector(&with_linear(form, l, c), 1, opts)?;
    let cf = closed_form_raw(form, l, c, 1)?;
    Ok(OracleTally {
        tested: 1,
        max_rel: rel_err(cf.magnitude(q), enumerated.magnitude().value),
        dichotomy_mismatch: (cf.is_zero() != enumerated.is_zero()) as u64,
        count_mismatch: (cf.sum.as_ref() != Some(&enumerated)) as u64,
    })
}

fn random_quadratic<R: Rng>(fs: &FieldSpec, n: usize, rng: &mut R) -> QuadraticForm {
    let density = [0.25, 0.5, 1.0][rng.random_range(0..3)];
    let mut form = QuadraticForm::zero(fs, n);
    for i in 0..n {
        for j in i..n {
            if rng.random_bool(density) {
                let c = fs.wrap(rng.random_range(1..fs.q()));
                form.set_coefficient(i, j, c).expect("in range");
            }
        }
    }
    form
}

fn suite_quadratic_oracle(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let opts = inner(&cfg.opts);
    let samples = if cfg.quick { 20 } else { 500 };
    let mut tally = OracleTally::default();
    // exhaustive over F_3, every linear part for N <= 2, l = 0 and one
    // seeded covector for N = 3
    let f3 = FieldSpec::prime(3)?;
    let mut exhaustive = 0u64;
    for n in 1..=3usize {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut coeffs = vec![0u32; slots.len()];
        let mut forms = Vec::new();
        loop {
            let mut form = QuadraticForm::zero(&f3, n);
            for (&(i, j), &c) in slots.iter().zip(&coeffs) {
                form.set_coefficient(i, j, f3.wrap(c))?;
            }
            forms.push(form);
            if !odometer_step(&mut coeffs, 3) {
                break;
            }
        }
        let tallies = par_map(cfg.opts.jobs, forms.into_iter().enumerate().collect(), |(k, form)| {
            let mut t = OracleTally::default();
            let mut covectors = Vec::new();
            if n <= 2 {
                let mut l = vec![0u32; n];
                loop {
                    covectors.push(l.clone());
                    if !odometer_step(&mut l, 3) {
                        break;
                    }
                }
            } else {
                let mut rng = task_rng(cfg.seed, stream_id(3, k as u64));
                covectors.push(vec![0; n]);
                covectors.push((0..n).map(|_| rng.random_range(0..3)).collect());
            }
            for l in covectors {
                t.absorb(compare_quadratic(&form, &l, 0, &opts)?);
            }
            Ok::<_, ExperimentError>(t)
        });
        for t in tallies {
            let t = t?;
            exhaustive += t.tested;
            tally.absorb(t);
        }
    }
    for p in [3u32, 5, 7] {
        let fs = FieldSpec::prime(p)?;
        for n in 1..=5usize {
            let tag = 16 + (p as u64) * 8 + n as u64;
            let tallies = par_map(cfg.opts.jobs, (0..samples as u64).collect(), |i| {
                let mut rng = task_rng(cfg.seed, stream_id(tag, i));
                let form = random_quadratic(&fs, n, &mut rng);
                let l: Vec<u32> = if rng.random_bool(0.25) {
                    vec![0; n]
                } else {
                    (0..n).map(|_| rng.random_range(0..p)).collect()
                };
                let c = rng.random_range(0..p);
                compare_quadratic(&form, &l, c, &opts)
            });
            for t in tallies {
                tally.absorb(t?);
            }
        }
    }
    let mut rep = ExperimentReport::new("quadratic-oracle");
    rep.param("seed", cfg.seed);
    rep.param("samples_per_field_and_dim", samples);
    rep.measure("forms_tested", tally.tested);
    rep.measure("exhaustive_tested", exhaustive);
    rep.measure("max_relative_error", num(tally.max_rel));
    rep.check(
        "magnitude_agreement",
        tally.max_rel <= 1e-6,
        format!("max relative error {:e} over {} sums", tally.max_rel, tally.tested),
    );
    rep.check(
        "zero_dichotomy",
        tally.dichotomy_mismatch == 0,
        format!("{} mismatches", tally.dichotomy_mismatch),
    );
    rep.check(
        "count_vectors_equal",
        tally.count_mismatch == 0,
        format!("{} mismatches", tally.count_mismatch),
    );
    Ok(rep.finish(start))
}

fn suite_gauss_magnitude() -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let mut max_err: f64 = 0.0;
    let mut tested = 0;
    let primes = [3u32, 5, 7, 11, 13, 17, 19, 23];
    for p in primes {
        let fs = FieldSpec::prime(p)?;
        for a in 1..p {
            let cs = gauss_counts(&fs, fs.wrap(a), 1)?;
            max_err = max_err.max((cs.magnitude().value - (p as f64).sqrt()).abs());
            tested += 1;
        }
    }
    let mut rep = ExperimentReport::new("gauss-magnitude");
    rep.param("primes", primes.to_vec());
    rep.measure("sums_tested", tested);
    rep.measure("max_abs_error", num(max_err));
    rep.check(
        "magnitude_sqrt_p",
        max_err <= 1e-9,
        format!("max |.| - sqrt(p) error {max_err:e}"),
    );
    Ok(rep.finish(start))
}

fn suite_quadratic_bias(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let opts = cfg.opts;
    let mut rows = Vec::new();
    let mut exact_ok = true;
    let mut max_dev: f64 = 0.0;
    let mut flagged = Vec::new();
    for p in [3u32, 5] {
        let fs = FieldSpec::prime(p)?;
        let mut forms: Vec<MultiPoly> = (1..=3).map(|t| split_form(&fs, t)).collect();
        let mut square = MultiPoly::zero(&fs, 1);
        square.add_term_raw(Monomial::new(vec![2]), 1);
        forms.push(square);
        for poly in forms {
            let n_vars = poly.nvars();
            let form = QuadraticForm::from_poly(&poly)?;
            let rank = form.rank();
            for level in 1..=3u32 {
                let points = (p as f64).powi((level as usize * n_vars) as i32);
                if points > 1e7 {
                    continue;
                }
                let zero = vec![0u32; n_vars];
                let cf = closed_form_raw(&form, &zero, 0, level)?;
                let b_exact = cf
                    .twice_exponent
                    .map(|e| (2 * level as u64 * n_vars as u64 - e) as f64 / level as f64);
                exact_ok &= b_exact == Some(rank as f64);
                let b_enum = count_vector(&poly, level, &opts)?.bias().b;
                let dev = (b_enum - rank as f64).abs();
                max_dev = max_dev.max(dev);
                if rank % 2 == 1 {
                    flagged.push(json!({
                        "field": fs.descriptor(),
                        "poly": poly.to_string(),
                        "n": level,
                        "stated_b": num(rank as f64 - 0.5),
                        "measured_b": num(b_enum),
                    }));
                }
                rows.push(json!({
                    "field": fs.descriptor(),
                    "poly": poly.to_string(),
                    "n": level,
                    "rank": rank,
                    "b_closed_form": b_exact.map(num),
                    "b_enumerated": num(b_enum),
                }));
            }
        }
    }
    let mut rep = ExperimentReport::new("quadratic-bias");
    rep.measure("rows", rows);
    rep.measure("odd_rank_discrepancies", flagged);
    rep.check("closed_form_b_equals_rank", exact_ok, "b_n from exponents");
    rep.check(
        "enumeration_b_equals_rank",
        max_dev <= 1e-6,
        format!("max deviation {max_dev:e}"),
    );
    Ok(rep.finish(start))
}

fn suite_known_sums(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let opts = cfg.opts;
    let mut rep = ExperimentReport::new("known-sums");
    for p in [3u32, 5, 7] {
        let fs = FieldSpec::prime(p)?;
        let xy = split_form(&fs, 1);
        let v = count_vector(&xy, 1, &opts)?.as_integer();
        rep.check(
            &format!("x1x2_over_f{p}"),
            v == Some(p as i128),
            format!("a1 = {v:?}"),
        );
    }
    let f5 = FieldSpec::prime(5)?;
    let mut xyz = MultiPoly::zero(&f5, 3);
    xyz.add_term_raw(Monomial::new(vec![1, 1, 1]), 1);
    let v = count_vector(&xyz, 1, &opts)?.as_integer();
    rep.check("x1x2x3_over_f5", v == Some(45), format!("a1 = {v:?}"));
    let sq = split_form(&f5, 1).pow(2);
    let counts = count_vector(&sq, 1, &opts)?.counts().to_vec();
    rep.check(
        "x1x2_squared_over_f5",
        counts == [9, 8, 0, 0, 8],
        format!("counts {counts:?}"),
    );
    Ok(rep.finish(start))
}

/// Random cubic in the ideal `(x_1..x_r)` with a random fill density.
fn random_slice_cubic<R: Rng>(fs: &FieldSpec, r: usize, n: usize, rng: &mut R) -> MultiPoly {
    let density = [0.2, 0.5, 0.9][rng.random_range(0..3)];
    let mut p = MultiPoly::zero(fs, n);
    for e in monomials(n, 3) {
        if e[..r].iter().any(|&x| x > 0) && rng.random_bool(density) {
            p.add_term_raw(Monomial::new(e), rng.random_range(1..fs.q()));
        }
    }
    p
}

fn suite_slice_identity(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let samples = if cfg.quick { 10 } else { 100 };
    let opts = inner(&cfg.opts);
    let results = par_map(cfg.opts.jobs, (0..samples as u64).collect(), |i| {
        let mut rng = task_rng(cfg.seed, stream_id(5, i));
        let p = if rng.random_bool(0.5) { 3 } else { 5 };
        let fs = FieldSpec::prime(p)?;
        let r = rng.random_range(1..=2usize);
        let max_n = if p == 3 { 9 } else { 6 };
        let n = rng.random_range(r + 1..=max_n);
        let poly = random_slice_cubic(&fs, r, n, &mut rng);
        let s = slice_decompose_with(&poly, r, Assignment::Seeded(rng.random()))?;
        let report = slice_identity_check(&s, &opts)?;
        let nonzero = report.directions.iter().filter(|d| d.twice_exponent.is_some()).count();
        Ok::<_, ExperimentError>((report.identity_holds, report.all_hold(), report.directions.len(), nonzero))
    });
    let (mut identity_fail, mut law_fail, mut directions, mut nonzero) = (0, 0, 0, 0);
    for r in results {
        let (id, all, d, nz) = r?;
        identity_fail += (!id) as u64;
        law_fail += (!all) as u64;
        directions += d;
        nonzero += nz;
    }
    let mut rep = ExperimentReport::new("slice-identity");
    rep.param("seed", cfg.seed);
    rep.param("samples", samples);
    rep.measure("directions_checked", directions);
    rep.measure("nonvanishing_slices", nonzero);
    rep.check(
        "count_vector_identity",
        identity_fail == 0,
        format!("{identity_fail} of {samples} forms fail"),
    );
    rep.check(
        "slice_magnitude_law",
        law_fail == 0,
        format!("{law_fail} of {samples} forms fail"),
    );
    Ok(rep.finish(start))
}

/// Verifies one dichotomy outcome against enumeration; returns the branch.
fn check_dichotomy(poly: &MultiPoly, opts: &SumOptions) -> Result<(&'static str, bool), ExperimentError> {
    let fs = poly.field();
    let q = fs.q();
    let n = poly.nvars();
    let d = lemma32_dichotomy(poly)?;
    let slice = |x: u32| -> Result<CharacterSum, ExperimentError> {
        let mut e = vec![0u32; n];
        e[0] = 1;
        Ok(restricted_count_raw(poly, &[(e, x)], 1, opts)?)
    };
    let ok = match &d {
        Dichotomy::Bound {
            slices,
            bound_twice_exponent,
            ..
        } => {
            let mut ok = slices.len() == q as usize - 1;
            for (x, te) in slices {
                let cs = slice(x.index())?;
                ok &= match te {
                    None => cs.is_zero(),
                    Some(e) => {
                        e <= bound_twice_exponent
                            && rel_err(cs.magnitude().value, (q as f64).powf(*e as f64 / 2.0)) <= 1e-9
                    }
                };
            }
            ok
        }
        Dichotomy::Vanishing { .. } => {
            let mut ok = true;
            for x in 1..q {
                ok &= slice(x)?.is_zero();
            }
            ok
        }
        Dichotomy::Reduction { forms, cubic, .. } => {
            let mut pt = vec![0u32; n];
            let mut ok = true;
            loop {
                let t: Vec<u32> = (0..3).map(|j| dot_raw(fs, forms.row_raw(j), &pt)).collect();
                ok &= poly.evaluate_raw(&pt) == cubic.evaluate_raw(&t);
                if !ok || !odometer_step(&mut pt, q) {
                    break;
                }
            }
            ok
        }
    };
    Ok((d.name(), ok))
}

/// `x1 * R` with `R` given by coefficients on the quadratic monomials of
/// the variables `vars`.
fn x1_times(fs: &FieldSpec, n: usize, vars: &[usize], coeffs: &[u32]) -> MultiPoly {
    let mut p = MultiPoly::zero(fs, n);
    let mut k = 0;
    for a in 0..vars.len() {
        for b in a..vars.len() {
            let mut e = vec![0u16; n];
            e[0] += 1;
            e[vars[a]] += 1;
            e[vars[b]] += 1;
            p.add_term_raw(Monomial::new(e), coeffs[k]);
            k += 1;
        }
    }
    p
}

fn suite_slice_dichotomy(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let opts = inner(&cfg.opts);
    let mut polys = Vec::new();
    let f3 = FieldSpec::prime(3)?;
    // R on F_3^3 as a form in (x1, x2, x3), and as a form in (x2, x3, x4)
    for (n, vars) in [(3usize, vec![0usize, 1, 2]), (4, vec![1, 2, 3])] {
        let mut c = vec![0u32; 6];
        let mut k = 0;
        loop {
            if !cfg.quick || k % 20 == 0 {
                polys.push(x1_times(&f3, n, &vars, &c));
            }
            k += 1;
            if !odometer_step(&mut c, 3) {
                break;
            }
        }
    }
    let exhaustive = polys.len();
    let f5 = FieldSpec::prime(5)?;
    let random = if cfg.quick { 20 } else { 200 };
    for i in 0..random {
        let mut rng = task_rng(cfg.seed, stream_id(6, i));
        let c: Vec<u32> = (0..10).map(|_| rng.random_range(0..5)).collect();
        polys.push(x1_times(&f5, 4, &[0, 1, 2, 3], &c));
    }
    let results = par_map(cfg.opts.jobs, polys, |p| check_dichotomy(&p, &opts));
    let mut branches: BTreeMap<&str, u64> = BTreeMap::new();
    let mut failures = 0;
    for r in results {
        let (name, ok) = r?;
        *branches.entry(name).or_default() += 1;
        failures += (!ok) as u64;
    }
    let mut rep = ExperimentReport::new("slice-dichotomy");
    rep.param("seed", cfg.seed);
    rep.param("random_samples", random);
    rep.measure("exhaustive_corpus", exhaustive);
    rep.measure("branches", json!(branches));
    rep.check(
        "branch_certificates_verified",
        failures == 0,
        format!("{failures} of {} polynomials fail", exhaustive as u64 + random),
    );
    Ok(rep.finish(start))
}

fn suite_rank_oracle(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let opts = inner(&cfg.opts);
    let f3 = FieldSpec::prime(3)?;
    let monos = monomials(3, 3);
    let mut polys = Vec::new();
    let mut c = vec![0u32; monos.len()];
    let mut k = 0u64;
    loop {
        // one representative per scalar class: first nonzero coefficient 1
        let leading = c.iter().rev().find(|&&v| v != 0).copied();
        if matches!(leading, None | Some(1)) && (!cfg.quick || k.is_multiple_of(50)) {
            let mut p = MultiPoly::zero(&f3, 3);
            for (e, &v) in monos.iter().zip(&c) {
                p.add_term_raw(Monomial::new(e.clone()), v);
            }
            polys.push(p);
        }
        k += 1;
        if !odometer_step(&mut c, 3) {
            break;
        }
    }
    let corpus = polys.len();
    let results = par_map(cfg.opts.jobs, polys, |p| {
        let searched = match min_vanishing_codim(&p, 3, 1, &opts)? {
            RankOutcome::Found(cert) => Some(cert.r),
            RankOutcome::NotFound { .. } => None,
        };
        Ok::<_, ExperimentError>((searched, ideal_membership_rank(&p)))
    });
    let mut disagreements = 0;
    let mut histogram: BTreeMap<usize, u64> = BTreeMap::new();
    for r in results {
        let (s, o) = r?;
        disagreements += (s != Some(o)) as u64;
        *histogram.entry(o).or_default() += 1;
    }
    let mut rep = ExperimentReport::new("rank-oracle");
    rep.measure("corpus_size", corpus);
    rep.measure(
        "rank_histogram",
        histogram.iter().map(|(r, n)| (r.to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
    );
    rep.check(
        "search_matches_ideal_membership",
        disagreements == 0,
        format!("{disagreements} of {corpus} disagree"),
    );
    let mut xyz = MultiPoly::zero(&f3, 3);
    xyz.add_term_raw(Monomial::new(vec![1, 1, 1]), 1);
    let f7 = FieldSpec::prime(7)?;
    let mut fermat = MultiPoly::zero(&f7, 3);
    for i in 0..3 {
        let mut e = vec![0u16; 3];
        e[i] = 3;
        fermat.add_term_raw(Monomial::new(e), 1);
    }
    for (name, p, want) in [("x1x2x3", xyz, 1usize), ("fermat_f7", fermat, 2)] {
        let got = match min_vanishing_codim(&p, 3, 1, &cfg.opts)? {
            RankOutcome::Found(cert) => Some(cert.r),
            RankOutcome::NotFound { .. } => None,
        };
        rep.check(name, got == Some(want), format!("r = {got:?}, expected {want}"));
    }
    Ok(rep.finish(start))
}

fn suite_first_hit(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let f5 = FieldSpec::prime(5)?;
    let mut rep = first_hit_corpus(&f5, 2, 3, 4, 1.0, &cfg.opts)?;
    rep.id = "first-hit-probe".into();
    Ok(rep)
}

fn suite_product_fibers(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let pairs = if cfg.quick { 10 } else { 50 };
    let opts = inner(&cfg.opts);
    let results = par_map(cfg.opts.jobs, (0..pairs as u64).collect(), |i| {
        let mut rng = task_rng(cfg.seed, stream_id(9, i));
        let (p, degrees): (u32, &[(u16, u16)]) = if i % 2 == 0 {
            (5, &[(1, 2), (2, 1)])
        } else {
            (7, &[(1, 4), (2, 3), (3, 2), (4, 1)])
        };
        let fs = FieldSpec::prime(p)?;
        let (dq, dr) = degrees[rng.random_range(0..degrees.len())];
        let n = rng.random_range(2..=if p == 5 { 5 } else { 4 });
        let mut nonzero = |d: u16| loop {
            let f = random_form(&fs, n, d, 0.5, &mut rng);
            if !f.is_zero() {
                break f;
            }
        };
        let (a, b) = (nonzero(dq), nonzero(dr));
        let data = product_data(&a, &b, &opts)?;
        let a1 = data.a1.unwrap_or(0);
        Ok::<_, ExperimentError>((fs, n, data, normalized_a1(&FieldSpec::prime(p)?, n, a1)))
    });
    let (mut fiber_fail, mut a1_fail, mut ie_fail) = (0, 0, 0);
    let mut normalized = Vec::new();
    let mut max_gamma: f64 = f64::NEG_INFINITY;
    for r in results {
        let (fs, n, data, (norm, gamma)) = r?;
        let total = (fs.q() as u64).pow(n as u32);
        let fibers_ok = data.fibers_equal()
            && data.zero_fiber + data.nonzero_fibers.iter().sum::<u64>() == total;
        fiber_fail += (!fibers_ok) as u64;
        let expected = data.common_fiber().map(|a| data.zero_fiber as i128 - a as i128);
        a1_fail += (expected.is_none() || data.a1 != expected) as u64;
        ie_fail += (!data.inclusion_exclusion()) as u64;
        normalized.push(num(norm));
        max_gamma = max_gamma.max(gamma);
    }
    let mut rep = ExperimentReport::new("product-fibers");
    rep.param("seed", cfg.seed);
    rep.param("pairs", pairs);
    rep.measure("normalized_a1", normalized);
    rep.measure("max_implied_gamma", num(max_gamma));
    rep.check("nonzero_fibers_equal", fiber_fail == 0, format!("{fiber_fail} of {pairs} fail"));
    rep.check("a1_equals_b_minus_a", a1_fail == 0, format!("{a1_fail} of {pairs} fail"));
    rep.check("inclusion_exclusion", ie_fail == 0, format!("{ie_fail} of {pairs} fail"));
    Ok(rep.finish(start))
}

/// `x1 x2 x3` over `F_5` in `N = 9` variables, and a cubic using all nine.
fn benchmark_polys() -> Result<(MultiPoly, MultiPoly), ExperimentError> {
    let f5 = FieldSpec::prime(5)?;
    let mut padded = MultiPoly::zero(&f5, 9);
    let mut e = vec![0u16; 9];
    e[..3].fill(1);
    padded.add_term_raw(Monomial::new(e), 1);
    let mut dense = MultiPoly::zero(&f5, 9);
    for i in 0..9 {
        let mut e = vec![0u16; 9];
        for k in 0..3 {
            e[(i + k) % 9] += 1;
        }
        dense.add_term_raw(Monomial::new(e), 1 + (i as u32 % 4));
    }
    Ok((padded, dense))
}

/// Points per second of `a_1` enumeration on one worker.
pub fn throughput(poly: &MultiPoly) -> Result<f64, ExperimentError> {
    let opts = SumOptions {
        jobs: Some(1),
        ..SumOptions::default()
    };
    let points = (poly.field().q() as f64).powi(poly.nvars() as i32);
    let start = Instant::now();
    let mut rounds = 0;
    while rounds == 0 || start.elapsed() < Duration::from_millis(200) {
        count_vector(poly, 1, &opts)?;
        rounds += 1;
    }
    Ok(points * rounds as f64 / start.elapsed().as_secs_f64())
}

fn suite_determinism(cfg: &SuiteConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("determinism");
    let f5 = FieldSpec::prime(5)?;
    let scan_cfg = LowRankScanConfig {
        field: f5.clone(),
        nvars: 3,
        r: 2,
        samples: if cfg.quick { 4 } else { 16 },
        n_max: 2,
        seed: cfg.seed,
    };
    let mut bytes = Vec::new();
    for jobs in [Some(1), Some(4), None, Some(1)] {
        let opts = SumOptions { jobs, ..cfg.opts };
        bytes.push(theorem31_scan(&scan_cfg, &opts)?.to_json());
    }
    rep.check(
        "sampled_reports_identical",
        bytes.windows(2).all(|w| w[0] == w[1]),
        "low-rank scan across runs and job counts",
    );
    let quick = SuiteConfig {
        quick: true,
        ..*cfg
    };
    let mut oracle = Vec::new();
    for jobs in [Some(1), Some(3)] {
        let c = SuiteConfig {
            opts: SumOptions { jobs, ..cfg.opts },
            ..quick
        };
        oracle.push(suite_slice_identity(&c)?.to_json());
    }
    rep.check(
        "suite_reports_identical",
        oracle[0] == oracle[1],
        "slice-identity suite across job counts",
    );
    let (padded, dense) = benchmark_polys()?;
    let mut vectors = Vec::new();
    for jobs in [Some(1), Some(2), Some(8), None] {
        let opts = SumOptions { jobs, ..cfg.opts };
        vectors.push(count_vector(&dense, 1, &opts)?);
    }
    rep.check(
        "count_vectors_identical",
        vectors.windows(2).all(|w| w[0] == w[1]),
        "dense N = 9 cubic across job counts",
    );
    let single = throughput(&padded)?;
    let dense_rate = throughput(&dense)?;
    rep.timings.insert("padded_points_per_second".into(), single);
    rep.timings.insert("dense_points_per_second".into(), dense_rate);
    rep.check(
        "throughput_padded",
        single >= 1e7,
        "x1x2x3 over F_5 padded to N = 9, one worker, >= 1e7 points/s",
    );
    rep.check(
        "throughput_dense",
        dense_rate >= 1e7,
        "all-variable cubic over F_5, N = 9, one worker, >= 1e7 points/s",
    );
    Ok(rep.finish(start))
}
