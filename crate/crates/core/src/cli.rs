//! Command-line surface. `dispatch` turns one argument vector into a report
//! and an exit status; `src/main.rs` only prints.
//!
//! Exit statuses: 0 success, 1 a hard check failed, 2 bad input, 3 budget
//! exceeded.

use std::fs;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::char_sum::{bias_profile, count_vector, SumError, SumOptions, DEFAULT_BUDGET};
use crate::cubic_slice::{
    classify_case, lemma32_dichotomy, pencil_scan, slice_decompose, slice_identity_check,
    CaseLabel, Dichotomy, ReducedSlice, SliceError,
};
use crate::experiments::{
    num, probe_cor14, product_lemma51, run_suite, ExperimentError, ExperimentReport, SuiteConfig,
};
use crate::field::{parse_field_descriptor, FieldElement, FieldError, FieldSpec};
use crate::linalg::Matrix;
use crate::poly::{parse_poly, MultiPoly, PolyError};
use crate::quadratic::{canonicalize, closed_form_poly, radical, split_quadratic, QuadError, Residual};
use crate::rank_search::{min_vanishing_codim, RankError, RankOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "biaslab", version, about = "Character sums and bias of polynomials over finite fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of points any single enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct PolyArgs {
    /// `p^m` or `p^m:c0,c1,..` (monic modulus, constant term first).
    #[arg(long)]
    pub field: String,
    #[arg(long)]
    pub nvars: usize,
    #[arg(long)]
    pub poly: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count vector and magnitude of `a_n(P)`.
    Sum {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Bias `b_n(P)` and `|a_n| / q^{nN}`.
    Bias {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// `b_1..b_nmax`, truncated at the budget.
    Profile {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long)]
        nmax: u32,
    },
    /// Canonical form, radical and closed-form magnitude of a quadratic.
    Quad {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Slice decomposition along the first `r` variables.
    Slice {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Run the case analysis at this pencil-rank threshold (r <= 2).
        #[arg(long)]
        theta: Option<usize>,
    },
    /// Smallest codimension of a subspace on which a cubic vanishes.
    Rank {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long)]
        max_r: Option<usize>,
        #[arg(long, default_value_t = 1)]
        ext: u32,
    },
    /// Fiber identities for `P = Q * R`; pass `--poly` twice.
    Product {
        #[arg(long)]
        field: String,
        #[arg(long)]
        nvars: usize,
        #[arg(long, num_args = 1, required = true)]
        poly: Vec<String>,
    },
    /// First `n <= nmax` with `|a_n(P)| >= threshold`.
    Probe {
        #[command(flatten)]
        input: PolyArgs,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
    },
    /// Run verification suites (`all` or suite ids).
    Verify {
        #[arg(long = "suite", default_values_t = vec!["all".to_string()])]
        suites: Vec<String>,
        /// Smaller corpora and sample counts.
        #[arg(long)]
        quick: bool,
    },
    /// Run newline-delimited invocations from a file, one report per line.
    Batch { file: String },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: u8,
    /// Standard output.
    pub stdout: String,
    /// Diagnostics for standard error.
    pub stderr: String,
}

#[derive(Debug)]
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            status: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn budget_error(e: &SumError) -> bool {
    matches!(e, SumError::BudgetExceeded { .. })
}

macro_rules! classify {
    ($t:ty, $budget:expr) => {
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                let budget: fn(&$t) -> bool = $budget;
                Failure {
                    status: if budget(&e) { EXIT_BUDGET } else { EXIT_INPUT },
                    message: e.to_string(),
                }
            }
        }
    };
}

classify!(FieldError, |_| false);
classify!(PolyError, |_| false);
classify!(SumError, budget_error);
classify!(QuadError, |e| matches!(e, QuadError::Sum(s) if budget_error(s)));
classify!(SliceError, |e| matches!(e, SliceError::Sum(s) if budget_error(s)));
classify!(RankError, |e| matches!(e, RankError::Sum(s) if budget_error(s)));
classify!(ExperimentError, ExperimentError::is_budget);

struct Context {
    argv: Vec<String>,
    format: Format,
    seed: u64,
    opts: SumOptions,
}

impl Context {
    fn envelope(&self, command: &str, body: Value) -> Value {
        let mut map = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        map.insert("command".into(), json!(command));
        map.insert("schema".into(), json!(format!("biaslab/v1/{command}")));
        map.insert("invocation".into(), json!(self.argv));
        Value::Object(map)
    }
}

/// Parses `argv` (without the program name) and runs it.
pub fn dispatch<S: AsRef<str>>(argv: &[S]) -> Outcome {
    let argv: Vec<String> = argv.iter().map(|s| s.as_ref().to_string()).collect();
    let cli = match Cli::try_parse_from(std::iter::once("biaslab".to_string()).chain(argv.clone())) {
        Ok(c) => c,
        Err(e) => {
            let shown = e.render().to_string();
            let status = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    return Outcome {
                        status: EXIT_OK,
                        stdout: shown,
                        stderr: String::new(),
                    }
                }
                _ => EXIT_INPUT,
            };
            return Outcome {
                status,
                stdout: String::new(),
                stderr: shown,
            };
        }
    };
    if let Command::Batch { file } = &cli.command {
        return batch(file);
    }
    let ctx = Context {
        argv,
        format: cli.format,
        seed: cli.seed,
        opts: SumOptions {
            budget: cli.budget,
            jobs: cli.jobs,
        },
    };
    match run(&ctx, &cli.command) {
        Ok((status, stdout)) => Outcome {
            status,
            stdout,
            stderr: String::new(),
        },
        Err(f) => Outcome {
            status: f.status,
            stdout: String::new(),
            stderr: format!("error: {}\n", f.message),
        },
    }
}

/// One compact JSON report per non-blank line; failing lines become
/// `{"line", "status", "error"}` records.
pub fn batch(path: &str) -> Outcome {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                status: EXIT_INPUT,
                stdout: String::new(),
                stderr: format!("error: cannot read {path}: {e}\n"),
            }
        }
    };
    let mut stdout = String::new();
    let mut status = EXIT_OK;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record = match shlex::split(line) {
            None => {
                status = status.max(EXIT_INPUT);
                json!({"line": i + 1, "status": EXIT_INPUT, "error": "unbalanced quotes"})
            }
            Some(words) if words.first().map(String::as_str) == Some("batch") => {
                status = status.max(EXIT_INPUT);
                json!({"line": i + 1, "status": EXIT_INPUT, "error": "nested batch"})
            }
            Some(mut words) => {
                if !words.iter().any(|w| w == "--format") {
                    words.extend(["--format".to_string(), "json".to_string()]);
                }
                let out = dispatch(&words);
                status = status.max(out.status);
                match serde_json::from_str::<Value>(&out.stdout) {
                    Ok(v) if !out.stdout.is_empty() => v,
                    _ => json!({
                        "line": i + 1,
                        "status": out.status,
                        "error": out.stderr.trim().trim_start_matches("error: "),
                    }),
                }
            }
        };
        stdout.push_str(&serde_json::to_string(&record).expect("json"));
        stdout.push('\n');
    }
    Outcome {
        status,
        stdout,
        stderr: String::new(),
    }
}

fn parse_input(input: &PolyArgs) -> Result<(FieldSpec, MultiPoly), Failure> {
    let fs = parse_field_descriptor(&input.field)?;
    let poly = parse_poly(&input.poly, &fs, input.nvars)?;
    Ok((fs, poly))
}

fn elem(fs: &FieldSpec, x: FieldElement) -> Value {
    if fs.m() == 1 {
        json!(x.index())
    } else {
        json!(fs.coeffs(x))
    }
}

fn elems(fs: &FieldSpec, v: &[FieldElement]) -> Value {
    Value::Array(v.iter().map(|&x| elem(fs, x)).collect())
}

fn matrix_rows(m: &Matrix) -> Value {
    Value::Array((0..m.rows()).map(|i| elems(m.field(), &m.row(i))).collect())
}

fn render(ctx: &Context, command: &str, body: Value, text: impl FnOnce() -> String) -> Result<String, Failure> {
    match ctx.format {
        Format::Json => Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&ctx.envelope(command, body)).expect("json")
        )),
        Format::Text => Ok(text()),
        Format::Csv => Err(Failure::input(format!(
            "csv output is only available for profile, not {command}"
        ))),
    }
}

fn report_output(ctx: &Context, command: &str, rep: &ExperimentReport) -> Result<(u8, String), Failure> {
    let body = serde_json::to_value(rep).expect("json");
    let status = if rep.passed { EXIT_OK } else { EXIT_ASSERTION };
    Ok((status, render(ctx, command, body, || rep.to_text())?))
}

fn run(ctx: &Context, command: &Command) -> Result<(u8, String), Failure> {
    let opts = &ctx.opts;
    match command {
        Command::Sum { input, n } => {
            let (fs, poly) = parse_input(input)?;
            let cs = count_vector(&poly, *n, opts)?;
            let bias = cs.bias();
            let body = json!({
                "field": fs.descriptor(),
                "n": n,
                "nvars": input.nvars,
                "counts": cs.counts(),
                "magnitude": num(bias.magnitude),
                "magnitude_error_bound": num(bias.magnitude_error_bound),
                "exact_integer": cs.as_integer().map(|v| v.to_string()),
                "is_zero": cs.is_zero(),
                "btilde": num(bias.btilde),
                "b": num(bias.b),
            });
            let text = || {
                format!(
                    "counts = {:?}\nmagnitude = {:.15}\nmagnitude_error_bound = {:e}\nb = {}\n",
                    cs.counts(),
                    bias.magnitude,
                    bias.magnitude_error_bound,
                    bias.b
                )
            };
            Ok((EXIT_OK, render(ctx, "sum", body, text)?))
        }
        Command::Bias { input, n } => {
            let (fs, poly) = parse_input(input)?;
            let bias = count_vector(&poly, *n, opts)?.bias();
            let body = json!({
                "field": fs.descriptor(),
                "n": n,
                "nvars": input.nvars,
                "magnitude": num(bias.magnitude),
                "magnitude_error_bound": num(bias.magnitude_error_bound),
                "btilde": num(bias.btilde),
                "b": num(bias.b),
            });
            let text = || format!("b = {}\nbtilde = {:e}\n", bias.b, bias.btilde);
            Ok((EXIT_OK, render(ctx, "bias", body, text)?))
        }
        Command::Profile { input, nmax } => {
            let (fs, poly) = parse_input(input)?;
            let profile = bias_profile(&poly, *nmax, opts)?;
            if ctx.format == Format::Csv {
                let mut out = Vec::new();
                profile.write_csv(&mut out)?;
                return Ok((EXIT_OK, String::from_utf8(out).expect("utf8")));
            }
            let entries: Vec<Value> = profile
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "n": e.n,
                        "counts": e.sum.counts(),
                        "magnitude": num(e.bias.magnitude),
                        "btilde": num(e.bias.btilde),
                        "b": num(e.bias.b),
                        "running_min_b": num(e.running_min_b),
                    })
                })
                .collect();
            let body = json!({
                "field": fs.descriptor(),
                "nvars": input.nvars,
                "nmax": nmax,
                "entries": entries,
                "truncated_at": profile.truncated_at,
                "min_b": profile.min_b().map(num),
            });
            let text = || {
                let mut s = String::new();
                for e in &profile.entries {
                    s.push_str(&format!("n = {}  b = {}  min = {}\n", e.n, e.bias.b, e.running_min_b));
                }
                if let Some(n) = profile.truncated_at {
                    s.push_str(&format!("truncated at n = {n}\n"));
                }
                s
            };
            Ok((EXIT_OK, render(ctx, "profile", body, text)?))
        }
        Command::Quad { input, n } => {
            let (fs, poly) = parse_input(input)?;
            let (form, _, _) = split_quadratic(&poly)?;
            let canon = canonicalize(&form);
            let rad = radical(&form);
            let cf = closed_form_poly(&poly, *n)?;
            let residual = match canon.residual {
                Residual::None => json!({"kind": "none"}),
                Residual::Diagonal(a) => json!({"kind": "diagonal", "alpha": elem(&fs, a)}),
                Residual::AnisotropicPlane(e) => json!({"kind": "anisotropic_plane", "eps": elem(&fs, e)}),
            };
            let body = json!({
                "field": fs.descriptor(),
                "nvars": input.nvars,
                "n": n,
                "rank": canon.rank,
                "t": canon.t,
                "alpha": canon.alpha().map(|a| elem(&fs, a)),
                "residual": residual,
                "canonical": canon.canonical_poly().to_string(),
                "transform": matrix_rows(&canon.transform),
                "radical_basis": Value::Array(rad.basis.iter().map(|v| elems(&fs, v)).collect()),
                "magnitude_exponent": cf.twice_exponent.map(|e| num(e as f64 / 2.0)),
                "counts": cf.sum.as_ref().map(|s| s.counts().to_vec()),
            });
            let text = || {
                format!(
                    "rank = {}\nt = {}\nresidual = {:?}\ncanonical = {}\n|a_n| = q^({})\n",
                    canon.rank,
                    canon.t,
                    canon.residual,
                    canon.canonical_poly(),
                    cf.twice_exponent
                        .map_or("-inf".to_string(), |e| format!("{}", e as f64 / 2.0))
                )
            };
            Ok((EXIT_OK, render(ctx, "quad", body, text)?))
        }
        Command::Slice { input, r, theta } => slice_command(ctx, input, *r, *theta),
        Command::Rank { input, max_r, ext } => {
            let (fs, poly) = parse_input(input)?;
            let max_r = max_r.unwrap_or(input.nvars);
            let outcome = min_vanishing_codim(&poly, max_r, *ext, opts)?;
            let body = match &outcome {
                RankOutcome::Found(cert) => json!({
                    "field": fs.descriptor(),
                    "found": true,
                    "r": cert.r,
                    "paper_rank": cert.paper_rank,
                    "ext_level": cert.ext_level,
                    "search_field": cert.field.descriptor(),
                    "forms": matrix_rows(&cert.forms),
                    "w_basis": matrix_rows(&cert.w_basis.transpose()),
                    "decomposition": cert
                        .decomposition
                        .iter()
                        .map(|(l, q)| json!([l.to_string(), q.to_string()]))
                        .collect::<Vec<_>>(),
                    "upper_bound_only": cert.upper_bound_only,
                }),
                RankOutcome::NotFound { max_r } => json!({
                    "field": fs.descriptor(),
                    "found": false,
                    "r": null,
                    "paper_rank": null,
                    "max_r": max_r,
                    "ext_level": ext,
                }),
            };
            let text = || match &outcome {
                RankOutcome::Found(cert) => format!(
                    "r = {}\npaper_rank = {}\n{}",
                    cert.r,
                    cert.paper_rank,
                    cert.decomposition
                        .iter()
                        .map(|(l, q)| format!("  ({l}) * ({q})\n"))
                        .collect::<String>()
                ),
                RankOutcome::NotFound { max_r } => format!("no vanishing subspace of codimension <= {max_r}\n"),
            };
            Ok((EXIT_OK, render(ctx, "rank", body, text)?))
        }
        Command::Product { field, nvars, poly } => {
            if poly.len() != 2 {
                return Err(Failure::input(format!(
                    "product needs exactly two --poly factors, got {}",
                    poly.len()
                )));
            }
            let fs = parse_field_descriptor(field)?;
            let a = parse_poly(&poly[0], &fs, *nvars)?;
            let b = parse_poly(&poly[1], &fs, *nvars)?;
            let rep = product_lemma51(&a, &b, opts)?;
            report_output(ctx, "product", &rep)
        }
        Command::Probe { input, nmax, threshold } => {
            let (_, poly) = parse_input(input)?;
            let rep = probe_cor14(&poly, *nmax, *threshold, opts)?;
            report_output(ctx, "probe", &rep)
        }
        Command::Verify { suites, quick } => {
            let cfg = SuiteConfig {
                seed: ctx.seed,
                opts: *opts,
                quick: *quick,
            };
            let rep = run_suite(suites, &cfg)?;
            let status = if rep.passed { EXIT_OK } else { EXIT_ASSERTION };
            let body = serde_json::to_value(&rep).expect("json");
            Ok((status, render(ctx, "verify", body, || rep.to_text())?))
        }
        Command::Batch { .. } => Err(Failure::input("nested batch")),
    }
}

fn reduced_json(r: &ReducedSlice) -> Value {
    json!({
        "w_prime_dim": r.w_prime_dim,
        "w_double_prime_dim": r.w_double_prime_dim,
        "reduced_dim": r.reduced_dim(),
        "reduced": r.reduced.to_string(),
    })
}

fn slice_command(ctx: &Context, input: &PolyArgs, r: usize, theta: Option<usize>) -> Result<(u8, String), Failure> {
    let (fs, poly) = parse_input(input)?;
    let opts = &ctx.opts;
    let s = slice_decompose(&poly, r)?;
    let pencil = pencil_scan(&s, &[], opts)?;
    let mut body = Map::new();
    body.insert("field".into(), json!(fs.descriptor()));
    body.insert("nvars".into(), json!(input.nvars));
    body.insert("r".into(), json!(r));
    body.insert("w_dim".into(), json!(s.w_dim()));
    body.insert(
        "pencil".into(),
        Value::Array(
            pencil
                .directions
                .iter()
                .map(|d| json!({"direction": elems(&fs, &d.direction), "rank": d.rank}))
                .collect(),
        ),
    );
    body.insert("min_rank".into(), json!(pencil.min_rank()));
    let mut status = EXIT_OK;
    let mut lines = vec![format!("min pencil rank = {:?}", pencil.min_rank())];
    if let Some(theta) = theta {
        let report = classify_case(&s, theta, None, opts)?;
        let label = match &report.label {
            CaseLabel::Case0 {
                min_rank,
                bound_twice_exponent,
            } => json!({
                "case": "case0",
                "min_rank": min_rank,
                "bound_twice_exponent": bound_twice_exponent,
            }),
            CaseLabel::Case1 {
                direction,
                restricted,
                reduction,
                ..
            } => json!({
                "case": "case1",
                "direction": elems(&fs, direction),
                "restricted": restricted.to_string(),
                "reduction": reduced_json(reduction),
            }),
            CaseLabel::Case2 {
                directions,
                reduction,
            } => json!({
                "case": "case2",
                "directions": directions.iter().map(|d| elems(&fs, d)).collect::<Vec<_>>(),
                "reduction": reduced_json(reduction),
            }),
        };
        lines.push(format!("case = {}", report.label.name()));
        body.insert("theta".into(), json!(theta));
        body.insert("case".into(), label);
    }
    if r == 1 {
        let d = lemma32_dichotomy(&poly)?;
        let value = match &d {
            Dichotomy::Bound {
                rank,
                slices,
                bound_twice_exponent,
            } => json!({
                "branch": "bound",
                "rank": rank,
                "bound_twice_exponent": bound_twice_exponent,
                "slices": slices
                    .iter()
                    .map(|(x, e)| json!({"x": elem(&fs, *x), "twice_exponent": e}))
                    .collect::<Vec<_>>(),
            }),
            Dichotomy::Vanishing { rank } => json!({"branch": "vanishing", "rank": rank}),
            Dichotomy::Reduction { rank, forms, cubic } => json!({
                "branch": "reduction",
                "rank": rank,
                "forms": matrix_rows(forms),
                "cubic": cubic.to_string(),
            }),
        };
        lines.push(format!("dichotomy = {}", d.name()));
        body.insert("dichotomy".into(), value);
    }
    // the exhaustive identity check runs only when it fits the budget
    if opts.check(fs.q(), input.nvars as u64).is_ok() {
        let check = slice_identity_check(&s, opts)?;
        if !check.all_hold() {
            status = EXIT_ASSERTION;
        }
        lines.push(format!("slice identity holds = {}", check.all_hold()));
        body.insert(
            "identity".into(),
            json!({
                "holds": check.identity_holds,
                "all_directions_hold": check.all_hold(),
                "counts": check.full.counts(),
            }),
        );
    }
    let text = || lines.join("\n") + "\n";
    Ok((status, render(ctx, "slice", Value::Object(body), text)?))
}
