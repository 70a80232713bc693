//! Products, squared quadratics, low-rank scans and the verification
//! suites.
//!
//! ```bash
//! cargo run --release -p biaslab --example experiments
//! ```

use biaslab::char_sum::SumOptions;
use biaslab::experiments::{
    probe_cor14, product_lemma51, quartic_square_scan, run_suite, theorem31_scan, SuiteConfig,
    LowRankScanConfig,
};
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f5 = FieldSpec::prime(5)?;
    let opts = SumOptions::default();

    let q = parse_poly("x1", &f5, 3)?;
    let r = parse_poly("x2*x3", &f5, 3)?;
    print!("{}", product_lemma51(&q, &r, &opts)?.to_text());

    print!("{}", quartic_square_scan(&f5, &[2, 4], &opts)?.to_text());

    let p = parse_poly("x1*x2^2 + x2*x1^2", &f5, 2)?;
    print!("{}", probe_cor14(&p, 3, 1.0, &opts)?.to_text());

    let cfg = LowRankScanConfig {
        field: f5.clone(),
        nvars: 4,
        r: 1,
        samples: 20,
        n_max: 2,
        seed: 42,
    };
    let scan = theorem31_scan(&cfg, &opts)?;
    println!("measured t over {} samples: {}", cfg.samples, scan.measured["measured_t"]);

    let suites = ["known-sums".to_string(), "gauss-magnitude".to_string()];
    let suite = run_suite(&suites, &SuiteConfig::default())?;
    print!("{}", suite.to_text());
    Ok(())
}
