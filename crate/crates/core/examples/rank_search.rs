//! Smallest codimension of a subspace where a cubic vanishes, with the
//! matching decomposition `P = sum l_i R_i`.
//!
//! ```bash
//! cargo run -p biaslab --example rank_search
//! ```

use biaslab::char_sum::SumOptions;
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;
use biaslab::rank_search::{linear_divisor, min_vanishing_codim, RankOutcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = SumOptions::default();
    let f7 = FieldSpec::prime(7)?;
    let f3 = FieldSpec::prime(3)?;

    let fermat = parse_poly("x1^3 + x2^3 + x3^3", &f7, 3)?;
    report("Fermat cubic over F_7", min_vanishing_codim(&fermat, 3, 1, &opts)?);

    let xyz = parse_poly("x1*x2*x3 + x1^2*x2", &f3, 3)?;
    if let Some((l, r)) = linear_divisor(&xyz)? {
        println!("linear factor: ({l}) * ({r})");
    }

    // irreducible over F_3, splits over F_27
    let binary = parse_poly("x1^3 - x1*x2^2 - x2^3", &f3, 2)?;
    for ext in [1, 3] {
        report(&format!("binary cubic over F_3, ext {ext}"), min_vanishing_codim(&binary, 2, ext, &opts)?);
    }
    Ok(())
}

fn report(label: &str, outcome: RankOutcome) {
    match outcome {
        RankOutcome::Found(cert) => {
            println!("{label}: r = {} (doubled convention {})", cert.r, cert.paper_rank);
            for (l, q) in &cert.decomposition {
                println!("  ({l}) * ({q})");
            }
        }
        RankOutcome::NotFound { max_r } => println!("{label}: nothing up to r = {max_r}"),
    }
}
