//! Bias `b_n(P)` for a few polynomials and a CSV profile on stdout.
//!
//! ```bash
//! cargo run -p biaslab --example bias_profile
//! ```

use biaslab::char_sum::{bias_profile, count_vector, SumOptions};
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f3 = FieldSpec::prime(3)?;
    let opts = SumOptions::default();
    for text in ["x1*x2", "x1^2", "x1*x2*x3", "x1^3 + x2^3 + x3^3", "x1"] {
        let p = parse_poly(text, &f3, 3)?;
        let b = count_vector(&p, 1, &opts)?.bias();
        println!("{text:>22}: |a_1| = {:>8.4}, b_1 = {}", b.magnitude, b.b);
    }

    // levels past the budget are dropped and reported
    let p = parse_poly("x1*x2*x3 + x4^2", &f3, 4)?;
    let profile = bias_profile(&p, 4, &SumOptions::with_budget(1_000_000))?;
    println!("min b = {:?}, truncated at {:?}", profile.min_b(), profile.truncated_at);
    profile.write_csv(std::io::stdout())?;
    Ok(())
}
