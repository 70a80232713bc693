//! Exact character sums `a_n(P)` as count vectors.
//!
//! ```bash
//! cargo run -p biaslab --example character_sums
//! ```

use biaslab::char_sum::{count_vector, restricted_count, SumOptions};
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f5 = FieldSpec::prime(5)?;
    let opts = SumOptions::default();
    let p = parse_poly("x1*x2*x3", &f5, 3)?;

    for n in 1..=2 {
        let cs = count_vector(&p, n, &opts)?;
        let m = cs.magnitude();
        println!(
            "a_{n}(x1 x2 x3): counts {:?}, |a| = {} (+/- {:e}), integer {:?}",
            cs.counts(),
            m.value,
            m.error_bound,
            cs.as_integer()
        );
    }

    // the slice x1 = 1 of x1*x2*x3 is x2*x3, whose sum is q
    let one = f5.one();
    let slice = restricted_count(&p, &[(vec![one, f5.zero(), f5.zero()], one)], 1, &opts)?;
    println!("slice x1 = 1: {:?} -> {:?}", slice.counts(), slice.as_integer());

    // a linear form is perfectly balanced
    let lin = parse_poly("x1 + 2*x2", &f5, 2)?;
    let cs = count_vector(&lin, 1, &opts)?;
    println!("x1 + 2 x2: counts {:?}, zero = {}", cs.counts(), cs.is_zero());

    // extension-field coefficients: g is the generator of F_9
    let f9 = biaslab::field::parse_field_descriptor("3^2")?;
    let q = parse_poly("g*x1^2 + x2^2", &f9, 2)?;
    let cs = count_vector(&q, 1, &opts)?;
    println!("over F_9, g x1^2 + x2^2: |a_1| = {}", cs.magnitude().value);
    Ok(())
}
