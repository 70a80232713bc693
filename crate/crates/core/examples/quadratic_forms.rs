//! Canonical forms, radicals and closed-form sums of quadratics.
//!
//! ```bash
//! cargo run -p biaslab --example quadratic_forms
//! ```

use biaslab::char_sum::{count_vector, SumOptions};
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;
use biaslab::quadratic::{canonicalize, closed_form_poly, gauss_counts, radical, QuadraticForm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f5 = FieldSpec::prime(5)?;
    let f3 = FieldSpec::prime(3)?;
    let opts = SumOptions::default();

    for (fs, n, text) in [
        (&f5, 2, "x1^2 + x1*x2"),
        (&f3, 2, "x1^2 + x2^2"),
        (&f5, 3, "x1^2 + 2*x1*x2 + x2^2 + x3^2"),
        (&f5, 3, "x1*x2 + 3*x3^2"),
    ] {
        let poly = parse_poly(text, fs, n)?;
        let q = QuadraticForm::from_poly(&poly)?;
        let canon = canonicalize(&q);
        let rad = radical(&q);
        println!(
            "F_{}: {text}\n  rank {}, t = {}, residual {:?}\n  canonical {}\n  radical {:?}",
            fs.q(),
            canon.rank,
            canon.t,
            canon.residual,
            canon.canonical_poly(),
            rad.basis
        );
    }

    // closed form against enumeration, including a linear part
    let poly = parse_poly("x1*x2 + x3^2 + x1 + 4", &f5, 3)?;
    let cf = closed_form_poly(&poly, 1)?;
    let enumerated = count_vector(&poly, 1, &opts)?;
    println!(
        "closed form |a_1| = {}, enumerated {}, counts equal: {}",
        cf.magnitude(5),
        enumerated.magnitude().value,
        cf.sum.as_ref() == Some(&enumerated)
    );

    // a linear part off the radical's annihilator kills the sum
    let poly = parse_poly("x1^2 + x2", &f5, 2)?;
    println!("x1^2 + x2 vanishes: {}", closed_form_poly(&poly, 1)?.is_zero());

    for a in 1..5 {
        let g = gauss_counts(&f5, f5.from_int(a), 1)?;
        println!("Gauss sum, alpha = {a}: {:?}, |G| = {:.12}", g.counts(), g.magnitude().value);
    }
    Ok(())
}
