//! Slice decomposition of cubics, pencil ranks and the case analysis.
//!
//! ```bash
//! cargo run -p biaslab --example cubic_slices
//! ```

use biaslab::char_sum::SumOptions;
use biaslab::cubic_slice::{
    classify_case, lemma32_dichotomy, pencil_scan, slice_decompose, slice_identity_check,
};
use biaslab::field::FieldSpec;
use biaslab::poly::parse_poly;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f5 = FieldSpec::prime(5)?;
    let opts = SumOptions::default();

    // P = x1 (y1^2 + y2 y3) + x2 y1 y2 with slicing variables x1, x2
    let p = parse_poly("x1*x3^2 + x1*x4*x5 + x2*x3*x4", &f5, 5)?;
    let s = slice_decompose(&p, 2)?;
    assert_eq!(s.reconstruct(), p);
    let pencil = pencil_scan(&s, &[1, 2], &opts)?;
    for d in &pencil.directions {
        println!("direction {:?}: rank {}", d.direction, d.rank);
    }
    for t in &pencil.thresholds {
        println!("U_{} has {} members spanning dimension {}", t.theta, t.members.len(), t.span_dim);
    }
    for theta in [0, 2, 3] {
        let case = classify_case(&s, theta, None, &opts)?;
        println!("theta = {theta}: {}", case.label.name());
    }

    let check = slice_identity_check(&s, &opts)?;
    println!(
        "a_1 = {:?}, slices reassemble: {}, magnitude law: {}",
        check.full.counts(),
        check.identity_holds,
        check.all_hold()
    );

    // x1 * R: which branch of the rank dichotomy applies
    for text in ["x1*x2^2 + x1*x3*x4", "x1*x2*x3 + x1^2*x4", "x1*x2^2 + x1*x3^2 + x1*x4^2"] {
        let p = parse_poly(text, &f5, 4)?;
        println!("{text}: {}", lemma32_dichotomy(&p)?.name());
    }
    Ok(())
}
