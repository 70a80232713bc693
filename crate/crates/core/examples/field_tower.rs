//! Arithmetic in `F_9 = F_3[g]/(g^2 + 1)`-style towers: embedding, trace and
//! Frobenius.
//!
//! ```bash
//! cargo run -p biaslab --example field_tower
//! ```

use biaslab::field::{build_field, build_tower, parse_field_descriptor, trace_to_prime};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f3 = build_field(3, 1, None)?;
    let (f27, emb) = build_tower(&f3, 3)?;
    println!("{f3} -> {f27}, degree {}", emb.degree());

    let g = f27.alpha();
    let frob = f27.frobenius(g)?;
    println!("g = {g:?}, g^3 = {frob:?}");
    println!("tr(g) over F_3 = {:?}", emb.trace(g)?);

    // the trace of an embedded base element is n times itself
    let two = f3.from_int(2);
    let lifted = emb.embed(two)?;
    println!("tr(embed(2)) = {:?}", emb.trace(lifted)?);
    assert_eq!(emb.restrict(lifted), Some(two));

    // custom modulus: x^2 + x + 2 over F_5
    let f25 = parse_field_descriptor("5^2:2,1")?;
    let a = f25.alpha();
    let a2 = f25.mul(a, a)?;
    println!("in {f25}: a^2 = {a2:?}, tr(a) = {:?}", trace_to_prime(&f25, a)?);
    Ok(())
}
